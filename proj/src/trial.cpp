#include "r2dt/trial.hpp"

#include <algorithm>
#include <cmath>

#include "r2dt/errors.hpp"

namespace r2dt {

namespace {

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }
bool in_open_unit_interval(double v) { return v > 0.0 && v < 1.0; }

std::vector<std::size_t> admissible_indices(const std::vector<DoseDiagnostics>& diag) {
    std::vector<std::size_t> out;
    for (std::size_t d = 0; d < diag.size(); ++d)
        if (diag[d].admissible) out.push_back(d);
    return out;
}

struct Choice {
    bool stop;
    std::size_t dose;
};

Choice choose(const std::vector<DoseDiagnostics>& diag, DesignVariant variant) {
    const auto admissible = admissible_indices(diag);
    if (admissible.empty()) return {true, 0};
    std::vector<double> eu;
    eu.reserve(diag.size());
    for (const auto& d : diag) eu.push_back(d.expectedUtility);
    if (variant == DesignVariant::UtilityTrialStop) {
        std::vector<std::size_t> all(diag.size());
        for (std::size_t d = 0; d < all.size(); ++d) all[d] = d;
        return {false, argmax_lowest(eu, all)};
    }
    return {false, argmax_lowest(eu, admissible)};
}

}  // namespace

std::string to_string(DesignVariant v) {
    switch (v) {
        case DesignVariant::ConventionalAdmissibility:
            return "ConventionalAdmissibility";
        case DesignVariant::UtilityAdmissibility:
            return "UtilityAdmissibility";
        case DesignVariant::UtilityTrialStop:
            return "UtilityTrialStop";
    }
    return "?";
}

DesignVariant design_variant_from_string(const std::string& s) {
    if (s == "ConventionalAdmissibility") return DesignVariant::ConventionalAdmissibility;
    if (s == "UtilityAdmissibility") return DesignVariant::UtilityAdmissibility;
    if (s == "UtilityTrialStop") return DesignVariant::UtilityTrialStop;
    throw InvalidConfig("unknown design variant '" + s + "'");
}

std::string to_string(TrialStatus s) {
    switch (s) {
        case TrialStatus::Running:
            return "Running";
        case TrialStatus::StoppedNoDose:
            return "StoppedNoDose";
        case TrialStatus::CompletedSelected:
            return "CompletedSelected";
    }
    return "?";
}

double DesignConfig::utility_threshold() const {
    return joint_utility(utilityStop.refPointE, utilityStop.refPointT, utility);
}

void validate(const DesignConfig& cfg, const DoseGrid& grid) {
    validate(cfg.utility);
    const auto& c = cfg.conventional;
    if (!in_unit_interval(c.piAddE) || !in_unit_interval(c.piAddT))
        throw InvalidConfig("admissibility cut points must lie in [0,1]");
    if (!in_open_unit_interval(c.pE) || !in_open_unit_interval(c.pT))
        throw InvalidConfig("admissibility evidence levels must lie in (0,1)");
    const auto& u = cfg.utilityStop;
    if (!in_unit_interval(u.refPointE) || !in_unit_interval(u.refPointT))
        throw InvalidConfig("stopping-contour point must lie in [0,1]^2");
    if (!in_open_unit_interval(u.pU)) throw InvalidConfig("pU must lie in (0,1)");
    if (cfg.cohortSize < 1) throw InvalidConfig("cohort size must be at least 1");
    if (cfg.maxN < cfg.cohortSize || cfg.maxN % cfg.cohortSize != 0)
        throw InvalidConfig("maximum sample size must be a positive multiple of the cohort size");
    if (cfg.startDoseIndex >= grid.size()) throw InvalidConfig("start dose outside the grid");
}

bool Decision::operator==(const Decision& o) const {
    if (kind != o.kind || doseIndex != o.doseIndex || proposedIndex != o.proposedIndex ||
        diagnostics.size() != o.diagnostics.size())
        return false;
    for (std::size_t i = 0; i < diagnostics.size(); ++i) {
        const auto& a = diagnostics[i];
        const auto& b = o.diagnostics[i];
        if (a.expectedUtility != b.expectedUtility || a.admissible != b.admissible ||
            a.probEfficacyBelow != b.probEfficacyBelow ||
            a.probToxicityAbove != b.probToxicityAbove ||
            a.probUtilityBelow != b.probUtilityBelow)
            return false;
    }
    return true;
}

std::vector<DoseDiagnostics> evaluate_doses(const PosteriorDraws& draws, const DoseGrid& grid,
                                            const DesignConfig& cfg) {
    if (draws.size() == 0) throw InvalidParams("no posterior draws");
    const JointUtility u(cfg.utility);
    const double uRef = u(cfg.utilityStop.refPointE, cfg.utilityStop.refPointT);
    const double n = static_cast<double>(draws.size());
    const auto& c = cfg.conventional;

    std::vector<DoseDiagnostics> out(grid.size());
    for (std::size_t d = 0; d < grid.size(); ++d) {
        const double x = grid.transformed[d];
        double sumU = 0.0;
        std::size_t effBelow = 0, toxAbove = 0, utilBelow = 0;
        for (const auto& th : draws.draws) {
            const double piE = prob_efficacy(th, x);
            const double piT = prob_toxicity(th, x);
            const double v = u(piE, piT);
            sumU += v;
            effBelow += piE < c.piAddE;
            toxAbove += piT > c.piAddT;
            utilBelow += v < uRef;
        }
        auto& diag = out[d];
        diag.expectedUtility = sumU / n;
        diag.probEfficacyBelow = effBelow / n;
        diag.probToxicityAbove = toxAbove / n;
        diag.probUtilityBelow = utilBelow / n;
        if (cfg.variant == DesignVariant::ConventionalAdmissibility) {
            diag.admissible = !(diag.probEfficacyBelow > 1.0 - c.pE ||
                                diag.probToxicityAbove > 1.0 - c.pT);
        } else {
            diag.admissible = !(diag.probUtilityBelow > 1.0 - cfg.utilityStop.pU);
        }
    }
    return out;
}

std::vector<std::size_t> admissible_set_conventional(const PosteriorDraws& draws,
                                                     const DoseGrid& grid,
                                                     const DesignConfig& cfg) {
    DesignConfig c = cfg;
    c.variant = DesignVariant::ConventionalAdmissibility;
    return admissible_indices(evaluate_doses(draws, grid, c));
}

std::vector<std::size_t> admissible_set_utility(const PosteriorDraws& draws,
                                                const DoseGrid& grid, const DesignConfig& cfg) {
    DesignConfig c = cfg;
    c.variant = DesignVariant::UtilityAdmissibility;
    return admissible_indices(evaluate_doses(draws, grid, c));
}

std::size_t apply_no_skip(std::size_t proposedIndex,
                          std::optional<std::size_t> highestTriedIndex, std::size_t startDose) {
    if (!highestTriedIndex) return startDose;
    return std::min(proposedIndex, *highestTriedIndex + 1);
}

std::size_t argmax_lowest(std::span<const double> values, std::span<const std::size_t> candidates) {
    if (candidates.empty()) throw InvalidParams("argmax over an empty candidate set");
    double best = values[candidates.front()];
    for (std::size_t c : candidates) best = std::max(best, values[c]);
    std::size_t pick = static_cast<std::size_t>(-1);
    for (std::size_t c : candidates)
        if (values[c] >= best - 1e-9) pick = std::min(pick, c);
    return pick;
}

Decision next_decision(const TrialState& state, const PosteriorDraws& draws, const DoseGrid& grid,
                       const DesignConfig& cfg) {
    if (state.status != TrialStatus::Running) throw OutOfOrder("trial is not running");
    Decision dec;
    dec.diagnostics = evaluate_doses(draws, grid, cfg);
    const Choice ch = choose(dec.diagnostics, cfg.variant);
    if (ch.stop) {
        dec.kind = Decision::Kind::StopNoDose;
        return dec;
    }
    dec.kind = Decision::Kind::TreatAt;
    dec.proposedIndex = ch.dose;
    dec.doseIndex = apply_no_skip(ch.dose, state.highestTriedIndex, cfg.startDoseIndex);
    return dec;
}

Decision final_selection(const TrialState& /*state*/, const PosteriorDraws& draws,
                         const DoseGrid& grid, const DesignConfig& cfg) {
    Decision dec;
    dec.diagnostics = evaluate_doses(draws, grid, cfg);
    const Choice ch = choose(dec.diagnostics, cfg.variant);
    if (ch.stop) {
        dec.kind = Decision::Kind::StopNoDose;
        return dec;
    }
    dec.kind = Decision::Kind::TreatAt;
    dec.doseIndex = dec.proposedIndex = ch.dose;
    return dec;
}

Decision opening_decision(const DesignConfig& cfg, std::size_t numDoses) {
    Decision dec;
    dec.kind = Decision::Kind::TreatAt;
    dec.doseIndex = dec.proposedIndex = cfg.startDoseIndex;
    dec.diagnostics.resize(numDoses);
    return dec;
}

TrialState record_cohort(TrialState state, std::size_t doseIndex,
                         std::span<const Outcome> outcomes, const DesignConfig& cfg,
                         const DoseGrid& grid) {
    if (state.status != TrialStatus::Running) throw OutOfOrder("trial is not running");
    if (reached_max_sample_size(state, cfg))
        throw InvalidCohort("maximum sample size already reached");
    if (static_cast<int>(outcomes.size()) != cfg.cohortSize)
        throw InvalidCohort("cohort must contain exactly " + std::to_string(cfg.cohortSize) +
                            " outcomes");
    if (doseIndex >= grid.size()) throw InvalidCohort("dose index outside the grid");
    for (const auto& o : outcomes) {
        if ((o.yE != 0 && o.yE != 1) || (o.yT != 0 && o.yT != 1))
            throw InvalidCohort("outcomes must be 0 or 1");
        state.data.records.push_back({doseIndex, o.yE, o.yT});
    }
    state.cohortsDone += 1;
    state.highestTriedIndex =
        state.highestTriedIndex ? std::max(*state.highestTriedIndex, doseIndex) : doseIndex;
    return state;
}

bool reached_max_sample_size(const TrialState& state, const DesignConfig& cfg) {
    return state.cohortsDone * cfg.cohortSize >= cfg.maxN;
}

TrialState conclude(TrialState state, const Decision& decision, bool finalAnalysis) {
    if (decision.stops()) {
        state.status = TrialStatus::StoppedNoDose;
        state.selectedDose.reset();
    } else if (finalAnalysis) {
        state.status = TrialStatus::CompletedSelected;
        state.selectedDose = decision.doseIndex;
    }
    return state;
}

Step decide(const TrialState& state, const DoseGrid& grid, const PriorSpec& prior,
            const DesignConfig& cfg, const McmcConfig& mcmc) {
    if (state.status != TrialStatus::Running) throw OutOfOrder("trial is not running");
    if (state.cohortsDone == 0) return {opening_decision(cfg, grid.size()), state};
    const PosteriorDraws draws = sample_posterior(state.data, prior, grid, mcmc);
    const bool final = reached_max_sample_size(state, cfg);
    Decision dec = final ? final_selection(state, draws, grid, cfg)
                         : next_decision(state, draws, grid, cfg);
    return {dec, conclude(state, dec, final)};
}

}  // namespace r2dt
