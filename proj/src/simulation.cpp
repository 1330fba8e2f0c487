#include "r2dt/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <thread>

#include "r2dt/errors.hpp"
#include "r2dt/rng.hpp"

namespace r2dt {

namespace {

// Attempts per interim analysis before an MCMC diagnostic failure is fatal.
constexpr int kMcmcAttempts = 3;

PosteriorDraws sample_with_retry(const TrialData& data, const PriorSpec& prior,
                                 const DoseGrid& grid, McmcConfig cfg, std::uint64_t seed) {
    for (int attempt = 0;; ++attempt) {
        cfg.seed = attempt == 0 ? seed : mix_seed({seed, static_cast<std::uint64_t>(attempt)});
        try {
            return sample_posterior(data, prior, grid, cfg);
        } catch (const McmcDiagnosticError&) {
            if (attempt + 1 >= kMcmcAttempts) throw;
        }
    }
}

std::optional<std::size_t> selection_of(const Decision& d) {
    if (d.stops()) return std::nullopt;
    return d.doseIndex;
}

Scenario make_scenario(int id, std::vector<double> eff, std::vector<double> tox) {
    return {id, "Scenario " + std::to_string(id), std::move(eff), std::move(tox)};
}

}  // namespace

void validate(const Scenario& s, std::size_t numDoses) {
    if (s.trueEff.size() != numDoses || s.trueTox.size() != numDoses)
        throw InvalidConfig("scenario " + std::to_string(s.id) +
                            " must give one efficacy and one toxicity probability per dose");
    for (std::size_t d = 0; d < numDoses; ++d) {
        if (!(s.trueEff[d] >= 0.0 && s.trueEff[d] <= 1.0) ||
            !(s.trueTox[d] >= 0.0 && s.trueTox[d] <= 1.0))
            throw InvalidConfig("scenario probabilities must lie in [0,1]");
    }
}

std::vector<Scenario> reference_scenarios() {
    return {
        make_scenario(1, {0.30, 0.57, 0.75, 0.85}, {0.05, 0.08, 0.12, 0.15}),
        make_scenario(2, {0.37, 0.45, 0.51, 0.55}, {0.05, 0.08, 0.12, 0.15}),
        make_scenario(3, {0.30, 0.57, 0.75, 0.85}, {0.05, 0.13, 0.23, 0.35}),
        make_scenario(4, {0.37, 0.45, 0.51, 0.55}, {0.05, 0.13, 0.23, 0.35}),
        make_scenario(5, {0.55, 0.75, 0.85, 0.90}, {0.35, 0.42, 0.47, 0.51}),
        make_scenario(6, {0.60, 0.62, 0.63, 0.64}, {0.26, 0.35, 0.42, 0.48}),
        make_scenario(7, {0.26, 0.60, 0.70, 0.70}, {0.05, 0.13, 0.23, 0.35}),
        make_scenario(8, {0.26, 0.60, 0.70, 0.70}, {0.18, 0.35, 0.50, 0.62}),
        make_scenario(9, {0.55, 0.75, 0.85, 0.90}, {0.45, 0.57, 0.64, 0.70}),
        make_scenario(10, {0.20, 0.30, 0.38, 0.45}, {0.05, 0.08, 0.12, 0.15}),
    };
}

std::vector<DesignConfig> reference_designs() {
    std::vector<DesignConfig> out;
    auto add = [&](std::string name, DesignVariant v, JointUtilityParams u, UtilityStopRule stop) {
        DesignConfig d;
        d.name = std::move(name);
        d.variant = v;
        d.utility = u;
        d.utilityStop = stop;
        out.push_back(d);
    };
    const auto r2dt = default_r2dt_params();
    const auto efftox = efftoxu_params(0.25, 0.15);
    const UtilityStopRule pI{0.5, 0.35, 0.1}, pII{0.7, 0.4, 0.1}, pIII{0.9, 0.4, 0.1};
    add("R2DT1", DesignVariant::ConventionalAdmissibility, r2dt, pI);
    add("EFFTOXU2", DesignVariant::ConventionalAdmissibility, efftox, pI);
    add("R2DT3i", DesignVariant::UtilityAdmissibility, r2dt, pI);
    add("R2DT3ii", DesignVariant::UtilityAdmissibility, r2dt, pII);
    add("R2DT3iii", DesignVariant::UtilityAdmissibility, r2dt, pIII);
    add("R2DT4i", DesignVariant::UtilityTrialStop, r2dt, pI);
    add("R2DT4ii", DesignVariant::UtilityTrialStop, r2dt, pII);
    add("R2DT4iii", DesignVariant::UtilityTrialStop, r2dt, pIII);
    add("EFFTOXU5", DesignVariant::UtilityAdmissibility, efftox, pI);
    add("EFFTOXU7", DesignVariant::ConventionalAdmissibility, efftoxu_params(0.5, 0.3), pI);
    return out;
}

DesignConfig reference_design(const std::string& name) {
    for (auto& d : reference_designs())
        if (d.name == name) return d;
    throw InvalidConfig("unknown design '" + name + "'");
}

OutcomeTable::OutcomeTable(int reps, int maxN, std::size_t numDoses)
    : reps_(reps), maxN_(maxN), numDoses_(numDoses) {
    if (reps < 0 || maxN < 0) throw InvalidConfig("outcome table dimensions must be non-negative");
    cells_.assign(static_cast<std::size_t>(reps) * static_cast<std::size_t>(maxN) * numDoses, 0);
}

std::size_t OutcomeTable::offset(int replicate, int slot, std::size_t dose) const {
    if (replicate < 0 || replicate >= reps_ || slot < 0 || slot >= maxN_ || dose >= numDoses_)
        throw InvalidParams("outcome table index out of range");
    return (static_cast<std::size_t>(replicate) * maxN_ + slot) * numDoses_ + dose;
}

Outcome OutcomeTable::at(int replicate, int slot, std::size_t dose) const {
    const auto c = cells_[offset(replicate, slot, dose)];
    return {c & 1, (c >> 1) & 1};
}

void OutcomeTable::set(int replicate, int slot, std::size_t dose, Outcome o) {
    cells_[offset(replicate, slot, dose)] =
        static_cast<std::uint8_t>((o.yE ? 1 : 0) | (o.yT ? 2 : 0));
}

OutcomeTable generate_outcomes(const Scenario& scenario, int reps, int maxN, std::uint64_t seed) {
    const std::size_t k = scenario.trueEff.size();
    validate(scenario, k);
    OutcomeTable table(reps, maxN, k);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int r = 0; r < reps; ++r) {
        Rng rng = make_stream({seed, static_cast<std::uint64_t>(scenario.id),
                               static_cast<std::uint64_t>(r),
                               static_cast<std::uint64_t>(StreamPurpose::Outcomes)});
        for (int i = 0; i < maxN; ++i)
            for (std::size_t d = 0; d < k; ++d) {
                const int yE = unif(rng) < scenario.trueEff[d];
                const int yT = unif(rng) < scenario.trueTox[d];
                table.set(r, i, d, {yE, yT});
            }
    }
    return table;
}

std::uint64_t ReplicateSeeds::mcmc_seed(int patientsObserved) const {
    return mix_seed({studySeed, static_cast<std::uint64_t>(scenarioId),
                     static_cast<std::uint64_t>(replicate),
                     static_cast<std::uint64_t>(patientsObserved)});
}

ReplicateResult run_replicate(const DesignConfig& design, const OutcomeTable& outcomes,
                              int replicate, const DoseGrid& grid, const PriorSpec& prior,
                              const McmcConfig& mcmc, const ReplicateSeeds& seeds) {
    validate(design, grid);
    if (outcomes.num_doses() != grid.size()) throw InvalidConfig("outcome table dose mismatch");
    if (outcomes.max_n() < design.maxN) throw InvalidConfig("outcome table shorter than maxN");

    ReplicateResult res;
    res.patientsPerDose.assign(grid.size(), 0);
    res.interimSelection.assign(static_cast<std::size_t>(design.maxN / design.cohortSize),
                                std::nullopt);

    TrialState state;
    Decision dec = opening_decision(design, grid.size());
    while (state.status == TrialStatus::Running) {
        const std::size_t dose = dec.doseIndex;
        std::vector<Outcome> cohort;
        for (int j = 0; j < design.cohortSize; ++j)
            cohort.push_back(outcomes.at(replicate, state.patients() + j, dose));
        state = record_cohort(std::move(state), dose, cohort, design, grid);
        res.patientsPerDose[dose] += design.cohortSize;

        const PosteriorDraws draws =
            sample_with_retry(state.data, prior, grid, mcmc, seeds.mcmc_seed(state.patients()));
        const bool final = reached_max_sample_size(state, design);
        const Decision sel = final_selection(state, draws, grid, design);
        res.interimSelection[static_cast<std::size_t>(state.cohortsDone - 1)] = selection_of(sel);

        dec = final ? sel : next_decision(state, draws, grid, design);
        state = conclude(std::move(state), dec, final);
        res.trajectory.push_back({state.cohortsDone, dose, std::move(cohort), dec, false});
        if (!final && dec.stops()) res.stoppedEarly = true;
    }
    res.finalDecision = dec;
    res.finalState = std::move(state);
    return res;
}

ReplicateSummary summarise(const ReplicateResult& r) {
    return {r.selected(), r.stoppedEarly, r.patientsPerDose, r.interimSelection};
}

OperatingCharacteristics operating_characteristics(
    const std::vector<ReplicateSummary>& replicates, std::size_t numDoses) {
    OperatingCharacteristics oc;
    oc.reps = static_cast<int>(replicates.size());
    oc.selectionPercent.assign(numDoses, 0.0);
    oc.meanPatients.assign(numDoses, 0.0);
    if (replicates.empty()) return oc;
    const double n = static_cast<double>(replicates.size());
    int nds = 0;
    for (const auto& r : replicates) {
        if (r.selected)
            oc.selectionPercent[*r.selected] += 1.0;
        else
            ++nds;
        for (std::size_t d = 0; d < numDoses; ++d) oc.meanPatients[d] += r.patientsPerDose[d];
    }
    for (std::size_t d = 0; d < numDoses; ++d) {
        oc.selectionPercent[d] *= 100.0 / n;
        oc.meanPatients[d] /= n;
    }
    oc.noDoseSelectedPercent = 100.0 * nds / n;
    return oc;
}

SelectionCurve selection_curve(const std::vector<ReplicateSummary>& replicates,
                               std::size_t numDoses, int cohortSize) {
    SelectionCurve c;
    if (replicates.empty()) return c;
    const std::size_t points = replicates.front().interimSelection.size();
    const double n = static_cast<double>(replicates.size());
    c.fraction.assign(points, std::vector<double>(numDoses, 0.0));
    c.noDoseFraction.assign(points, 0.0);
    for (std::size_t i = 0; i < points; ++i) {
        c.sampleSizes.push_back(static_cast<int>(i + 1) * cohortSize);
        for (const auto& r : replicates) {
            if (r.interimSelection[i])
                c.fraction[i][*r.interimSelection[i]] += 1.0 / n;
            else
                c.noDoseFraction[i] += 1.0 / n;
        }
    }
    return c;
}

std::optional<std::size_t> optimal_dose_oracle(const Scenario& scenario,
                                               const JointUtilityParams& up,
                                               const ConventionalThresholds& thresholds) {
    const JointUtility u(up);
    std::optional<std::size_t> best;
    double bestU = -1.0;
    for (std::size_t d = 0; d < scenario.trueEff.size(); ++d) {
        if (scenario.trueTox[d] > thresholds.piAddT || scenario.trueEff[d] < thresholds.piAddE)
            continue;
        const double v = u(scenario.trueEff[d], scenario.trueTox[d]);
        if (!best || v > bestU + 1e-9) {
            best = d;
            bestU = v;
        }
    }
    return best;
}

void validate(const StudyConfig& cfg) {
    validate(cfg.prior);
    validate(cfg.mcmc);
    if (cfg.grid.size() == 0) throw InvalidDoseGrid("empty dose grid");
    if (cfg.reps < 1) throw InvalidConfig("replicate count must be at least 1");
    if (cfg.designs.empty()) throw InvalidConfig("no designs selected");
    if (cfg.scenarios.empty()) throw InvalidConfig("no scenarios selected");
    if (cfg.parallelism < 0) throw InvalidConfig("parallelism must be non-negative");
    for (const auto& d : cfg.designs) validate(d, cfg.grid);
    for (const auto& s : cfg.scenarios) validate(s, cfg.grid.size());
}

const StudyCell& StudyResult::cell(int scenarioId, const std::string& design) const {
    for (const auto& c : cells)
        if (c.scenarioId == scenarioId && c.design == design) return c;
    throw InvalidParams("no result for scenario " + std::to_string(scenarioId) + " and design " +
                        design);
}

StudyResult run_study(const StudyConfig& cfg, const ProgressCallback& progress) {
    validate(cfg);
    const std::size_t nS = cfg.scenarios.size();
    const std::size_t nD = cfg.designs.size();
    const std::size_t k = cfg.grid.size();
    int maxN = 0;
    for (const auto& d : cfg.designs) maxN = std::max(maxN, d.maxN);

    std::vector<OutcomeTable> tables;
    tables.reserve(nS);
    for (const auto& s : cfg.scenarios) tables.push_back(generate_outcomes(s, cfg.reps, maxN, cfg.seed));

    // summaries[s][d][r]
    std::vector<std::vector<std::vector<ReplicateSummary>>> summaries(
        nS, std::vector<std::vector<ReplicateSummary>>(nD, std::vector<ReplicateSummary>(cfg.reps)));

    const int total = static_cast<int>(nS) * cfg.reps;
    std::atomic<int> next{0};
    std::atomic<int> done{0};
    std::mutex progressMutex;
    std::exception_ptr failure;
    std::mutex failureMutex;

    auto worker = [&] {
        for (;;) {
            const int task = next.fetch_add(1);
            if (task >= total) return;
            {
                std::lock_guard lock(failureMutex);
                if (failure) return;
            }
            const std::size_t s = static_cast<std::size_t>(task / cfg.reps);
            const int r = task % cfg.reps;
            try {
                const ReplicateSeeds seeds{cfg.seed, cfg.scenarios[s].id, r};
                for (std::size_t d = 0; d < nD; ++d)
                    summaries[s][d][r] = summarise(run_replicate(
                        cfg.designs[d], tables[s], r, cfg.grid, cfg.prior, cfg.mcmc, seeds));
            } catch (...) {
                std::lock_guard lock(failureMutex);
                if (!failure) failure = std::current_exception();
                return;
            }
            const int finished = ++done;
            if (progress) {
                std::lock_guard lock(progressMutex);
                progress(finished, total);
            }
        }
    };

    int threads = cfg.parallelism > 0 ? cfg.parallelism
                                      : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, std::max(1, total));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    StudyResult out;
    out.doses = cfg.grid.rawDoses;
    out.reps = cfg.reps;
    out.seed = cfg.seed;
    for (std::size_t s = 0; s < nS; ++s) {
        const auto& sc = cfg.scenarios[s];
        for (std::size_t d = 0; d < nD; ++d) {
            const auto& design = cfg.designs[d];
            StudyCell cell;
            cell.scenarioId = sc.id;
            cell.scenarioLabel = sc.label;
            cell.design = design.name;
            cell.oc = operating_characteristics(summaries[s][d], k);
            cell.curve = selection_curve(summaries[s][d], k, design.cohortSize);
            const JointUtility u(design.utility);
            for (std::size_t j = 0; j < k; ++j)
                cell.utilityAtTruth.push_back(u(sc.trueEff[j], sc.trueTox[j]));
            cell.optimalDose = optimal_dose_oracle(sc, design.utility, design.conventional);
            for (const auto& r : summaries[s][d]) {
                cell.selections.push_back(r.selected);
                cell.stoppedEarly.push_back(r.stoppedEarly);
            }
            out.cells.push_back(std::move(cell));
        }
    }
    return out;
}

void write_oc_csv(const StudyResult& result, std::ostream& out) {
    out << "scenario,design,dose,utilityAtTruth,selectionPct,meanPatients,ndsPct\n";
    out << std::fixed;
    for (const auto& c : result.cells)
        for (std::size_t d = 0; d < result.doses.size(); ++d)
            out << c.scenarioId << ',' << c.design << ',' << std::defaultfloat
                << result.doses[d] << ',' << std::fixed << std::setprecision(4) << c.utilityAtTruth[d] << ','
                << std::setprecision(2) << c.oc.selectionPercent[d] << ',' << c.oc.meanPatients[d]
                << ',' << c.oc.noDoseSelectedPercent << '\n';
    out.unsetf(std::ios::floatfield);
}

void write_curves_csv(const StudyResult& result, std::ostream& out) {
    out << "scenario,design,sampleSize,dose,selectionPct\n";
    out << std::fixed << std::setprecision(2);
    for (const auto& c : result.cells)
        for (std::size_t i = 0; i < c.curve.sampleSizes.size(); ++i) {
            for (std::size_t d = 0; d < result.doses.size(); ++d)
                out << c.scenarioId << ',' << c.design << ',' << c.curve.sampleSizes[i] << ','
                    << std::defaultfloat << result.doses[d] << ',' << std::fixed
                    << 100.0 * c.curve.fraction[i][d] << '\n';
            out << c.scenarioId << ',' << c.design << ',' << c.curve.sampleSizes[i] << ",NDS,"
                << 100.0 * c.curve.noDoseFraction[i] << '\n';
        }
    out.unsetf(std::ios::floatfield);
}

}  // namespace r2dt
