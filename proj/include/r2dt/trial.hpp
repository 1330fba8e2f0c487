#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "r2dt/model.hpp"
#include "r2dt/sampler.hpp"
#include "r2dt/utility.hpp"

namespace r2dt {

enum class DesignVariant {
    /// Separate efficacy and toxicity admissibility rules at each dose.
    ConventionalAdmissibility,
    /// One utility-contour admissibility rule restricts the doses considered.
    UtilityAdmissibility,
    /// All doses considered; the trial stops when every dose fails the
    /// utility-contour rule.
    UtilityTrialStop,
};

std::string to_string(DesignVariant v);
DesignVariant design_variant_from_string(const std::string& s);

struct ConventionalThresholds {
    double piAddE = 0.5;
    double pE = 0.075;
    double piAddT = 0.4;
    double pT = 0.075;
};

/// A point on the contour of minimally acceptable utility plus its evidence
/// level.
struct UtilityStopRule {
    double refPointE = 0.5;
    double refPointT = 0.35;
    double pU = 0.1;
};

struct DesignConfig {
    std::string name = "R2DT1";
    DesignVariant variant = DesignVariant::ConventionalAdmissibility;
    JointUtilityParams utility = default_r2dt_params();
    ConventionalThresholds conventional;
    UtilityStopRule utilityStop;
    int cohortSize = 3;
    int maxN = 45;
    std::size_t startDoseIndex = 0;

    /// Utility of the stopping-contour point.
    double utility_threshold() const;
};

void validate(const DesignConfig& cfg, const DoseGrid& grid);

enum class TrialStatus { Running, StoppedNoDose, CompletedSelected };

std::string to_string(TrialStatus s);

struct TrialState {
    TrialData data;
    std::optional<std::size_t> highestTriedIndex;
    int cohortsDone = 0;
    TrialStatus status = TrialStatus::Running;
    std::optional<std::size_t> selectedDose;

    int patients() const { return static_cast<int>(data.records.size()); }
};

struct Outcome {
    int yE = 0;
    int yT = 0;
    bool operator==(const Outcome&) const = default;
};

struct DoseDiagnostics {
    double expectedUtility = 0.0;
    bool admissible = true;
    double probEfficacyBelow = 0.0;  // Pr(piE < piAddE | y)
    double probToxicityAbove = 0.0;  // Pr(piT > piAddT | y)
    double probUtilityBelow = 0.0;   // Pr(u < u(stopping point) | y)
};

struct Decision {
    enum class Kind { TreatAt, StopNoDose };
    Kind kind = Kind::TreatAt;
    std::size_t doseIndex = 0;
    /// Bayes action before the no-skip restriction (equal to doseIndex for
    /// final selections and for the opening cohort).
    std::size_t proposedIndex = 0;
    std::vector<DoseDiagnostics> diagnostics;

    bool stops() const { return kind == Kind::StopNoDose; }
    bool operator==(const Decision& o) const;
};

/// Per-dose posterior summaries; `admissible` follows the design variant
/// (for UtilityTrialStop it reports the utility-contour criterion).
std::vector<DoseDiagnostics> evaluate_doses(const PosteriorDraws& draws, const DoseGrid& grid,
                                            const DesignConfig& cfg);

/// Doses kept by the efficacy/toxicity rules: dose d is dropped when
/// Pr(piE < piAddE) > 1 - pE or Pr(piT > piAddT) > 1 - pT.
std::vector<std::size_t> admissible_set_conventional(const PosteriorDraws& draws,
                                                     const DoseGrid& grid,
                                                     const DesignConfig& cfg);

/// Doses kept by the utility-contour rule: dose d is dropped when
/// Pr(u(piE, piT) < u(refPointE, refPointT)) > 1 - pU.
std::vector<std::size_t> admissible_set_utility(const PosteriorDraws& draws,
                                                const DoseGrid& grid, const DesignConfig& cfg);

/// Escalation never exceeds one level above the highest dose tried;
/// de-escalation is unrestricted. With nothing tried, returns startDose.
std::size_t apply_no_skip(std::size_t proposedIndex,
                          std::optional<std::size_t> highestTriedIndex, std::size_t startDose);

/// Index of the largest value among `candidates`; ties within 1e-9 go to the
/// lowest dose.
std::size_t argmax_lowest(std::span<const double> values, std::span<const std::size_t> candidates);

/// Dose for the next cohort given the current posterior.
Decision next_decision(const TrialState& state, const PosteriorDraws& draws, const DoseGrid& grid,
                       const DesignConfig& cfg);

/// Recommendation once maxN patients are in: the same choice rule as
/// next_decision without the no-skip restriction.
Decision final_selection(const TrialState& state, const PosteriorDraws& draws,
                         const DoseGrid& grid, const DesignConfig& cfg);

/// Decision for the opening cohort: the configured start dose.
Decision opening_decision(const DesignConfig& cfg, std::size_t numDoses);

/// Appends one cohort. Throws InvalidCohort on a wrong outcome count, a dose
/// off the grid or a full trial, and OutOfOrder once the trial has ended.
TrialState record_cohort(TrialState state, std::size_t doseIndex,
                         std::span<const Outcome> outcomes, const DesignConfig& cfg,
                         const DoseGrid& grid);

bool reached_max_sample_size(const TrialState& state, const DesignConfig& cfg);

/// Applies a stopping or final decision to the state.
TrialState conclude(TrialState state, const Decision& decision, bool finalAnalysis);

/// Posterior refresh followed by next_decision or final_selection,
/// whichever the state calls for, and the resulting state update.
struct Step {
    Decision decision;
    TrialState state;
};
Step decide(const TrialState& state, const DoseGrid& grid, const PriorSpec& prior,
            const DesignConfig& cfg, const McmcConfig& mcmc);

/// One line of a trial trajectory.
struct CohortRecord {
    int cohort = 0;
    std::size_t doseIndex = 0;
    std::vector<Outcome> outcomes;
    Decision decision;
    bool overridden = false;
};

}  // namespace r2dt
