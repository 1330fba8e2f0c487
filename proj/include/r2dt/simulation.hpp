#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "r2dt/model.hpp"
#include "r2dt/sampler.hpp"
#include "r2dt/trial.hpp"

namespace r2dt {

/// True dose-response used to generate simulated patients.
struct Scenario {
    int id = 0;
    std::string label;
    std::vector<double> trueEff;
    std::vector<double> trueTox;
};

void validate(const Scenario& s, std::size_t numDoses);

/// The ten scenarios of the simulation study, ids 1..10.
std::vector<Scenario> reference_scenarios();

/// Named designs of the simulation study: R2DT1, EFFTOXU2, R2DT3i, R2DT3ii,
/// R2DT3iii, R2DT4i, R2DT4ii, R2DT4iii, EFFTOXU5, EFFTOXU7.
std::vector<DesignConfig> reference_designs();
DesignConfig reference_design(const std::string& name);

/// Pre-drawn outcomes for every (replicate, patient slot, dose). Patient slot
/// i of replicate r reads its outcome at whichever dose it is assigned, so
/// designs run on the same table see common random numbers.
class OutcomeTable {
   public:
    OutcomeTable(int reps, int maxN, std::size_t numDoses);

    int reps() const { return reps_; }
    int max_n() const { return maxN_; }
    std::size_t num_doses() const { return numDoses_; }

    Outcome at(int replicate, int slot, std::size_t dose) const;
    void set(int replicate, int slot, std::size_t dose, Outcome o);

   private:
    std::size_t offset(int replicate, int slot, std::size_t dose) const;
    int reps_;
    int maxN_;
    std::size_t numDoses_;
    std::vector<std::uint8_t> cells_;  // bit 0: efficacy, bit 1: toxicity
};

/// Independent Bernoulli draws; replicate r uses its own stream keyed by
/// (seed, scenario.id, r), so tables are reproducible and extendable.
OutcomeTable generate_outcomes(const Scenario& scenario, int reps, int maxN, std::uint64_t seed);

struct ReplicateResult {
    Decision finalDecision;
    TrialState finalState;
    std::vector<int> patientsPerDose;
    std::vector<CohortRecord> trajectory;
    /// Selection had the trial ended after cohort c (index c-1); nullopt is
    /// no dose selected. Entries after an early stop stay nullopt.
    std::vector<std::optional<std::size_t>> interimSelection;
    bool stoppedEarly = false;

    std::optional<std::size_t> selected() const { return finalState.selectedDose; }
};

/// The parts of a replicate that study aggregation needs.
struct ReplicateSummary {
    std::optional<std::size_t> selected;
    bool stoppedEarly = false;
    std::vector<int> patientsPerDose;
    std::vector<std::optional<std::size_t>> interimSelection;
};

ReplicateSummary summarise(const ReplicateResult& r);

/// Keys the MCMC stream of each interim analysis. The seed depends on the
/// replicate and the number of patients observed, not on the design, so two
/// designs holding identical data draw identical posterior samples.
struct ReplicateSeeds {
    std::uint64_t studySeed = 0;
    int scenarioId = 0;
    int replicate = 0;

    std::uint64_t mcmc_seed(int patientsObserved) const;
};

ReplicateResult run_replicate(const DesignConfig& design, const OutcomeTable& outcomes,
                              int replicate, const DoseGrid& grid, const PriorSpec& prior,
                              const McmcConfig& mcmc, const ReplicateSeeds& seeds);

struct OperatingCharacteristics {
    std::vector<double> selectionPercent;
    std::vector<double> meanPatients;
    double noDoseSelectedPercent = 0.0;
    int reps = 0;
};

struct SelectionCurve {
    std::vector<int> sampleSizes;
    /// fraction[n][d]: share of replicates selecting dose d at sampleSizes[n].
    std::vector<std::vector<double>> fraction;
    std::vector<double> noDoseFraction;
};

/// Best dose under full knowledge: drop doses with trueTox > piAddT or
/// trueEff < piAddE, then maximise utility at the true probabilities.
std::optional<std::size_t> optimal_dose_oracle(const Scenario& scenario,
                                               const JointUtilityParams& up,
                                               const ConventionalThresholds& thresholds);

struct StudyConfig {
    DoseGrid grid;
    PriorSpec prior;
    McmcConfig mcmc;
    std::vector<DesignConfig> designs;
    std::vector<Scenario> scenarios;
    int reps = 500;
    std::uint64_t seed = 20240601;
    /// Worker threads; 0 means hardware concurrency.
    int parallelism = 0;
};

void validate(const StudyConfig& cfg);

struct StudyCell {
    int scenarioId = 0;
    std::string scenarioLabel;
    std::string design;
    OperatingCharacteristics oc;
    SelectionCurve curve;
    std::vector<double> utilityAtTruth;
    std::optional<std::size_t> optimalDose;
    std::vector<std::optional<std::size_t>> selections;  // per replicate
    std::vector<bool> stoppedEarly;                      // per replicate
};

struct StudyResult {
    std::vector<double> doses;
    int reps = 0;
    std::uint64_t seed = 0;
    std::vector<StudyCell> cells;  // scenario-major, then design

    const StudyCell& cell(int scenarioId, const std::string& design) const;
};

using ProgressCallback = std::function<void(int done, int total)>;

StudyResult run_study(const StudyConfig& cfg, const ProgressCallback& progress = {});

OperatingCharacteristics operating_characteristics(
    const std::vector<ReplicateSummary>& replicates, std::size_t numDoses);
SelectionCurve selection_curve(const std::vector<ReplicateSummary>& replicates,
                               std::size_t numDoses, int cohortSize);

/// oc.csv: scenario,design,dose,utilityAtTruth,selectionPct,meanPatients,ndsPct
void write_oc_csv(const StudyResult& result, std::ostream& out);
/// curves.csv: scenario,design,sampleSize,dose,selectionPct (dose "NDS" for
/// no dose selected)
void write_curves_csv(const StudyResult& result, std::ostream& out);

}  // namespace r2dt
