#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "r2dt/model.hpp"
#include "r2dt/utility.hpp"

namespace r2dt {

/// chainLength counts every iteration including burn-in; the retained sample
/// is chainLength - burnIn draws (thinning 1).
struct McmcConfig {
    int chainLength = 6000;
    int burnIn = 2000;
    std::uint64_t seed = 1;
};

void validate(const McmcConfig& cfg);

struct PosteriorDraws {
    std::vector<ModelParams> draws;
    int chainLength = 0;
    int burnIn = 0;
    std::uint64_t seed = 0;
    /// Mean post-burn-in acceptance rate across the five direction updates.
    double acceptanceRate = 0.0;
    std::array<double, ModelParams::kDim> coordinateAcceptance{};
    std::array<double, ModelParams::kDim> proposalScales{};

    std::size_t size() const { return draws.size(); }
};

/// Adaptive random-walk Metropolis with five one-dimensional updates per
/// iteration. They start along the coordinate axes; at the half and
/// three-quarter marks of burn-in each block (efficacy, toxicity) is
/// re-oriented along the Cholesky columns of its sample covariance.
/// Proposal scales are tuned in batches of 50 during burn-in towards a
/// 0.25-0.45 acceptance band, then frozen. The chain starts at the prior
/// mean. Throws McmcDiagnosticError when any direction's post-burn-in
/// acceptance leaves (0.05, 0.95).
PosteriorDraws sample_posterior(const TrialData& data, const PriorSpec& prior,
                                const DoseGrid& grid, const McmcConfig& cfg);

/// Posterior draws pushed through the dose-response model: piE[d][s] and
/// piT[d][s] for dose d and draw s.
struct DoseProbabilities {
    std::vector<std::vector<double>> piE;
    std::vector<std::vector<double>> piT;
};

DoseProbabilities dose_probabilities(const PosteriorDraws& draws, const DoseGrid& grid);

double posterior_expected_utility(const PosteriorDraws& draws, std::size_t doseIndex,
                                  const DoseGrid& grid, const JointUtilityParams& up);

struct TailPredicate {
    enum class Kind { EfficacyBelow, ToxicityAbove, UtilityBelow };
    Kind kind = Kind::EfficacyBelow;
    double threshold = 0.5;
    /// Required for UtilityBelow.
    std::optional<JointUtilityParams> utility;

    static TailPredicate efficacy_below(double c) { return {Kind::EfficacyBelow, c, {}}; }
    static TailPredicate toxicity_above(double c) { return {Kind::ToxicityAbove, c, {}}; }
    static TailPredicate utility_below(double c, const JointUtilityParams& up) {
        return {Kind::UtilityBelow, c, up};
    }
};

/// Fraction of draws satisfying `predicate` at the given dose.
double posterior_tail_probability(const PosteriorDraws& draws, std::size_t doseIndex,
                                  const DoseGrid& grid, const TailPredicate& predicate);

/// One header line then one row per draw: muE,betaE1,betaE2,muT,betaT.
void write_draws_csv(const PosteriorDraws& draws, std::ostream& out);

}  // namespace r2dt
