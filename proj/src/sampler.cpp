#include "r2dt/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "r2dt/errors.hpp"
#include "r2dt/rng.hpp"

namespace r2dt {

namespace {

constexpr int kAdaptBatch = 50;
constexpr double kTargetLow = 0.25;
constexpr double kTargetHigh = 0.45;

// Efficacy and toxicity likelihoods share no coefficients, so a coordinate
// update only needs the log-likelihood of its own endpoint.
class SplitLikelihood {
   public:
    SplitLikelihood(const DoseCounts& counts, const DoseGrid& grid) {
        for (std::size_t d = 0; d < grid.size(); ++d) {
            if (counts.patients[d] == 0) continue;
            doses_.push_back({grid.transformed[d], grid.transformedSquared[d],
                              static_cast<double>(counts.patients[d]),
                              static_cast<double>(counts.efficacies[d]),
                              static_cast<double>(counts.toxicities[d])});
        }
    }

    double efficacy(const std::array<double, 5>& t) const {
        double ll = 0.0;
        for (const auto& d : doses_) {
            const double eta = t[0] + t[1] * d.x + t[2] * d.x2;
            ll += d.sE * eta - d.n * log1p_exp(eta);
        }
        return ll;
    }

    double toxicity(const std::array<double, 5>& t) const {
        double ll = 0.0;
        for (const auto& d : doses_) {
            const double eta = t[3] + t[4] * d.x;
            ll += d.sT * eta - d.n * log1p_exp(eta);
        }
        return ll;
    }

   private:
    struct Dose {
        double x, x2, n, sE, sT;
    };
    std::vector<Dose> doses_;
};

}  // namespace

void validate(const McmcConfig& cfg) {
    if (cfg.burnIn < 0 || cfg.chainLength <= cfg.burnIn)
        throw InvalidConfig("MCMC chain length must exceed burn-in");
    if (cfg.chainLength - cfg.burnIn < 1000)
        throw InvalidConfig("MCMC must retain at least 1000 draws");
}

PosteriorDraws sample_posterior(const TrialData& data, const PriorSpec& prior,
                                const DoseGrid& grid, const McmcConfig& cfg) {
    validate(cfg);
    validate(prior);
    validate(data, grid);

    const auto priors = prior.as_array();
    const SplitLikelihood lik(tally(data, grid.size()), grid);
    Rng rng = make_stream({cfg.seed, static_cast<std::uint64_t>(StreamPurpose::Mcmc)});
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::array<double, 5> theta;
    std::array<double, 5> scale;
    // Update direction i lives inside its own block (0-2 efficacy, 3-4
    // toxicity); it starts as the unit vector and is later replaced by a
    // column of the Cholesky factor of the block's estimated covariance.
    std::array<std::array<double, 5>, 5> dir{};
    for (std::size_t i = 0; i < 5; ++i) {
        theta[i] = priors[i].mean;
        scale[i] = priors[i].sd;
        dir[i][i] = 1.0;
    }
    auto log_prior_block = [&](const std::array<double, 5>& t, std::size_t lo, std::size_t hi) {
        double lp = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double z = (t[i] - priors[i].mean) / priors[i].sd;
            lp -= 0.5 * z * z;
        }
        return lp;
    };

    // Covariance windows: [B/4, B/2) and [B/2, 3B/4); rotation after each.
    const int B = cfg.burnIn;
    std::vector<std::array<double, 5>> window;
    auto rotate = [&]() {
        if (window.size() < 20) return;
        const double n = static_cast<double>(window.size());
        std::array<double, 5> mean{};
        for (const auto& w : window)
            for (std::size_t i = 0; i < 5; ++i) mean[i] += w[i] / n;
        for (auto [lo, hi] : {std::pair<std::size_t, std::size_t>{0, 3}, {3, 5}}) {
            const std::size_t m = hi - lo;
            double c[3][3] = {};
            for (const auto& w : window)
                for (std::size_t a = 0; a < m; ++a)
                    for (std::size_t b = 0; b < m; ++b)
                        c[a][b] += (w[lo + a] - mean[lo + a]) * (w[lo + b] - mean[lo + b]) / (n - 1);
            for (std::size_t a = 0; a < m; ++a) c[a][a] += 1e-10 * priors[lo + a].sd * priors[lo + a].sd;
            double L[3][3] = {};
            bool ok = true;
            for (std::size_t a = 0; a < m && ok; ++a)
                for (std::size_t b = 0; b <= a; ++b) {
                    double v = c[a][b];
                    for (std::size_t k = 0; k < b; ++k) v -= L[a][k] * L[b][k];
                    if (a == b) {
                        if (!(v > 0.0)) {
                            ok = false;
                            break;
                        }
                        L[a][a] = std::sqrt(v);
                    } else {
                        L[a][b] = v / L[b][b];
                    }
                }
            if (!ok) continue;
            for (std::size_t j = 0; j < m; ++j) {
                dir[lo + j].fill(0.0);
                for (std::size_t a = 0; a < m; ++a) dir[lo + j][lo + a] = L[a][j];
                scale[lo + j] = 2.4;
            }
        }
        window.clear();
    };

    double llE = lik.efficacy(theta);
    double llT = lik.toxicity(theta);

    std::array<int, 5> batchAccepts{};
    std::array<long, 5> keptAccepts{};
    int batchNumber = 0;

    PosteriorDraws out;
    out.chainLength = cfg.chainLength;
    out.burnIn = cfg.burnIn;
    out.seed = cfg.seed;
    out.draws.reserve(static_cast<std::size_t>(cfg.chainLength - cfg.burnIn));

    for (int iter = 0; iter < cfg.chainLength; ++iter) {
        for (std::size_t i = 0; i < 5; ++i) {
            const bool effCoord = i < 3;
            const std::size_t lo = effCoord ? 0 : 3, hi = effCoord ? 3 : 5;
            std::array<double, 5> prop = theta;
            const double step = scale[i] * normal(rng);
            for (std::size_t a = lo; a < hi; ++a) prop[a] += step * dir[i][a];
            const double llNew = effCoord ? lik.efficacy(prop) : lik.toxicity(prop);
            const double llOld = effCoord ? llE : llT;
            const double logRatio = llNew - llOld + log_prior_block(prop, lo, hi) -
                                    log_prior_block(theta, lo, hi);
            if (logRatio >= 0.0 || std::log(unif(rng)) < logRatio) {
                theta = prop;
                (effCoord ? llE : llT) = llNew;
                if (iter < cfg.burnIn)
                    ++batchAccepts[i];
                else
                    ++keptAccepts[i];
            }
        }
        if (iter < B && (iter + 1) % kAdaptBatch == 0) {
            ++batchNumber;
            const double step = std::max(0.05, 0.5 / std::sqrt(static_cast<double>(batchNumber)));
            for (std::size_t i = 0; i < 5; ++i) {
                const double rate = static_cast<double>(batchAccepts[i]) / kAdaptBatch;
                if (rate > kTargetHigh)
                    scale[i] *= std::exp(step);
                else if (rate < kTargetLow)
                    scale[i] *= std::exp(-step);
                batchAccepts[i] = 0;
            }
        }
        if (iter >= B / 4 && iter < 3 * B / 4) window.push_back(theta);
        if (iter + 1 == B / 2 || iter + 1 == 3 * B / 4) {
            rotate();
            batchNumber = 0;
        }
        if (iter >= B) out.draws.push_back(ModelParams::from_array(theta));
    }

    const double kept = static_cast<double>(cfg.chainLength - cfg.burnIn);
    double total = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        out.coordinateAcceptance[i] = keptAccepts[i] / kept;
        out.proposalScales[i] = scale[i];
        total += out.coordinateAcceptance[i];
    }
    out.acceptanceRate = total / 5.0;
    for (std::size_t i = 0; i < 5; ++i) {
        const double r = out.coordinateAcceptance[i];
        if (!(r > 0.05 && r < 0.95)) {
            std::ostringstream msg;
            msg << "MCMC acceptance rate " << r << " for coordinate " << i
                << " outside (0.05, 0.95) after adaptation";
            throw McmcDiagnosticError(msg.str());
        }
    }
    return out;
}

DoseProbabilities dose_probabilities(const PosteriorDraws& draws, const DoseGrid& grid) {
    DoseProbabilities p;
    p.piE.assign(grid.size(), std::vector<double>(draws.size()));
    p.piT.assign(grid.size(), std::vector<double>(draws.size()));
    for (std::size_t d = 0; d < grid.size(); ++d) {
        const double x = grid.transformed[d];
        for (std::size_t s = 0; s < draws.size(); ++s) {
            p.piE[d][s] = prob_efficacy(draws.draws[s], x);
            p.piT[d][s] = prob_toxicity(draws.draws[s], x);
        }
    }
    return p;
}

double posterior_expected_utility(const PosteriorDraws& draws, std::size_t doseIndex,
                                  const DoseGrid& grid, const JointUtilityParams& up) {
    if (doseIndex >= grid.size()) throw InvalidParams("dose index outside the grid");
    if (draws.size() == 0) throw InvalidParams("no posterior draws");
    const JointUtility u(up);
    const double x = grid.transformed[doseIndex];
    double sum = 0.0;
    for (const auto& th : draws.draws) sum += u(prob_efficacy(th, x), prob_toxicity(th, x));
    return sum / static_cast<double>(draws.size());
}

double posterior_tail_probability(const PosteriorDraws& draws, std::size_t doseIndex,
                                  const DoseGrid& grid, const TailPredicate& predicate) {
    if (doseIndex >= grid.size()) throw InvalidParams("dose index outside the grid");
    if (draws.size() == 0) throw InvalidParams("no posterior draws");
    if (!(predicate.threshold >= 0.0 && predicate.threshold <= 1.0))
        throw InvalidParams("tail threshold must lie in [0,1]");
    const double x = grid.transformed[doseIndex];
    const double c = predicate.threshold;
    std::size_t hits = 0;
    switch (predicate.kind) {
        case TailPredicate::Kind::EfficacyBelow:
            for (const auto& th : draws.draws) hits += prob_efficacy(th, x) < c;
            break;
        case TailPredicate::Kind::ToxicityAbove:
            for (const auto& th : draws.draws) hits += prob_toxicity(th, x) > c;
            break;
        case TailPredicate::Kind::UtilityBelow: {
            if (!predicate.utility) throw InvalidParams("utility predicate needs parameters");
            const JointUtility u(*predicate.utility);
            for (const auto& th : draws.draws)
                hits += u(prob_efficacy(th, x), prob_toxicity(th, x)) < c;
            break;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(draws.size());
}

void write_draws_csv(const PosteriorDraws& draws, std::ostream& out) {
    out << "muE,betaE1,betaE2,muT,betaT\n";
    out << std::setprecision(17);
    for (const auto& d : draws.draws)
        out << d.muE << ',' << d.betaE1 << ',' << d.betaE2 << ',' << d.muT << ',' << d.betaT
            << '\n';
}

}  // namespace r2dt
