#include "r2dt/model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "r2dt/errors.hpp"

namespace r2dt {

DoseGrid transform_doses(std::span<const double> rawDoses) {
    if (rawDoses.size() < 2) throw InvalidDoseGrid("dose grid needs at least two doses");
    for (std::size_t i = 0; i < rawDoses.size(); ++i) {
        if (!(rawDoses[i] > 0.0) || !std::isfinite(rawDoses[i]))
            throw InvalidDoseGrid("doses must be finite and positive");
        if (i > 0 && !(rawDoses[i] > rawDoses[i - 1]))
            throw InvalidDoseGrid("doses must be strictly ascending");
    }
    DoseGrid g;
    g.rawDoses.assign(rawDoses.begin(), rawDoses.end());
    double meanLog = 0.0;
    for (double d : rawDoses) meanLog += std::log(d);
    meanLog /= static_cast<double>(rawDoses.size());
    for (double d : rawDoses) {
        const double x = std::log(d) - meanLog;
        g.transformed.push_back(x);
        g.transformedSquared.push_back(x * x);
    }
    return g;
}

void validate(const PriorSpec& prior) {
    for (const auto& p : prior.as_array()) {
        if (!std::isfinite(p.mean) || !(p.sd > 0.0) || !std::isfinite(p.sd))
            throw InvalidParams("prior means must be finite and sds positive");
    }
}

void validate(const TrialData& data, const DoseGrid& grid) {
    for (const auto& r : data.records) {
        if (r.doseIndex >= grid.size()) throw InvalidCohort("dose index outside the grid");
        if ((r.yE != 0 && r.yE != 1) || (r.yT != 0 && r.yT != 1))
            throw InvalidCohort("outcomes must be 0 or 1");
    }
}

DoseCounts tally(const TrialData& data, std::size_t numDoses) {
    DoseCounts c{std::vector<int>(numDoses, 0), std::vector<int>(numDoses, 0),
                 std::vector<int>(numDoses, 0)};
    for (const auto& r : data.records) {
        c.patients.at(r.doseIndex) += 1;
        c.efficacies[r.doseIndex] += r.yE;
        c.toxicities[r.doseIndex] += r.yT;
    }
    return c;
}

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log1p_exp(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double prob_efficacy(const ModelParams& theta, double x) {
    return logistic(theta.muE + theta.betaE1 * x + theta.betaE2 * x * x);
}

double prob_toxicity(const ModelParams& theta, double x) {
    return logistic(theta.muT + theta.betaT * x);
}

double log_prior(const ModelParams& theta, const PriorSpec& prior) {
    const auto values = theta.as_array();
    const auto priors = prior.as_array();
    double lp = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double z = (values[i] - priors[i].mean) / priors[i].sd;
        lp += -0.5 * z * z - std::log(priors[i].sd);
    }
    return lp;
}

double log_likelihood(const ModelParams& theta, const DoseCounts& counts, const DoseGrid& grid) {
    double ll = 0.0;
    for (std::size_t d = 0; d < grid.size(); ++d) {
        const int n = counts.patients[d];
        if (n == 0) continue;
        const double x = grid.transformed[d];
        const double etaE = theta.muE + theta.betaE1 * x + theta.betaE2 * grid.transformedSquared[d];
        const double etaT = theta.muT + theta.betaT * x;
        // Bernoulli log-likelihood in logit form: y*eta - log(1 + e^eta).
        ll += counts.efficacies[d] * etaE - n * log1p_exp(etaE);
        ll += counts.toxicities[d] * etaT - n * log1p_exp(etaT);
    }
    return ll;
}

double log_posterior(const ModelParams& theta, const TrialData& data, const PriorSpec& prior,
                     const DoseGrid& grid) {
    return log_prior(theta, prior) + log_likelihood(theta, tally(data, grid.size()), grid);
}

}  // namespace r2dt
