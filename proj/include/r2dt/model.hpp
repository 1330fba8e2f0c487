#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace r2dt {

/// Candidate doses and their log-doses centred on the geometric mean.
struct DoseGrid {
    std::vector<double> rawDoses;
    std::vector<double> transformed;
    std::vector<double> transformedSquared;

    std::size_t size() const { return rawDoses.size(); }
};

/// Requires at least two strictly ascending positive doses.
DoseGrid transform_doses(std::span<const double> rawDoses);

/// Model coefficients: efficacy intercept, linear and quadratic slopes, then
/// toxicity intercept and slope.
struct ModelParams {
    double muE = 0.0;
    double betaE1 = 0.0;
    double betaE2 = 0.0;
    double muT = 0.0;
    double betaT = 0.0;

    static constexpr std::size_t kDim = 5;
    std::array<double, kDim> as_array() const { return {muE, betaE1, betaE2, muT, betaT}; }
    static ModelParams from_array(const std::array<double, kDim>& a) {
        return {a[0], a[1], a[2], a[3], a[4]};
    }
    bool operator==(const ModelParams&) const = default;
};

struct NormalPrior {
    double mean = 0.0;
    double sd = 1.0;
};

/// Independent normal priors; second argument is a standard deviation.
struct PriorSpec {
    NormalPrior muE{0.73, 2.44};
    NormalPrior betaE1{-0.11, 2.34};
    NormalPrior betaE2{0.0, 0.2};
    NormalPrior muT{-3.17, 2.88};
    NormalPrior betaT{-3.56, 2.79};

    std::array<NormalPrior, ModelParams::kDim> as_array() const {
        return {muE, betaE1, betaE2, muT, betaT};
    }
};

void validate(const PriorSpec& prior);

struct PatientRecord {
    std::size_t doseIndex = 0;
    int yE = 0;
    int yT = 0;
    bool operator==(const PatientRecord&) const = default;
};

struct TrialData {
    std::vector<PatientRecord> records;
};

void validate(const TrialData& data, const DoseGrid& grid);

/// Per-dose sufficient statistics of TrialData.
struct DoseCounts {
    std::vector<int> patients;
    std::vector<int> efficacies;
    std::vector<int> toxicities;
};

DoseCounts tally(const TrialData& data, std::size_t numDoses);

/// 1 / (1 + exp(-x)) without overflow for large |x|.
double logistic(double x);
/// log(1 + exp(x)) without overflow.
double log1p_exp(double x);

double prob_efficacy(const ModelParams& theta, double x);
double prob_toxicity(const ModelParams& theta, double x);

double log_prior(const ModelParams& theta, const PriorSpec& prior);
double log_likelihood(const ModelParams& theta, const DoseCounts& counts, const DoseGrid& grid);

/// Log posterior density up to an additive constant.
double log_posterior(const ModelParams& theta, const TrialData& data, const PriorSpec& prior,
                     const DoseGrid& grid);

}  // namespace r2dt
