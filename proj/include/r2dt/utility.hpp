#pragma once

#include <string>
#include <vector>

namespace r2dt {

enum class Attribute { Efficacy, Toxicity };

std::string to_string(Attribute a);
Attribute attribute_from_string(const std::string& s);

/// Reference-dependent segmented power utility for one attribute.
///
/// Outcomes on the favourable side of `reference` are gains scored as
/// distance^gainExponent; the other side is a loss scored as
/// -lossAversion * distance^lossExponent. The raw value is then rescaled so
/// the best attainable probability maps to 1 and the worst to 0.
struct MarginalUtilityParams {
    double reference = 0.5;
    double lossAversion = 1.0;
    double gainExponent = 1.0;
    double lossExponent = 1.0;
    Attribute attribute = Attribute::Efficacy;
};

struct JointUtilityParams {
    double kE = 0.25;
    double kT = 0.15;
    MarginalUtilityParams eff{0.5, 1.0, 1.0, 1.0, Attribute::Efficacy};
    MarginalUtilityParams tox{0.35, 1.0, 1.0, 1.0, Attribute::Toxicity};

    /// Interaction weight, 1 - kE - kT.
    double kET() const { return 1.0 - kE - kT; }
};

/// Throws InvalidParams / DegenerateUtility when `p` cannot define a utility.
void validate(const MarginalUtilityParams& p);
void validate(const JointUtilityParams& p);

/// Human-readable notes for parameters that are legal but outside the
/// recommended regime (risk-averse gains, risk-prone losses, loss aversion,
/// positive interaction). Empty when nothing is unusual.
std::vector<std::string> regime_warnings(const JointUtilityParams& p);

/// Raw (unnormalised) reference-dependent value of probability `pi`.
double raw_marginal_utility(double pi, const MarginalUtilityParams& p);

double efficacy_utility(double piE, const MarginalUtilityParams& p);
double toxicity_utility(double piT, const MarginalUtilityParams& p);

/// kE*uE + kT*uT + kET*uE*uT.
double joint_utility(double piE, double piT, const JointUtilityParams& p);

/// The four-outcome patient utility design expressed as the risk-neutral
/// member of the family: all exponents and loss-aversion indices equal 1.
JointUtilityParams efftoxu_params(double kE, double kT);

/// Default reference-dependent parameterisation used throughout the
/// simulation study (references 0.5 / 0.35, loss aversion 2, exponents 0.7,
/// kE = 0.25, kT = 0.15).
JointUtilityParams default_r2dt_params();

/// Validated, normaliser-cached form of JointUtilityParams for evaluating
/// many (piE, piT) pairs. Inputs are assumed to lie in [0,1].
class JointUtility {
   public:
    explicit JointUtility(const JointUtilityParams& p);

    double efficacy(double piE) const;
    double toxicity(double piT) const;
    double operator()(double piE, double piT) const;

    const JointUtilityParams& params() const { return params_; }

   private:
    JointUtilityParams params_;
    double effWorst_, effSpan_, toxWorst_, toxSpan_;
};

struct ContourPoint {
    double piE;
    double piT;
};

/// Level set {u(piE, piT) = level}, traced by solving for piT in each column
/// of an evenly spaced piE grid. Points are ordered by increasing piE;
/// columns that never reach `level` contribute nothing.
std::vector<ContourPoint> utility_contour(double level, const JointUtilityParams& p,
                                          int gridResolution = 201);

}  // namespace r2dt
