#include "r2dt/utility.hpp"

#include <cmath>
#include <sstream>

#include "r2dt/errors.hpp"

namespace r2dt {

namespace {

// Signed distance from the reference, positive on the favourable side.
double signed_gain(double pi, const MarginalUtilityParams& p) {
    return p.attribute == Attribute::Efficacy ? pi - p.reference : p.reference - pi;
}

// Zero at the reference for every exponent, so a zero exponent yields a
// step function rather than a discontinuity at the reference itself.
double power_term(double distance, double exponent) {
    return distance > 0.0 ? std::pow(distance, exponent) : 0.0;
}

double raw_from_gain(double s, const MarginalUtilityParams& p) {
    if (s >= 0.0) return power_term(s, p.gainExponent);
    return -p.lossAversion * power_term(-s, p.lossExponent);
}

struct Normaliser {
    double worst;
    double span;
};

Normaliser normaliser(const MarginalUtilityParams& p) {
    const double at0 = raw_from_gain(signed_gain(0.0, p), p);
    const double at1 = raw_from_gain(signed_gain(1.0, p), p);
    const double best = p.attribute == Attribute::Efficacy ? at1 : at0;
    const double worst = p.attribute == Attribute::Efficacy ? at0 : at1;
    return {worst, best - worst};
}

void check_probability(double pi, const char* name) {
    if (!(pi >= 0.0 && pi <= 1.0)) {
        std::ostringstream msg;
        msg << name << " must lie in [0,1], got " << pi;
        throw InvalidParams(msg.str());
    }
}

double normalised(double pi, const MarginalUtilityParams& p) {
    validate(p);
    const Normaliser n = normaliser(p);
    return (raw_from_gain(signed_gain(pi, p), p) - n.worst) / n.span;
}

}  // namespace

std::string to_string(Attribute a) {
    return a == Attribute::Efficacy ? "Efficacy" : "Toxicity";
}

Attribute attribute_from_string(const std::string& s) {
    if (s == "Efficacy" || s == "efficacy") return Attribute::Efficacy;
    if (s == "Toxicity" || s == "toxicity") return Attribute::Toxicity;
    throw InvalidParams("unknown attribute '" + s + "'");
}

void validate(const MarginalUtilityParams& p) {
    const char* which = p.attribute == Attribute::Efficacy ? "efficacy" : "toxicity";
    std::ostringstream msg;
    if (!(p.reference >= 0.0 && p.reference <= 1.0)) {
        msg << which << " reference must lie in [0,1], got " << p.reference;
        throw InvalidParams(msg.str());
    }
    if (!(p.lossAversion >= 0.0) || !std::isfinite(p.lossAversion)) {
        msg << which << " loss aversion must be a finite non-negative number";
        throw InvalidParams(msg.str());
    }
    if (!(p.gainExponent >= 0.0) || !(p.lossExponent >= 0.0) ||
        !std::isfinite(p.gainExponent) || !std::isfinite(p.lossExponent)) {
        msg << which << " exponents must be finite and non-negative";
        throw InvalidParams(msg.str());
    }
    if (!(normaliser(p).span > 0.0)) {
        msg << which << " utility is constant on [0,1]; cannot normalise";
        throw DegenerateUtility(msg.str());
    }
}

void validate(const JointUtilityParams& p) {
    if (p.eff.attribute != Attribute::Efficacy || p.tox.attribute != Attribute::Toxicity)
        throw InvalidParams("joint utility needs an efficacy and a toxicity marginal");
    if (!(p.kE >= 0.0 && p.kE <= 1.0) || !(p.kT >= 0.0 && p.kT <= 1.0))
        throw InvalidParams("kE and kT must lie in [0,1]");
    validate(p.eff);
    validate(p.tox);
}

std::vector<std::string> regime_warnings(const JointUtilityParams& p) {
    std::vector<std::string> out;
    for (const auto* m : {&p.eff, &p.tox}) {
        const std::string name = to_string(m->attribute);
        if (m->gainExponent >= 1.0)
            out.push_back(name + " gain exponent >= 1 (not risk averse for gains)");
        if (m->lossExponent >= 1.0)
            out.push_back(name + " loss exponent >= 1 (not risk prone for losses)");
        if (m->lossAversion <= 1.0)
            out.push_back(name + " loss aversion <= 1 (losses not weighted above gains)");
    }
    if (p.kE + p.kT >= 1.0) out.push_back("kE + kT >= 1 (no positive interaction)");
    return out;
}

double raw_marginal_utility(double pi, const MarginalUtilityParams& p) {
    return raw_from_gain(signed_gain(pi, p), p);
}

double efficacy_utility(double piE, const MarginalUtilityParams& p) {
    check_probability(piE, "piE");
    if (p.attribute != Attribute::Efficacy)
        throw InvalidParams("efficacy_utility called with toxicity parameters");
    return normalised(piE, p);
}

double toxicity_utility(double piT, const MarginalUtilityParams& p) {
    check_probability(piT, "piT");
    if (p.attribute != Attribute::Toxicity)
        throw InvalidParams("toxicity_utility called with efficacy parameters");
    return normalised(piT, p);
}

double joint_utility(double piE, double piT, const JointUtilityParams& p) {
    if (p.kE < 0.0 || p.kE > 1.0 || p.kT < 0.0 || p.kT > 1.0)
        throw InvalidParams("kE and kT must lie in [0,1]");
    const double uE = efficacy_utility(piE, p.eff);
    const double uT = toxicity_utility(piT, p.tox);
    return p.kE * uE + p.kT * uT + p.kET() * uE * uT;
}

JointUtilityParams efftoxu_params(double kE, double kT) {
    JointUtilityParams p;
    p.kE = kE;
    p.kT = kT;
    p.eff = {0.5, 1.0, 1.0, 1.0, Attribute::Efficacy};
    p.tox = {0.35, 1.0, 1.0, 1.0, Attribute::Toxicity};
    validate(p);
    return p;
}

JointUtilityParams default_r2dt_params() {
    JointUtilityParams p;
    p.kE = 0.25;
    p.kT = 0.15;
    p.eff = {0.5, 2.0, 0.7, 0.7, Attribute::Efficacy};
    p.tox = {0.35, 2.0, 0.7, 0.7, Attribute::Toxicity};
    return p;
}

JointUtility::JointUtility(const JointUtilityParams& p) : params_(p) {
    validate(p);
    const Normaliser e = normaliser(p.eff);
    const Normaliser t = normaliser(p.tox);
    effWorst_ = e.worst;
    effSpan_ = e.span;
    toxWorst_ = t.worst;
    toxSpan_ = t.span;
}

double JointUtility::efficacy(double piE) const {
    return (raw_from_gain(piE - params_.eff.reference, params_.eff) - effWorst_) / effSpan_;
}

double JointUtility::toxicity(double piT) const {
    return (raw_from_gain(params_.tox.reference - piT, params_.tox) - toxWorst_) / toxSpan_;
}

double JointUtility::operator()(double piE, double piT) const {
    const double uE = efficacy(piE);
    const double uT = toxicity(piT);
    return params_.kE * uE + params_.kT * uT + params_.kET() * uE * uT;
}

std::vector<ContourPoint> utility_contour(double level, const JointUtilityParams& p,
                                          int gridResolution) {
    if (!(level >= 0.0 && level <= 1.0))
        throw InvalidParams("contour level must lie in [0,1]");
    if (gridResolution < 2) throw InvalidParams("contour resolution must be at least 2");
    validate(p);

    // Utility is non-increasing in piT for every admissible (kE, kT), so a
    // column has at most one crossing; bisection keeps u(piE, lo) >= level.
    constexpr double kSlack = 1e-12;
    std::vector<ContourPoint> out;
    for (int i = 0; i < gridResolution; ++i) {
        const double piE = static_cast<double>(i) / (gridResolution - 1);
        auto f = [&](double piT) { return joint_utility(piE, piT, p) - level; };
        if (f(0.0) < -kSlack || f(1.0) > kSlack) continue;
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (f(mid) >= -kSlack)
                lo = mid;
            else
                hi = mid;
        }
        out.push_back({piE, lo});
    }
    return out;
}

}  // namespace r2dt
