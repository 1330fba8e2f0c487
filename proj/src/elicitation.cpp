#include "r2dt/elicitation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "r2dt/errors.hpp"

namespace r2dt {

namespace {

constexpr double kExponentLo = 0.01;
constexpr double kExponentHi = 5.0;

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

double signed_gain(double pi, double reference, Attribute a) {
    return a == Attribute::Efficacy ? pi - reference : reference - pi;
}

void check_answer_range(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) {
        std::ostringstream msg;
        msg << what << " must lie in [0,1], got " << v;
        throw InconsistentAnswer(msg.str());
    }
}

void check_interior(const LotteryQuestion& q, double ce) {
    const double lo = std::min(q.x1, q.x3);
    const double hi = std::max(q.x1, q.x3);
    if (!(ce > lo && ce < hi)) {
        std::ostringstream msg;
        msg << "certainty equivalent " << ce << " is not strictly between the lottery outcomes "
            << lo << " and " << hi;
        throw InconsistentAnswer(msg.str());
    }
}

void check_mixing(const LotteryQuestion& q) {
    if (!(q.mixing > 0.0 && q.mixing < 1.0))
        throw InvalidParams("lottery mixing component must lie in (0,1)");
    if (!(q.x1 >= 0.0 && q.x1 <= 1.0 && q.x3 >= 0.0 && q.x3 <= 1.0))
        throw InvalidParams("lottery outcomes must lie in [0,1]");
}

// Power mean of the two distances as a function of the exponent, matched to
// the distance of the certainty equivalent. Increasing in alpha.
double solve_power_mean(double mix, double d1, double d3, double dce) {
    auto gap = [&](double a) {
        const double m = mix * std::pow(d1, a) + (1.0 - mix) * std::pow(d3, a);
        return std::log(m) / a - std::log(dce);
    };
    double lo = kExponentLo, hi = kExponentHi;
    const double gLo = gap(lo), gHi = gap(hi);
    if (gLo > 0.0 || gHi < 0.0) {
        std::ostringstream msg;
        msg << "no exponent in [" << kExponentLo << ", " << kExponentHi
            << "] reproduces this certainty equivalent";
        throw OutOfFamily(msg.str());
    }
    for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double solve_one_sided(double reference, const LotteryQuestion& q, double ce, bool gainSide) {
    check_mixing(q);
    const double s1 = signed_gain(q.x1, reference, q.attribute);
    const double s3 = signed_gain(q.x3, reference, q.attribute);
    const bool ok = gainSide ? (s1 >= 0.0 && s3 >= 0.0) : (s1 <= 0.0 && s3 <= 0.0);
    if (!ok || q.x1 == q.x3)
        throw InvalidParams(std::string("lottery is not a proper ") +
                            (gainSide ? "gain" : "loss") + "-domain lottery");
    check_interior(q, ce);
    const double dce = std::abs(signed_gain(ce, reference, q.attribute));
    return solve_power_mean(q.mixing, std::abs(s1), std::abs(s3), dce);
}

Json number_or_null(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

std::string to_string(LotteryDomain d) {
    switch (d) {
        case LotteryDomain::Gain:
            return "Gain";
        case LotteryDomain::Loss:
            return "Loss";
        case LotteryDomain::Mixed:
            return "Mixed";
    }
    return "?";
}

double solve_gain_exponent(double reference, const LotteryQuestion& q, double ce) {
    return solve_one_sided(reference, q, ce, true);
}

double solve_loss_exponent(double reference, const LotteryQuestion& q, double ce) {
    return solve_one_sided(reference, q, ce, false);
}

double solve_loss_aversion(double reference, double gainExponent, double lossExponent,
                           const LotteryQuestion& q, double ce) {
    check_mixing(q);
    const double s1 = signed_gain(q.x1, reference, q.attribute);
    const double s3 = signed_gain(q.x3, reference, q.attribute);
    if (!((s1 < 0.0 && s3 > 0.0) || (s1 > 0.0 && s3 < 0.0)))
        throw InvalidParams("mixed lottery must straddle the reference");
    check_interior(q, ce);
    const double wG = s1 > 0.0 ? q.mixing : 1.0 - q.mixing;
    const double wL = 1.0 - wG;
    const double dG = std::max(s1, s3);
    const double dL = -std::min(s1, s3);
    const double sce = signed_gain(ce, reference, q.attribute);
    const double gainPart = wG * std::pow(dG, gainExponent);
    const double lossPart = wL * std::pow(dL, lossExponent);
    // mixing-weighted raw value equals the raw value of the ce
    double lambda;
    if (sce < 0.0) {
        const double denom = lossPart - std::pow(-sce, lossExponent);
        lambda = denom > 0.0 ? gainPart / denom : -1.0;
    } else {
        const double ceRaw = sce > 0.0 ? std::pow(sce, gainExponent) : 0.0;
        lambda = (gainPart - ceRaw) / lossPart;
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw InconsistentAnswer("no positive loss aversion reproduces this certainty equivalent");
    return lambda;
}

std::pair<double, double> solve_joint_weights(const IndifferencePair& a, const IndifferencePair& b,
                                              const MarginalUtilityParams& eff,
                                              const MarginalUtilityParams& tox) {
    // kE*(dE - dP) + kT*(dT - dP) = -dP for each pair, dP the change in uE*uT.
    auto row = [&](const IndifferencePair& p) {
        for (double v : {p.x1, p.y1, p.x2, p.y2}) check_answer_range(v, "pair coordinate");
        const double e1 = efficacy_utility(p.x1, eff), e2 = efficacy_utility(p.x2, eff);
        const double t1 = toxicity_utility(p.y1, tox), t2 = toxicity_utility(p.y2, tox);
        const double dP = e1 * t1 - e2 * t2;
        return std::array<double, 3>{(e1 - e2) - dP, (t1 - t2) - dP, -dP};
    };
    const auto r1 = row(a);
    const auto r2 = row(b);
    const double det = r1[0] * r2[1] - r1[1] * r2[0];
    const double scale = std::max({std::abs(r1[0] * r2[1]), std::abs(r1[1] * r2[0]), 1e-300});
    if (std::abs(det) <= 1e-10 * scale || std::abs(det) < 1e-14)
        throw UninformativePairs("the two indifference pairs do not determine both weights");
    const double kE = (r1[2] * r2[1] - r1[1] * r2[2]) / det;
    const double kT = (r1[0] * r2[2] - r1[2] * r2[0]) / det;
    constexpr double slack = 1e-9;
    if (kE < -slack || kE > 1 + slack || kT < -slack || kT > 1 + slack) {
        std::ostringstream msg;
        msg << "indifference pairs imply kE=" << kE << ", kT=" << kT << " outside [0,1]";
        throw InconsistentAnswer(msg.str());
    }
    return {clip01(kE), clip01(kT)};
}

double derive_stopping_threshold(double pointE, double pointT, const JointUtilityParams& up) {
    return joint_utility(pointE, pointT, up);
}

double certainty_equivalent(const MarginalUtilityParams& p, const LotteryQuestion& q) {
    check_mixing(q);
    validate(p);
    auto u = [&](double x) {
        return p.attribute == Attribute::Efficacy ? efficacy_utility(x, p) : toxicity_utility(x, p);
    };
    const double target = q.mixing * u(q.x1) + (1.0 - q.mixing) * u(q.x3);
    // u is increasing in x for efficacy, decreasing for toxicity
    const double sign = p.attribute == Attribute::Efficacy ? 1.0 : -1.0;
    double lo = std::min(q.x1, q.x3), hi = std::max(q.x1, q.x3);
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        (sign * (u(mid) - target) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::optional<double> indifferent_toxicity(double x1, double y1, double x2,
                                           const JointUtilityParams& up) {
    const JointUtility u(up);
    const double target = u(x1, y1);
    if (target > u(x2, 0.0) || target < u(x2, 1.0)) return std::nullopt;
    double lo = 0.0, hi = 1.0;  // u(x2, .) decreasing
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        (u(x2, mid) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ConsistencyReport check_consistency(const MarginalUtilityParams& p, const LotteryQuestion& q,
                                    double statedCE, double tolerance) {
    ConsistencyReport r;
    r.question = q;
    r.statedCE = statedCE;
    r.predictedCE = certainty_equivalent(p, q);
    r.discrepancy = std::abs(r.predictedCE - statedCE);
    const double lo = std::min(q.x1, q.x3), hi = std::max(q.x1, q.x3);
    r.hardFail = !(statedCE >= lo && statedCE <= hi);
    r.pass = !r.hardFail && r.discrepancy <= tolerance;
    return r;
}

std::string to_string(Phase p) {
    static const char* names[] = {"RefE",    "GainE", "LossE",        "LambdaE",
                                  "RefT",    "GainT", "LossT",        "LambdaT",
                                  "JointWeights", "StoppingPoint", "Consistency", "Done"};
    return names[static_cast<int>(p)];
}

Phase phase_from_string(const std::string& s) {
    for (int i = 0; i <= static_cast<int>(Phase::Done); ++i)
        if (to_string(static_cast<Phase>(i)) == s) return static_cast<Phase>(i);
    throw InvalidParams("unknown phase '" + s + "'");
}

void to_json(Json& j, const LotteryQuestion& q) {
    j = Json{{"attribute", to_string(q.attribute)},
             {"x1", q.x1},
             {"x3", q.x3},
             {"mixing", q.mixing},
             {"domain", to_string(q.domain)}};
}

void to_json(Json& j, const ConsistencyReport& r) {
    j = Json{{"question", r.question},       {"predictedCE", r.predictedCE},
             {"statedCE", r.statedCE},       {"discrepancy", r.discrepancy},
             {"pass", r.pass},               {"hardFail", r.hardFail}};
}

void to_json(Json& j, const ElicitationScript& s) {
    auto pair = [](const TradeoffTemplate& t) {
        return Json{{"x1Offset", t.x1Offset}, {"y1Offset", t.y1Offset}, {"x2Offset", t.x2Offset}};
    };
    Json cons = Json::array();
    for (const auto& c : s.consistency)
        cons.push_back({{"attribute", to_string(c.attribute)},
                        {"lowOffset", c.lowOffset},
                        {"highOffset", c.highOffset},
                        {"mixing", c.mixing}});
    j = Json{{"gainSpan", s.gainSpan},
             {"lossSpan", s.lossSpan},
             {"mixedSpan", s.mixedSpan},
             {"mixing", s.mixing},
             {"pairA", pair(s.pairA)},
             {"pairB", pair(s.pairB)},
             {"stoppingEfficacy", number_or_null(s.stoppingEfficacy)},
             {"pU", s.pU},
             {"consistency", cons},
             {"consistencyTolerance", s.consistencyTolerance}};
}

void from_json(const Json& j, ElicitationScript& s) {
    if (!j.is_object()) throw InvalidConfig("elicitation script must be an object");
    try {
        s.gainSpan = j.value("gainSpan", s.gainSpan);
        s.lossSpan = j.value("lossSpan", s.lossSpan);
        s.mixedSpan = j.value("mixedSpan", s.mixedSpan);
        s.mixing = j.value("mixing", s.mixing);
        auto pair = [&](const char* key, TradeoffTemplate& t) {
            if (!j.contains(key)) return;
            const auto& p = j.at(key);
            t.x1Offset = p.value("x1Offset", t.x1Offset);
            t.y1Offset = p.value("y1Offset", t.y1Offset);
            t.x2Offset = p.value("x2Offset", t.x2Offset);
        };
        pair("pairA", s.pairA);
        pair("pairB", s.pairB);
        if (j.contains("stoppingEfficacy") && !j.at("stoppingEfficacy").is_null())
            s.stoppingEfficacy = j.at("stoppingEfficacy").get<double>();
        s.pU = j.value("pU", s.pU);
        s.consistencyTolerance = j.value("consistencyTolerance", s.consistencyTolerance);
        if (j.contains("consistency")) {
            s.consistency.clear();
            for (const auto& c : j.at("consistency")) {
                ConsistencyTemplate t;
                t.attribute = attribute_from_string(c.value("attribute", std::string("Efficacy")));
                t.lowOffset = c.value("lowOffset", t.lowOffset);
                t.highOffset = c.value("highOffset", t.highOffset);
                t.mixing = c.value("mixing", t.mixing);
                s.consistency.push_back(t);
            }
        }
    } catch (const Json::exception& e) {
        throw InvalidConfig(std::string("malformed elicitation script: ") + e.what());
    }
    if (!(s.mixing > 0.0 && s.mixing < 1.0)) throw InvalidConfig("mixing must lie in (0,1)");
    for (double span : {s.gainSpan, s.lossSpan, s.mixedSpan})
        if (!(span > 0.0 && span <= 1.0)) throw InvalidConfig("lottery spans must lie in (0,1]");
    if (!(s.pU > 0.0 && s.pU < 1.0)) throw InvalidConfig("pU must lie in (0,1)");
}

void to_json(Json& j, const Question& q) {
    static const char* kinds[] = {"Reference", "Lottery", "Tradeoff", "StoppingToxicity"};
    j = Json{{"phase", to_string(q.phase)},
             {"index", q.index},
             {"kind", kinds[static_cast<int>(q.kind)]},
             {"attribute", to_string(q.attribute)},
             {"prompt", q.prompt}};
    if (q.lottery) j["lottery"] = *q.lottery;
    if (q.kind == Question::Kind::Tradeoff) {
        j["x1"] = q.x1;
        j["y1"] = q.y1;
        j["x2"] = q.x2;
    }
    if (q.kind == Question::Kind::StoppingToxicity) j["efficacy"] = q.x1;
}

void to_json(Json& j, const LogEntry& e) {
    j = Json{{"event", e.event},       {"phase", to_string(e.phase)}, {"index", e.index},
             {"value", e.value},       {"question", e.question},      {"solved", e.solved},
             {"timestamp", e.timestamp}};
}

void from_json(const Json& j, LogEntry& e) {
    try {
        e.event = j.at("event").get<std::string>();
        e.phase = phase_from_string(j.at("phase").get<std::string>());
        e.index = j.value("index", 0);
        e.value = j.value("value", 0.0);
        e.question = j.value("question", Json());
        e.solved = j.value("solved", Json());
        e.timestamp = j.value("timestamp", std::string());
    } catch (const Json::exception& ex) {
        throw InvalidConfig(std::string("malformed log entry: ") + ex.what());
    }
}

ElicitationSession::ElicitationSession(ElicitationScript script) : script_(std::move(script)) {}

Phase ElicitationSession::phase() const {
    if (!eff_.ref) return Phase::RefE;
    if (!eff_.gain) return Phase::GainE;
    if (!eff_.loss) return Phase::LossE;
    if (!eff_.lambda) return Phase::LambdaE;
    if (!tox_.ref) return Phase::RefT;
    if (!tox_.gain) return Phase::GainT;
    if (!tox_.loss) return Phase::LossT;
    if (!tox_.lambda) return Phase::LambdaT;
    if (!weights_) return Phase::JointWeights;
    if (!stoppingTox_) return Phase::StoppingPoint;
    if (reports_.size() < script_.consistency.size()) return Phase::Consistency;
    return Phase::Done;
}

LotteryQuestion ElicitationSession::lottery_for(Phase p) const {
    const bool effSide = p == Phase::GainE || p == Phase::LossE || p == Phase::LambdaE;
    const Attribute a = effSide ? Attribute::Efficacy : Attribute::Toxicity;
    const double r = *marginal(a).ref;
    // favourable direction: up for efficacy, down for toxicity
    const double dir = effSide ? 1.0 : -1.0;
    const double roomUp = effSide ? 1.0 - r : r;  // room on the gain side
    const double roomDown = effSide ? r : 1.0 - r;
    LotteryQuestion q;
    q.attribute = a;
    q.mixing = script_.mixing;
    double g, l;
    switch (p) {
        case Phase::GainE:
        case Phase::GainT:
            g = std::min(script_.gainSpan, roomUp);
            q.domain = LotteryDomain::Gain;
            q.x1 = r;
            q.x3 = r + dir * g;
            break;
        case Phase::LossE:
        case Phase::LossT:
            l = std::min(script_.lossSpan, roomDown);
            q.domain = LotteryDomain::Loss;
            q.x1 = r - dir * l;
            q.x3 = r;
            break;
        default:
            g = std::min({script_.mixedSpan, roomUp, roomDown});
            q.domain = LotteryDomain::Mixed;
            q.x1 = r - dir * g;
            q.x3 = r + dir * g;
            break;
    }
    if (q.x1 > q.x3) {
        std::swap(q.x1, q.x3);
        q.mixing = 1.0 - q.mixing;
    }
    return q;
}

Question ElicitationSession::tradeoff_question(int index) const {
    const TradeoffTemplate& t = index == 0 ? script_.pairA : script_.pairB;
    Question q;
    q.phase = Phase::JointWeights;
    q.index = index;
    q.kind = Question::Kind::Tradeoff;
    q.x1 = clip01(*eff_.ref + t.x1Offset);
    q.y1 = clip01(*tox_.ref + t.y1Offset);
    q.x2 = clip01(*eff_.ref + t.x2Offset);
    std::ostringstream s;
    s << "A dose gives efficacy " << q.x1 << " and toxicity " << q.y1
      << ". At efficacy " << q.x2 << ", what toxicity would make the two doses equally desirable?";
    q.prompt = s.str();
    return q;
}

std::optional<Question> ElicitationSession::next_question() const {
    const Phase p = phase();
    Question q;
    q.phase = p;
    std::ostringstream s;
    switch (p) {
        case Phase::RefE:
            q.kind = Question::Kind::Reference;
            q.attribute = Attribute::Efficacy;
            q.prompt = "At what efficacy level is the current standard of care?";
            return q;
        case Phase::RefT:
            q.kind = Question::Kind::Reference;
            q.attribute = Attribute::Toxicity;
            q.prompt = "What toxicity probability would you regard as the target level?";
            return q;
        case Phase::GainE:
        case Phase::LossE:
        case Phase::LambdaE:
        case Phase::GainT:
        case Phase::LossT:
        case Phase::LambdaT: {
            q.kind = Question::Kind::Lottery;
            q.lottery = lottery_for(p);
            q.attribute = q.lottery->attribute;
            s << "Which certain " << (q.attribute == Attribute::Efficacy ? "efficacy" : "toxicity")
              << " probability is as good as a gamble giving " << q.lottery->x1
              << " with probability " << q.lottery->mixing << " and " << q.lottery->x3
              << " otherwise?";
            q.prompt = s.str();
            return q;
        }
        case Phase::JointWeights:
            return tradeoff_question(static_cast<int>(pairAnswers_.size()));
        case Phase::StoppingPoint:
            q.kind = Question::Kind::StoppingToxicity;
            q.x1 = script_.stoppingEfficacy.value_or(*eff_.ref);
            s << "For efficacy " << q.x1
              << ", what is the maximum amount of toxicity that would be considered acceptable?";
            q.prompt = s.str();
            return q;
        case Phase::Consistency: {
            const int i = static_cast<int>(reports_.size());
            const auto& t = script_.consistency[static_cast<std::size_t>(i)];
            const double r = *marginal(t.attribute).ref;
            LotteryQuestion l;
            l.attribute = t.attribute;
            l.x1 = clip01(r + t.lowOffset);
            l.x3 = clip01(r + t.highOffset);
            l.mixing = t.mixing;
            const double s1 = signed_gain(l.x1, r, t.attribute), s3 = signed_gain(l.x3, r, t.attribute);
            l.domain = (s1 >= 0 && s3 >= 0)   ? LotteryDomain::Gain
                       : (s1 <= 0 && s3 <= 0) ? LotteryDomain::Loss
                                              : LotteryDomain::Mixed;
            q.index = i;
            q.kind = Question::Kind::Lottery;
            q.attribute = t.attribute;
            q.lottery = l;
            s << "Check: which certain " << (t.attribute == Attribute::Efficacy ? "efficacy" : "toxicity")
              << " probability is as good as a gamble giving " << l.x1 << " with probability "
              << l.mixing << " and " << l.x3 << " otherwise?";
            q.prompt = s.str();
            return q;
        }
        case Phase::Done:
            return std::nullopt;
    }
    return std::nullopt;
}

MarginalUtilityParams ElicitationSession::marginal_params(Attribute a) const {
    const Marginal& m = marginal(a);
    return {*m.ref, *m.lambda, *m.gain, *m.loss, a};
}

Json ElicitationSession::apply(const Question& q, double value) {
    Json solved = Json::object();
    const bool eff = q.attribute == Attribute::Efficacy;
    const char* tag = eff ? "E" : "T";
    switch (q.phase) {
        case Phase::RefE:
        case Phase::RefT:
            if (!(value > 0.0 && value < 1.0))
                throw InconsistentAnswer("reference probability must lie strictly inside (0,1)");
            marginal(q.attribute).ref = value;
            solved[std::string("ref") + tag] = value;
            break;
        case Phase::GainE:
        case Phase::GainT: {
            const double a = solve_gain_exponent(*marginal(q.attribute).ref, *q.lottery, value);
            marginal(q.attribute).gain = a;
            solved[std::string("alphaG") + tag] = a;
            break;
        }
        case Phase::LossE:
        case Phase::LossT: {
            const double a = solve_loss_exponent(*marginal(q.attribute).ref, *q.lottery, value);
            marginal(q.attribute).loss = a;
            solved[std::string("alphaL") + tag] = a;
            break;
        }
        case Phase::LambdaE:
        case Phase::LambdaT: {
            Marginal& m = marginal(q.attribute);
            const double l = solve_loss_aversion(*m.ref, *m.gain, *m.loss, *q.lottery, value);
            MarginalUtilityParams check{*m.ref, l, *m.gain, *m.loss, q.attribute};
            validate(check);
            m.lambda = l;
            solved[std::string("lambda") + tag] = l;
            break;
        }
        case Phase::JointWeights: {
            check_answer_range(value, "toxicity answer");
            if (q.index == 0) {
                pairAnswers_.push_back(value);
                solved["pairA_y2"] = value;
                break;
            }
            const Question qa = tradeoff_question(0);
            const IndifferencePair a{qa.x1, qa.y1, qa.x2, pairAnswers_.at(0)};
            const IndifferencePair b{q.x1, q.y1, q.x2, value};
            const auto [kE, kT] = solve_joint_weights(a, b, marginal_params(Attribute::Efficacy),
                                                      marginal_params(Attribute::Toxicity));
            pairAnswers_.push_back(value);
            weights_ = {kE, kT};
            solved["kE"] = kE;
            solved["kT"] = kT;
            break;
        }
        case Phase::StoppingPoint: {
            check_answer_range(value, "toxicity answer");
            const double uRef = derive_stopping_threshold(q.x1, value, params());
            stoppingTox_ = value;
            solved["refPointE"] = q.x1;
            solved["refPointT"] = value;
            solved["uRef"] = uRef;
            break;
        }
        case Phase::Consistency: {
            check_answer_range(value, "certainty equivalent");
            auto r = check_consistency(marginal_params(q.attribute), *q.lottery, value,
                                       script_.consistencyTolerance);
            reports_.push_back(r);
            solved["consistency"] = r;
            break;
        }
        case Phase::Done:
            throw OutOfOrder("session is complete");
    }
    return solved;
}

const LogEntry& ElicitationSession::answer(Phase phase, int index, double value,
                                           std::string timestamp) {
    const auto q = next_question();
    if (!q) throw OutOfOrder("session is complete; reopen a phase to revise it");
    if (q->phase != phase || q->index != index)
        throw OutOfOrder("expected an answer for " + to_string(q->phase) + "[" +
                         std::to_string(q->index) + "], got " + to_string(phase) + "[" +
                         std::to_string(index) + "]");
    if (!std::isfinite(value)) throw InconsistentAnswer("answer must be a finite number");
    // apply() only writes state after every check has passed
    Json solved = apply(*q, value);
    LogEntry e;
    e.event = "answer";
    e.phase = phase;
    e.index = index;
    e.value = value;
    e.question = *q;
    e.solved = std::move(solved);
    e.timestamp = std::move(timestamp);
    log_.push_back(std::move(e));
    return log_.back();
}

const LogEntry& ElicitationSession::reopen(Phase phase, std::string timestamp) {
    auto clear_joint = [&] {
        pairAnswers_.clear();
        weights_.reset();
        stoppingTox_.reset();
    };
    auto clear_marginal = [&](Marginal& m, Phase p, bool isRef) {
        if (isRef) m = {};
        if (p == Phase::GainE || p == Phase::GainT) m.gain.reset();
        if (p == Phase::LossE || p == Phase::LossT) m.loss.reset();
        m.lambda.reset();
        clear_joint();
        reports_.clear();
    };
    switch (phase) {
        case Phase::RefE:
            clear_marginal(eff_, phase, true);
            break;
        case Phase::GainE:
        case Phase::LossE:
        case Phase::LambdaE:
            clear_marginal(eff_, phase, false);
            break;
        case Phase::RefT:
            clear_marginal(tox_, phase, true);
            break;
        case Phase::GainT:
        case Phase::LossT:
        case Phase::LambdaT:
            clear_marginal(tox_, phase, false);
            break;
        case Phase::JointWeights:
            clear_joint();
            break;
        case Phase::StoppingPoint:
            stoppingTox_.reset();
            break;
        case Phase::Consistency:
            reports_.clear();
            break;
        case Phase::Done:
            throw InvalidParams("Done is not a reopenable phase");
    }
    LogEntry e;
    e.event = "reopen";
    e.phase = phase;
    e.timestamp = std::move(timestamp);
    log_.push_back(std::move(e));
    return log_.back();
}

bool ElicitationSession::parameters_complete() const {
    return eff_.lambda && tox_.lambda && weights_ && eff_.gain && eff_.loss && tox_.gain &&
           tox_.loss;
}

JointUtilityParams ElicitationSession::params() const {
    if (!parameters_complete()) throw OutOfOrder("utility parameters are not fully elicited");
    JointUtilityParams p;
    p.kE = weights_->first;
    p.kT = weights_->second;
    p.eff = marginal_params(Attribute::Efficacy);
    p.tox = marginal_params(Attribute::Toxicity);
    return p;
}

Json ElicitationSession::partial_params() const {
    auto marg = [](const Marginal& m) {
        return Json{{"reference", number_or_null(m.ref)},
                    {"gainExponent", number_or_null(m.gain)},
                    {"lossExponent", number_or_null(m.loss)},
                    {"lossAversion", number_or_null(m.lambda)}};
    };
    Json j{{"efficacy", marg(eff_)},
           {"toxicity", marg(tox_)},
           {"kE", weights_ ? Json(weights_->first) : Json(nullptr)},
           {"kT", weights_ ? Json(weights_->second) : Json(nullptr)}};
    return j;
}

std::optional<UtilityStopRule> ElicitationSession::stopping_rule() const {
    if (!stoppingTox_) return std::nullopt;
    return UtilityStopRule{script_.stoppingEfficacy.value_or(*eff_.ref), *stoppingTox_, script_.pU};
}

ElicitationSession replay_session(const ElicitationScript& script,
                                  const std::vector<LogEntry>& events) {
    ElicitationSession s(script);
    for (const auto& e : events) {
        if (e.event == "answer")
            s.answer(e.phase, e.index, e.value, e.timestamp);
        else if (e.event == "reopen")
            s.reopen(e.phase, e.timestamp);
        else
            throw InvalidConfig("unknown session event '" + e.event + "'");
    }
    return s;
}

}  // namespace r2dt
