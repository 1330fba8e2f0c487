#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "r2dt/trial.hpp"
#include "r2dt/utility.hpp"

namespace r2dt {

using Json = nlohmann::json;

enum class LotteryDomain { Gain, Loss, Mixed };

std::string to_string(LotteryDomain d);

/// The gamble <x1, mixing, x3>: x1 with probability `mixing`, else x3.
struct LotteryQuestion {
    Attribute attribute = Attribute::Efficacy;
    double x1 = 0.5;
    double x3 = 1.0;
    double mixing = 0.5;
    LotteryDomain domain = LotteryDomain::Gain;
};

/// Exponent alpha with mixing*d1^alpha + (1-mixing)*d3^alpha = dce^alpha,
/// d being distances from the reference on the gain side. Bisection on
/// [0.01, 5]. Throws InconsistentAnswer when ce is not strictly inside the
/// lottery, OutOfFamily when no alpha in the bracket fits.
double solve_gain_exponent(double reference, const LotteryQuestion& q, double ce);

/// As solve_gain_exponent on the loss side; loss aversion cancels.
double solve_loss_exponent(double reference, const LotteryQuestion& q, double ce);

/// Loss aversion from a lottery straddling the reference, given both
/// exponents. Closed form on either side of the reference.
double solve_loss_aversion(double reference, double gainExponent, double lossExponent,
                           const LotteryQuestion& q, double ce);

/// (x1, y1) judged as good as (x2, y2); x is efficacy, y toxicity.
struct IndifferencePair {
    double x1, y1, x2, y2;
};

/// kE, kT from two indifference pairs given solved marginals. Throws
/// UninformativePairs on a singular system and InconsistentAnswer when the
/// solution leaves [0,1]^2.
std::pair<double, double> solve_joint_weights(const IndifferencePair& a, const IndifferencePair& b,
                                              const MarginalUtilityParams& eff,
                                              const MarginalUtilityParams& tox);

/// Utility of the stopping-contour point.
double derive_stopping_threshold(double pointE, double pointT, const JointUtilityParams& up);

/// Certainty equivalent implied by `p` for lottery `q`, by bisection on the
/// marginal utility between the lottery endpoints.
double certainty_equivalent(const MarginalUtilityParams& p, const LotteryQuestion& q);

/// Toxicity y2 making (x2, y2) indifferent to (x1, y1); nullopt when no
/// y2 in [0,1] does.
std::optional<double> indifferent_toxicity(double x1, double y1, double x2,
                                           const JointUtilityParams& up);

struct ConsistencyReport {
    LotteryQuestion question;
    double predictedCE = 0.0;
    double statedCE = 0.0;
    double discrepancy = 0.0;
    bool pass = false;
    /// Stated answer lies outside the lottery range.
    bool hardFail = false;
};

ConsistencyReport check_consistency(const MarginalUtilityParams& p, const LotteryQuestion& q,
                                    double statedCE, double tolerance = 0.05);

enum class Phase {
    RefE,
    GainE,
    LossE,
    LambdaE,
    RefT,
    GainT,
    LossT,
    LambdaT,
    JointWeights,
    StoppingPoint,
    Consistency,
    Done,
};

std::string to_string(Phase p);
Phase phase_from_string(const std::string& s);

/// Pair question offsets relative to the elicited references:
/// x1 = refE + x1Offset, y1 = refT + y1Offset, x2 = refE + x2Offset, all
/// clipped to [0,1].
struct TradeoffTemplate {
    double x1Offset = 0.0;
    double y1Offset = 0.0;
    double x2Offset = 0.2;
};

/// Extra lottery asked in the Consistency phase; endpoints are offsets
/// from the attribute's reference.
struct ConsistencyTemplate {
    Attribute attribute = Attribute::Efficacy;
    double lowOffset = 0.0;
    double highOffset = 0.2;
    double mixing = 0.5;
};

/// Lottery spans and extra questions; the defaults mirror the worked
/// examples (<ref, ref+0.2> for the efficacy gain lottery and so on).
struct ElicitationScript {
    double gainSpan = 0.2;
    double lossSpan = 0.2;
    double mixedSpan = 0.2;
    double mixing = 0.5;
    TradeoffTemplate pairA{0.0, 0.0, 0.2};
    TradeoffTemplate pairB{0.4, 0.2, 0.2};
    /// Efficacy level at which the stopping question asks for the maximum
    /// acceptable toxicity; nullopt uses the efficacy reference.
    std::optional<double> stoppingEfficacy;
    double pU = 0.1;
    std::vector<ConsistencyTemplate> consistency{
        {Attribute::Efficacy, 0.05, 0.25, 0.5},
        {Attribute::Toxicity, -0.15, 0.05, 0.5},
    };
    double consistencyTolerance = 0.05;
};

void to_json(Json& j, const ElicitationScript& s);
void from_json(const Json& j, ElicitationScript& s);
void to_json(Json& j, const LotteryQuestion& q);
void to_json(Json& j, const ConsistencyReport& r);

struct Question {
    enum class Kind { Reference, Lottery, Tradeoff, StoppingToxicity };
    Phase phase = Phase::RefE;
    int index = 0;
    Kind kind = Kind::Reference;
    Attribute attribute = Attribute::Efficacy;
    std::optional<LotteryQuestion> lottery;
    /// Tradeoff: (x1, y1) known, x2 given, y2 asked. StoppingToxicity uses x1.
    double x1 = 0.0, y1 = 0.0, x2 = 0.0;
    std::string prompt;
};

void to_json(Json& j, const Question& q);

/// One accepted event: an answer or a reopen.
struct LogEntry {
    std::string event;  // "answer" or "reopen"
    Phase phase = Phase::RefE;
    int index = 0;
    double value = 0.0;
    Json question;  // null for reopen
    Json solved;    // parameters fixed by this event
    std::string timestamp;
};

void to_json(Json& j, const LogEntry& e);
void from_json(const Json& j, LogEntry& e);

/// Phase-ordered elicitation. Each answer is validated against the current
/// question; solved values stay fixed until their phase is reopened.
class ElicitationSession {
   public:
    explicit ElicitationSession(ElicitationScript script = {});

    const ElicitationScript& script() const { return script_; }
    Phase phase() const;
    /// nullopt once Done.
    std::optional<Question> next_question() const;

    /// Throws OutOfOrder when (phase, index) is not the current question,
    /// InconsistentAnswer (or subclasses) when the answer cannot be used.
    /// On error the session is unchanged.
    const LogEntry& answer(Phase phase, int index, double value, std::string timestamp = {});

    /// Clears `phase` and every phase depending on it.
    const LogEntry& reopen(Phase phase, std::string timestamp = {});

    bool parameters_complete() const;
    /// Requires parameters_complete().
    JointUtilityParams params() const;
    /// What has been solved so far, keyed by parameter name.
    Json partial_params() const;
    std::optional<UtilityStopRule> stopping_rule() const;
    const std::vector<ConsistencyReport>& consistency_reports() const { return reports_; }
    const std::vector<LogEntry>& log() const { return log_; }

   private:
    struct Marginal {
        std::optional<double> ref, gain, loss, lambda;
    };
    Marginal& marginal(Attribute a) { return a == Attribute::Efficacy ? eff_ : tox_; }
    const Marginal& marginal(Attribute a) const { return a == Attribute::Efficacy ? eff_ : tox_; }
    MarginalUtilityParams marginal_params(Attribute a) const;
    LotteryQuestion lottery_for(Phase p) const;
    Question tradeoff_question(int index) const;
    Json apply(const Question& q, double value);

    ElicitationScript script_;
    Marginal eff_, tox_;
    std::vector<double> pairAnswers_;
    std::optional<std::pair<double, double>> weights_;
    std::optional<double> stoppingTox_;
    std::vector<ConsistencyReport> reports_;
    std::vector<LogEntry> log_;
};

/// Rebuilds a session from its script and event log.
ElicitationSession replay_session(const ElicitationScript& script,
                                  const std::vector<LogEntry>& events);

}  // namespace r2dt
