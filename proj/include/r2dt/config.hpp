#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "r2dt/model.hpp"
#include "r2dt/sampler.hpp"
#include "r2dt/simulation.hpp"
#include "r2dt/trial.hpp"
#include "r2dt/utility.hpp"

namespace r2dt {

using Json = nlohmann::json;

// Serialisation of domain types. Readers start from the type's defaults and
// override only the keys present; malformed input raises InvalidConfig.

void to_json(Json& j, const MarginalUtilityParams& p);
void from_json(const Json& j, MarginalUtilityParams& p);
void to_json(Json& j, const JointUtilityParams& p);
void from_json(const Json& j, JointUtilityParams& p);

void to_json(Json& j, const NormalPrior& p);
void from_json(const Json& j, NormalPrior& p);
void to_json(Json& j, const PriorSpec& p);
void from_json(const Json& j, PriorSpec& p);

void to_json(Json& j, const McmcConfig& c);
void from_json(const Json& j, McmcConfig& c);

void to_json(Json& j, const ConventionalThresholds& c);
void from_json(const Json& j, ConventionalThresholds& c);
void to_json(Json& j, const UtilityStopRule& c);
void from_json(const Json& j, UtilityStopRule& c);
/// The utility field is written inline. On reading it may also be the name
/// of a set in the config's "utility" section (see design_from_json).
void to_json(Json& j, const DesignConfig& c);

void to_json(Json& j, const Scenario& s);
void from_json(const Json& j, Scenario& s);

void to_json(Json& j, const Outcome& o);
void from_json(const Json& j, Outcome& o);
void to_json(Json& j, const DoseDiagnostics& d);
void to_json(Json& j, const Decision& d);
void from_json(const Json& j, Decision& d);
void to_json(Json& j, const CohortRecord& r);
void to_json(Json& j, const TrialState& s);

void to_json(Json& j, const OperatingCharacteristics& oc);
void to_json(Json& j, const SelectionCurve& c);

using NamedUtilities = std::map<std::string, JointUtilityParams>;

/// Reads a design. A string "utility" looks up `named`; a missing one uses
/// the reference-dependent defaults.
DesignConfig design_from_json(const Json& j, const NamedUtilities& named = {});

/// The full simulation-study configuration: doses, prior, named utility
/// sets, designs, scenarios, mcmc and rng sections.
Json default_config_json();

/// Parses a config document. Missing sections fall back to the defaults of
/// default_config_json().
StudyConfig study_config_from_json(const Json& j);

/// Keeps scenarios whose id is listed (empty list keeps all), in list order.
void select_scenarios(StudyConfig& cfg, const std::vector<int>& ids);
/// Keeps designs by name, in list order; unknown names raise InvalidConfig.
void select_designs(StudyConfig& cfg, const std::vector<std::string>& names);

/// summary.json content: settings plus per-cell OC, curve and oracle dose.
Json study_summary_json(const StudyResult& r);

/// Parses "1..10", "1,3,5" or "2..4,9" into ids.
std::vector<int> parse_id_list(const std::string& text);

}  // namespace r2dt
