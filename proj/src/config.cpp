#include "r2dt/config.hpp"

#include <algorithm>
#include <sstream>

#include "r2dt/errors.hpp"

namespace r2dt {

namespace {

template <class T>
void read_opt(const Json& j, const char* key, T& field) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return;
    try {
        it->get_to(field);
    } catch (const Json::exception& e) {
        throw InvalidConfig(std::string("field '") + key + "': " + e.what());
    }
}

void require_object(const Json& j, const char* what) {
    if (!j.is_object()) throw InvalidConfig(std::string(what) + " must be a JSON object");
}

Json optional_index(const std::optional<std::size_t>& i) {
    return i ? Json(*i) : Json(nullptr);
}

}  // namespace

void to_json(Json& j, const MarginalUtilityParams& p) {
    j = Json{{"reference", p.reference},
             {"lossAversion", p.lossAversion},
             {"gainExponent", p.gainExponent},
             {"lossExponent", p.lossExponent},
             {"attribute", to_string(p.attribute)}};
}

void from_json(const Json& j, MarginalUtilityParams& p) {
    require_object(j, "marginal utility");
    read_opt(j, "reference", p.reference);
    read_opt(j, "lossAversion", p.lossAversion);
    read_opt(j, "gainExponent", p.gainExponent);
    read_opt(j, "lossExponent", p.lossExponent);
    if (j.contains("attribute")) p.attribute = attribute_from_string(j.at("attribute").get<std::string>());
}

void to_json(Json& j, const JointUtilityParams& p) {
    j = Json{{"kE", p.kE}, {"kT", p.kT}, {"efficacy", p.eff}, {"toxicity", p.tox}};
}

void from_json(const Json& j, JointUtilityParams& p) {
    require_object(j, "utility");
    read_opt(j, "kE", p.kE);
    read_opt(j, "kT", p.kT);
    read_opt(j, "efficacy", p.eff);
    read_opt(j, "toxicity", p.tox);
    p.eff.attribute = Attribute::Efficacy;
    p.tox.attribute = Attribute::Toxicity;
}

void to_json(Json& j, const NormalPrior& p) { j = Json{{"mean", p.mean}, {"sd", p.sd}}; }

void from_json(const Json& j, NormalPrior& p) {
    require_object(j, "prior entry");
    read_opt(j, "mean", p.mean);
    read_opt(j, "sd", p.sd);
}

void to_json(Json& j, const PriorSpec& p) {
    j = Json{{"muE", p.muE}, {"betaE1", p.betaE1}, {"betaE2", p.betaE2}, {"muT", p.muT},
             {"betaT", p.betaT}};
}

void from_json(const Json& j, PriorSpec& p) {
    require_object(j, "prior");
    read_opt(j, "muE", p.muE);
    read_opt(j, "betaE1", p.betaE1);
    read_opt(j, "betaE2", p.betaE2);
    read_opt(j, "muT", p.muT);
    read_opt(j, "betaT", p.betaT);
}

void to_json(Json& j, const McmcConfig& c) {
    j = Json{{"chainLength", c.chainLength}, {"burnIn", c.burnIn}, {"seed", c.seed}};
}

void from_json(const Json& j, McmcConfig& c) {
    require_object(j, "mcmc");
    read_opt(j, "chainLength", c.chainLength);
    read_opt(j, "burnIn", c.burnIn);
    read_opt(j, "seed", c.seed);
}

void to_json(Json& j, const ConventionalThresholds& c) {
    j = Json{{"piAddE", c.piAddE}, {"pE", c.pE}, {"piAddT", c.piAddT}, {"pT", c.pT}};
}

void from_json(const Json& j, ConventionalThresholds& c) {
    require_object(j, "conventional thresholds");
    read_opt(j, "piAddE", c.piAddE);
    read_opt(j, "pE", c.pE);
    read_opt(j, "piAddT", c.piAddT);
    read_opt(j, "pT", c.pT);
}

void to_json(Json& j, const UtilityStopRule& c) {
    j = Json{{"refPointE", c.refPointE}, {"refPointT", c.refPointT}, {"pU", c.pU}};
}

void from_json(const Json& j, UtilityStopRule& c) {
    require_object(j, "utility stop rule");
    read_opt(j, "refPointE", c.refPointE);
    read_opt(j, "refPointT", c.refPointT);
    read_opt(j, "pU", c.pU);
}

void to_json(Json& j, const DesignConfig& c) {
    j = Json{{"name", c.name},
             {"variant", to_string(c.variant)},
             {"utility", c.utility},
             {"conventional", c.conventional},
             {"utilityStop", c.utilityStop},
             {"cohortSize", c.cohortSize},
             {"maxN", c.maxN},
             {"startDoseIndex", c.startDoseIndex}};
}

DesignConfig design_from_json(const Json& j, const NamedUtilities& named) {
    require_object(j, "design");
    DesignConfig c;
    read_opt(j, "name", c.name);
    if (j.contains("variant")) c.variant = design_variant_from_string(j.at("variant").get<std::string>());
    if (auto it = j.find("utility"); it != j.end()) {
        if (it->is_string()) {
            auto u = named.find(it->get<std::string>());
            if (u == named.end())
                throw InvalidConfig("design '" + c.name + "' names unknown utility set '" +
                                    it->get<std::string>() + "'");
            c.utility = u->second;
        } else {
            read_opt(j, "utility", c.utility);
        }
    }
    read_opt(j, "conventional", c.conventional);
    read_opt(j, "utilityStop", c.utilityStop);
    read_opt(j, "cohortSize", c.cohortSize);
    read_opt(j, "maxN", c.maxN);
    read_opt(j, "startDoseIndex", c.startDoseIndex);
    return c;
}

void to_json(Json& j, const Scenario& s) {
    j = Json{{"id", s.id}, {"label", s.label}, {"trueEff", s.trueEff}, {"trueTox", s.trueTox}};
}

void from_json(const Json& j, Scenario& s) {
    require_object(j, "scenario");
    read_opt(j, "id", s.id);
    read_opt(j, "label", s.label);
    read_opt(j, "trueEff", s.trueEff);
    read_opt(j, "trueTox", s.trueTox);
    if (s.label.empty()) s.label = "Scenario " + std::to_string(s.id);
}

void to_json(Json& j, const Outcome& o) { j = Json{{"yE", o.yE}, {"yT", o.yT}}; }

void from_json(const Json& j, Outcome& o) {
    require_object(j, "outcome");
    if (!j.contains("yE") || !j.contains("yT"))
        throw InvalidCohort("each outcome needs yE and yT");
    read_opt(j, "yE", o.yE);
    read_opt(j, "yT", o.yT);
}

void to_json(Json& j, const DoseDiagnostics& d) {
    j = Json{{"expectedUtility", d.expectedUtility},
             {"admissible", d.admissible},
             {"probEfficacyBelow", d.probEfficacyBelow},
             {"probToxicityAbove", d.probToxicityAbove},
             {"probUtilityBelow", d.probUtilityBelow}};
}

void to_json(Json& j, const Decision& d) {
    j = Json{{"kind", d.stops() ? "StopNoDose" : "TreatAt"}, {"diagnostics", d.diagnostics}};
    if (!d.stops()) {
        j["doseIndex"] = d.doseIndex;
        j["proposedIndex"] = d.proposedIndex;
    }
}

void from_json(const Json& j, Decision& d) {
    require_object(j, "decision");
    const auto kind = j.at("kind").get<std::string>();
    d = Decision{};
    d.kind = kind == "StopNoDose" ? Decision::Kind::StopNoDose : Decision::Kind::TreatAt;
    read_opt(j, "doseIndex", d.doseIndex);
    read_opt(j, "proposedIndex", d.proposedIndex);
    for (const auto& e : j.value("diagnostics", Json::array())) {
        DoseDiagnostics x;
        read_opt(e, "expectedUtility", x.expectedUtility);
        read_opt(e, "admissible", x.admissible);
        read_opt(e, "probEfficacyBelow", x.probEfficacyBelow);
        read_opt(e, "probToxicityAbove", x.probToxicityAbove);
        read_opt(e, "probUtilityBelow", x.probUtilityBelow);
        d.diagnostics.push_back(x);
    }
}

void to_json(Json& j, const CohortRecord& r) {
    j = Json{{"cohort", r.cohort},
             {"doseIndex", r.doseIndex},
             {"outcomes", r.outcomes},
             {"decision", r.decision},
             {"overridden", r.overridden}};
}

void to_json(Json& j, const TrialState& s) {
    Json records = Json::array();
    for (const auto& r : s.data.records)
        records.push_back({{"doseIndex", r.doseIndex}, {"yE", r.yE}, {"yT", r.yT}});
    j = Json{{"records", records},
             {"highestTriedIndex", optional_index(s.highestTriedIndex)},
             {"cohortsDone", s.cohortsDone},
             {"status", to_string(s.status)},
             {"selectedDose", optional_index(s.selectedDose)}};
}

void to_json(Json& j, const OperatingCharacteristics& oc) {
    j = Json{{"selectionPercent", oc.selectionPercent},
             {"meanPatients", oc.meanPatients},
             {"noDoseSelectedPercent", oc.noDoseSelectedPercent},
             {"reps", oc.reps}};
}

void to_json(Json& j, const SelectionCurve& c) {
    j = Json{{"sampleSizes", c.sampleSizes},
             {"fraction", c.fraction},
             {"noDoseFraction", c.noDoseFraction}};
}

Json default_config_json() {
    Json designs = Json::array();
    for (const auto& d : reference_designs()) {
        Json jd = d;
        if (d.name.rfind("R2DT", 0) == 0)
            jd["utility"] = "r2dt";
        else if (d.name == "EFFTOXU7")
            jd["utility"] = "efftoxu_b";
        else
            jd["utility"] = "efftoxu";
        designs.push_back(jd);
    }
    return Json{
        {"doses", {20.0, 30.0, 40.0, 50.0}},
        {"prior", PriorSpec{}},
        {"utility",
         {{"r2dt", default_r2dt_params()},
          {"efftoxu", efftoxu_params(0.25, 0.15)},
          {"efftoxu_b", efftoxu_params(0.5, 0.3)}}},
        {"designs", designs},
        {"scenarios", reference_scenarios()},
        {"mcmc", {{"chainLength", 6000}, {"burnIn", 2000}}},
        {"rng", {{"seed", StudyConfig{}.seed}}},
        {"reps", 500},
        {"parallelism", 0},
    };
}

StudyConfig study_config_from_json(const Json& in) {
    require_object(in, "config");
    const Json defaults = default_config_json();
    auto section = [&](const char* key) -> const Json& {
        auto it = in.find(key);
        return it != in.end() && !it->is_null() ? *it : defaults.at(key);
    };
    StudyConfig cfg;
    try {
        const auto doses = section("doses").get<std::vector<double>>();
        cfg.grid = transform_doses(doses);
        cfg.prior = section("prior").get<PriorSpec>();
        cfg.mcmc = section("mcmc").get<McmcConfig>();

        NamedUtilities named;
        for (const auto& [name, u] : defaults.at("utility").items()) named[name] = u.get<JointUtilityParams>();
        if (in.contains("utility")) {
            require_object(in.at("utility"), "utility section");
            for (const auto& [name, u] : in.at("utility").items()) named[name] = u.get<JointUtilityParams>();
        }
        const Json& designs = section("designs");
        if (!designs.is_array()) throw InvalidConfig("designs must be an array");
        for (const auto& d : designs) cfg.designs.push_back(design_from_json(d, named));

        const Json& scenarios = section("scenarios");
        if (!scenarios.is_array()) throw InvalidConfig("scenarios must be an array");
        for (const auto& s : scenarios) cfg.scenarios.push_back(s.get<Scenario>());

        const Json& rng = section("rng");
        require_object(rng, "rng");
        read_opt(rng, "seed", cfg.seed);
        read_opt(in, "reps", cfg.reps);
        read_opt(in, "parallelism", cfg.parallelism);
    } catch (const Json::exception& e) {
        throw InvalidConfig(std::string("malformed config: ") + e.what());
    } catch (const InvalidDoseGrid& e) {
        throw InvalidConfig(e.what());
    } catch (const InvalidParams& e) {
        throw InvalidConfig(e.what());
    }
    validate(cfg);
    return cfg;
}

void select_scenarios(StudyConfig& cfg, const std::vector<int>& ids) {
    if (ids.empty()) return;
    std::vector<Scenario> kept;
    for (int id : ids) {
        auto it = std::find_if(cfg.scenarios.begin(), cfg.scenarios.end(),
                               [&](const Scenario& s) { return s.id == id; });
        if (it == cfg.scenarios.end()) throw InvalidConfig("unknown scenario id " + std::to_string(id));
        kept.push_back(*it);
    }
    cfg.scenarios = std::move(kept);
}

void select_designs(StudyConfig& cfg, const std::vector<std::string>& names) {
    if (names.empty()) return;
    std::vector<DesignConfig> kept;
    for (const auto& n : names) {
        auto it = std::find_if(cfg.designs.begin(), cfg.designs.end(),
                               [&](const DesignConfig& d) { return d.name == n; });
        if (it == cfg.designs.end()) throw InvalidConfig("unknown design '" + n + "'");
        kept.push_back(*it);
    }
    cfg.designs = std::move(kept);
}

Json study_summary_json(const StudyResult& r) {
    Json cells = Json::array();
    for (const auto& c : r.cells) {
        cells.push_back({{"scenario", c.scenarioId},
                         {"label", c.scenarioLabel},
                         {"design", c.design},
                         {"utilityAtTruth", c.utilityAtTruth},
                         {"optimalDoseIndex", optional_index(c.optimalDose)},
                         {"oc", c.oc},
                         {"curve", c.curve}});
    }
    return Json{{"doses", r.doses}, {"reps", r.reps}, {"seed", r.seed}, {"cells", cells}};
}

std::vector<int> parse_id_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string part;
    auto to_int = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(s, &used);
            if (used != s.size()) throw InvalidConfig("");
            return v;
        } catch (const std::exception&) {
            throw InvalidConfig("bad id list '" + text + "'");
        }
    };
    while (std::getline(ss, part, ',')) {
        if (part.empty()) continue;
        const auto dots = part.find("..");
        if (dots == std::string::npos) {
            out.push_back(to_int(part));
            continue;
        }
        const int lo = to_int(part.substr(0, dots));
        const int hi = to_int(part.substr(dots + 2));
        if (hi < lo) throw InvalidConfig("bad id range '" + part + "'");
        for (int i = lo; i <= hi; ++i) out.push_back(i);
    }
    return out;
}

}  // namespace r2dt
