// Python extension. Structured arguments and results cross the boundary as
// JSON text; r2dt/__init__.py turns them into dicts.

#include <algorithm>
#include <map>
#include <memory>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "r2dt/config.hpp"
#include "r2dt/elicitation.hpp"
#include "r2dt/errors.hpp"
#include "r2dt/service.hpp"
#include "r2dt/simulation.hpp"
#include "r2dt/utility.hpp"

namespace py = pybind11;
using namespace r2dt;

namespace {

Json parse(const std::string& text) {
    if (text.empty()) return Json::object();
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        throw InvalidConfig(e.what());
    }
}

JointUtilityParams utility_from(const std::string& text) {
    const Json j = parse(text);
    if (j.is_string()) {
        const Json named = default_config_json().at("utility");
        const auto name = j.get<std::string>();
        if (!named.contains(name)) throw InvalidConfig("unknown utility preset '" + name + "'");
        return named.at(name).get<JointUtilityParams>();
    }
    JointUtilityParams p = default_r2dt_params();
    from_json(j, p);
    validate(p);
    return p;
}

std::string evaluate_utility(double piE, double piT, const std::string& params) {
    const JointUtility u(utility_from(params));
    Json out{{"utility", u(piE, piT)},
             {"efficacyUtility", u.efficacy(piE)},
             {"toxicityUtility", u.toxicity(piT)},
             {"warnings", regime_warnings(u.params())}};
    return out.dump();
}

std::vector<std::pair<double, double>> contour(double level, const std::string& params,
                                               int resolution) {
    std::vector<std::pair<double, double>> out;
    for (const auto& c : utility_contour(level, utility_from(params), resolution))
        out.emplace_back(c.piE, c.piT);
    return out;
}

std::string dose_transform(const std::vector<double>& doses) {
    const DoseGrid g = transform_doses(doses);
    return Json{{"doses", g.rawDoses}, {"x", g.transformed}, {"x2", g.transformedSquared}}.dump();
}

// Runs one trial replicate against a scenario and returns its trajectory.
std::string simulate_trial(const std::string& designName, int scenarioId, int replicate,
                           std::uint64_t seed) {
    const StudyConfig cfg = study_config_from_json(default_config_json());
    const DesignConfig design = reference_design(designName);
    const auto it = std::find_if(cfg.scenarios.begin(), cfg.scenarios.end(),
                                 [&](const Scenario& s) { return s.id == scenarioId; });
    if (it == cfg.scenarios.end()) throw InvalidConfig("unknown scenario");
    const OutcomeTable table = generate_outcomes(*it, replicate + 1, design.maxN, seed);
    const ReplicateResult r = run_replicate(design, table, replicate, cfg.grid, cfg.prior, cfg.mcmc,
                                            {seed, scenarioId, replicate});
    Json out{{"trajectory", r.trajectory},
             {"final", r.finalDecision},
             {"state", r.finalState},
             {"patientsPerDose", r.patientsPerDose},
             {"stoppedEarly", r.stoppedEarly}};
    return out.dump();
}

std::string run_study_json(const std::string& config, const std::string& scenarios,
                           const std::vector<std::string>& designs, int reps, std::int64_t seed,
                           int threads) {
    const Json doc = parse(config);
    StudyConfig cfg = study_config_from_json(doc.empty() ? default_config_json() : doc);
    if (!scenarios.empty()) select_scenarios(cfg, parse_id_list(scenarios));
    if (!designs.empty()) select_designs(cfg, designs);
    if (reps >= 0) cfg.reps = reps;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (threads >= 0) cfg.parallelism = threads;
    validate(cfg);
    StudyResult result;
    {
        py::gil_scoped_release release;
        result = run_study(cfg);
    }
    return study_summary_json(result).dump();
}

class PySession {
   public:
    explicit PySession(const std::string& script) {
        ElicitationScript s;
        const Json j = parse(script);
        if (!j.empty()) from_json(j, s);
        session_ = ElicitationSession(s);
    }
    std::string phase() const { return to_string(session_.phase()); }
    std::string next_question() const {
        const auto q = session_.next_question();
        return q ? Json(*q).dump() : "null";
    }
    std::string answer(const std::string& phase, int index, double value) {
        return Json(session_.answer(phase_from_string(phase), index, value)).dump();
    }
    std::string reopen(const std::string& phase) {
        return Json(session_.reopen(phase_from_string(phase))).dump();
    }
    bool complete() const { return session_.parameters_complete(); }
    std::string params() const {
        Json out = session_.partial_params();
        if (session_.parameters_complete()) out["utility"] = session_.params();
        if (const auto r = session_.stopping_rule())
            out["stoppingRule"] = Json{{"refPointE", r->refPointE},
                                       {"refPointT", r->refPointT},
                                       {"pU", r->pU}};
        out["consistency"] = session_.consistency_reports();
        return out.dump();
    }
    std::string log() const { return Json(session_.log()).dump(); }

   private:
    ElicitationSession session_;
};

class PyService {
   public:
    PyService(const std::string& dataDir, int workers, const std::string& token) {
        ServiceConfig cfg;
        cfg.dataDir = dataDir;
        cfg.workers = workers;
        cfg.token = token;
        service_ = std::make_unique<Service>(cfg);
    }
    std::pair<int, std::string> request(const std::string& method, const std::string& path,
                                        const std::string& body,
                                        const std::map<std::string, std::string>& query,
                                        const std::string& authorization) {
        ApiResponse r;
        {
            py::gil_scoped_release release;
            r = service_->handle(method, path, query, body, authorization);
        }
        return {r.status, r.body.dump()};
    }
    void wait_for_jobs() {
        py::gil_scoped_release release;
        service_->wait_for_jobs();
    }

   private:
    std::unique_ptr<Service> service_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Reference-dependent Phase I-II dose-finding engine";

    auto base = py::register_exception<Error>(m, "Error", PyExc_ValueError);
    py::register_exception<InvalidParams>(m, "InvalidParams", base);
    py::register_exception<InvalidConfig>(m, "InvalidConfig", base);
    py::register_exception<InvalidCohort>(m, "InvalidCohort", base);
    py::register_exception<InconsistentAnswer>(m, "InconsistentAnswer", base);
    py::register_exception<OutOfOrder>(m, "OutOfOrder", base);

    m.def("evaluate_utility", &evaluate_utility, py::arg("piE"), py::arg("piT"),
          py::arg("params") = "");
    m.def("contour", &contour, py::arg("level"), py::arg("params") = "",
          py::arg("resolution") = 201);
    m.def("dose_transform", &dose_transform, py::arg("doses"));
    m.def("default_config", [] { return default_config_json().dump(); });
    m.def("simulate_trial", &simulate_trial, py::arg("design"), py::arg("scenario"),
          py::arg("replicate") = 0, py::arg("seed") = 20240601);
    m.def("run_study", &run_study_json, py::arg("config") = "", py::arg("scenarios") = "",
          py::arg("designs") = std::vector<std::string>{}, py::arg("reps") = -1,
          py::arg("seed") = -1, py::arg("threads") = -1);

    py::class_<PySession>(m, "ElicitationSession")
        .def(py::init<const std::string&>(), py::arg("script") = "")
        .def("phase", &PySession::phase)
        .def("next_question", &PySession::next_question)
        .def("answer", &PySession::answer, py::arg("phase"), py::arg("index"), py::arg("value"))
        .def("reopen", &PySession::reopen, py::arg("phase"))
        .def("complete", &PySession::complete)
        .def("params", &PySession::params)
        .def("log", &PySession::log);

    py::class_<PyService>(m, "Service")
        .def(py::init<const std::string&, int, const std::string&>(), py::arg("data_dir"),
             py::arg("workers") = 1, py::arg("token") = "")
        .def("request", &PyService::request, py::arg("method"), py::arg("path"),
             py::arg("body") = "", py::arg("query") = std::map<std::string, std::string>{},
             py::arg("authorization") = "")
        .def("wait_for_jobs", &PyService::wait_for_jobs);
}
