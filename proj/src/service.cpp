#include "r2dt/service.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "r2dt/config.hpp"
#include "r2dt/errors.hpp"
#include "r2dt/rng.hpp"

namespace r2dt {

namespace fs = std::filesystem;

namespace {

std::string now_iso() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms
      << 'Z';
    return s.str();
}

void append_line(const fs::path& file, const Json& j) {
    std::ofstream out(file, std::ios::app);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << j.dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + file.string());
}

std::vector<Json> read_lines(const fs::path& file) {
    std::vector<Json> out;
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        // a torn final line from a crash mid-write is dropped
        try {
            out.push_back(Json::parse(line));
        } catch (const Json::parse_error&) {
            std::cerr << "r2dt: skipping unreadable line in " << file << '\n';
        }
    }
    return out;
}

std::string slurp(const fs::path& file) {
    std::ifstream in(file);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::stringstream ss(path);
    std::string p;
    while (std::getline(ss, p, '/'))
        if (!p.empty()) parts.push_back(p);
    return parts;
}

NamedUtilities named_utilities() {
    NamedUtilities named;
    const Json defaults = default_config_json();
    for (const auto& [name, u] : defaults.at("utility").items())
        named[name] = u.get<JointUtilityParams>();
    return named;
}

JointUtilityParams utility_from(const Json& j) {
    if (j.is_null()) return default_r2dt_params();
    if (j.is_string()) {
        const auto named = named_utilities();
        auto it = named.find(j.get<std::string>());
        if (it == named.end()) throw InvalidParams("unknown utility preset '" + j.get<std::string>() + "'");
        return it->second;
    }
    JointUtilityParams p = default_r2dt_params();
    from_json(j, p);
    validate(p);
    return p;
}

double number_field(const Json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || !it->is_number())
        throw ApiError(422, std::string("field '") + key + "' must be a number");
    return it->get<double>();
}

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (part.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw ApiError(422, "bad number '" + part + "'");
        }
    }
    return out;
}

Json error_body(int status, const std::string& type, const std::string& message) {
    return Json{{"error", {{"status", status}, {"type", type}, {"message", message}}}};
}

}  // namespace

ServiceConfig service_config_from_env() {
    ServiceConfig c;
    if (const char* d = std::getenv("R2DT_DATA_DIR")) c.dataDir = d;
    if (const char* w = std::getenv("R2DT_WORKERS")) c.workers = std::max(1, std::atoi(w));
    if (const char* t = std::getenv("R2DT_TOKEN")) c.token = t;
    return c;
}

Service::Service(ServiceConfig cfg) : cfg_(std::move(cfg)) {
    fs::create_directories(cfg_.dataDir / "sessions");
    fs::create_directories(cfg_.dataDir / "trials");
    fs::create_directories(cfg_.dataDir / "simulations");
    std::random_device rd;
    idSalt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    replay();
    for (int i = 0; i < std::max(1, cfg_.workers); ++i) workers_.emplace_back([this] { worker_loop(); });
}

Service::~Service() {
    {
        std::lock_guard lock(queueMutex_);
        stopping_ = true;
    }
    queueCv_.notify_all();
    for (auto& t : workers_) t.join();
}

std::string Service::new_id(const char* prefix) {
    std::lock_guard lock(registry_);
    const std::uint64_t h = mix_seed({idSalt_, ++idCounter_});
    std::ostringstream s;
    s << prefix << '-' << std::hex << std::setw(12) << std::setfill('0') << (h & 0xffffffffffffull);
    return s.str();
}

ApiResponse Service::handle(const std::string& method, const std::string& path,
                            const std::map<std::string, std::string>& query,
                            const std::string& body, const std::string& authorization) {
    try {
        if (!cfg_.token.empty() && authorization != "Bearer " + cfg_.token)
            throw ApiError(401, "missing or wrong bearer token");
        Json parsed = Json::object();
        if (!body.empty()) {
            try {
                parsed = Json::parse(body);
            } catch (const Json::parse_error& e) {
                throw ApiError(400, std::string("request body is not valid JSON: ") + e.what());
            }
        }
        return route(method, split_path(path), query, parsed);
    } catch (const ApiError& e) {
        return {e.status(), error_body(e.status(), "ApiError", e.what())};
    } catch (const OutOfOrder& e) {
        return {409, error_body(409, "OutOfOrder", e.what())};
    } catch (const OutOfFamily& e) {
        return {422, error_body(422, "OutOfFamily", e.what())};
    } catch (const UninformativePairs& e) {
        return {422, error_body(422, "UninformativePairs", e.what())};
    } catch (const InconsistentAnswer& e) {
        return {422, error_body(422, "InconsistentAnswer", e.what())};
    } catch (const InvalidCohort& e) {
        return {422, error_body(422, "InvalidCohort", e.what())};
    } catch (const DegenerateUtility& e) {
        return {422, error_body(422, "DegenerateUtility", e.what())};
    } catch (const InvalidParams& e) {
        return {422, error_body(422, "InvalidParams", e.what())};
    } catch (const InvalidConfig& e) {
        return {422, error_body(422, "InvalidConfig", e.what())};
    } catch (const InvalidDoseGrid& e) {
        return {422, error_body(422, "InvalidDoseGrid", e.what())};
    } catch (const Json::exception& e) {
        return {422, error_body(422, "InvalidPayload", e.what())};
    } catch (const std::exception& e) {
        return {500, error_body(500, "InternalError", e.what())};
    }
}

ApiResponse Service::route(const std::string& method, const std::vector<std::string>& p,
                           const std::map<std::string, std::string>& query, const Json& body) {
    auto expect = [&](const char* m) {
        if (method != m) throw ApiError(405, "method " + method + " not allowed here");
    };
    if (p.empty()) throw ApiError(404, "no such endpoint");
    if (p.size() == 1 && p[0] == "health") {
        expect("GET");
        return {200, {{"status", "ok"}}};
    }
    if (p[0] == "sessions") {
        if (p.size() == 1) {
            expect("POST");
            return create_session(body);
        }
        auto e = find_session(p[1]);
        std::lock_guard lock(e->mutex);
        if (p.size() == 2) {
            expect("GET");
            Json log = e->session.log();
            return {200, {{"id", p[1]}, {"phase", to_string(e->session.phase())}, {"log", log},
                          {"script", e->session.script()}}};
        }
        if (p.size() == 3 && p[2] == "next-question") {
            expect("GET");
            return session_next(*e);
        }
        if (p.size() == 3 && p[2] == "answers") {
            expect("POST");
            return session_answer(*e, body);
        }
        if (p.size() == 3 && p[2] == "reopen") {
            expect("POST");
            return session_reopen(*e, body);
        }
        if (p.size() == 3 && p[2] == "params") {
            expect("GET");
            return session_params(*e);
        }
    } else if (p[0] == "trials") {
        if (p.size() == 1) {
            expect("POST");
            return create_trial(body);
        }
        auto e = find_trial(p[1]);
        std::lock_guard lock(e->mutex);
        if (p.size() == 2) {
            expect("GET");
            auto r = trial_view(*e);
            r.body["id"] = p[1];
            return r;
        }
        if (p.size() == 3 && p[2] == "cohorts") {
            expect("POST");
            return trial_cohort(*e, body);
        }
        if (p.size() == 3 && p[2] == "recommendation") {
            expect("GET");
            return trial_recommendation(*e);
        }
    } else if (p[0] == "utility" && p.size() == 2) {
        if (p[1] == "contours") {
            expect("GET");
            return utility_contours(query);
        }
        if (p[1] == "evaluate") {
            expect("POST");
            return utility_evaluate(body);
        }
    } else if (p[0] == "simulations") {
        if (p.size() == 1) {
            expect("POST");
            return submit_simulation(body);
        }
        if (p.size() == 2) {
            expect("GET");
            auto e = find_job(p[1]);
            return simulation_view(p[1], *e);
        }
    }
    throw ApiError(404, "no such endpoint");
}

std::shared_ptr<Service::SessionEntry> Service::find_session(const std::string& id) {
    std::lock_guard lock(registry_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ApiError(404, "unknown session " + id);
    return it->second;
}

std::shared_ptr<Service::TrialEntry> Service::find_trial(const std::string& id) {
    std::lock_guard lock(registry_);
    auto it = trials_.find(id);
    if (it == trials_.end()) throw ApiError(404, "unknown trial " + id);
    return it->second;
}

std::shared_ptr<Service::JobEntry> Service::find_job(const std::string& id) {
    std::lock_guard lock(registry_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw ApiError(404, "unknown simulation " + id);
    return it->second;
}

// ---- elicitation sessions ----

ApiResponse Service::create_session(const Json& body) {
    ElicitationScript script;
    if (body.contains("script")) from_json(body.at("script"), script);
    const std::string id = new_id("s");
    auto e = std::make_shared<SessionEntry>(script);
    e->file = cfg_.dataDir / "sessions" / (id + ".ndjson");
    append_line(e->file, {{"type", "created"}, {"script", script}, {"timestamp", now_iso()}});
    {
        std::lock_guard lock(registry_);
        sessions_[id] = e;
    }
    std::lock_guard lock(e->mutex);
    auto r = session_next(*e);
    r.status = 201;
    r.body["id"] = id;
    return r;
}

ApiResponse Service::session_next(SessionEntry& e) {
    const auto q = e.session.next_question();
    return {200, {{"phase", to_string(e.session.phase())},
                  {"done", !q.has_value()},
                  {"question", q ? Json(*q) : Json(nullptr)}}};
}

ApiResponse Service::session_answer(SessionEntry& e, const Json& body) {
    if (!body.contains("phase") || !body.at("phase").is_string())
        throw ApiError(422, "field 'phase' must name the phase being answered");
    const Phase phase = phase_from_string(body.at("phase").get<std::string>());
    const int index = body.value("index", 0);
    const double value = number_field(body, "value");
    const LogEntry& entry = e.session.answer(phase, index, value, now_iso());
    Json line = entry;
    line["type"] = "event";
    append_line(e.file, line);
    auto r = session_next(e);
    r.body["accepted"] = entry;
    return r;
}

ApiResponse Service::session_reopen(SessionEntry& e, const Json& body) {
    if (!body.contains("phase") || !body.at("phase").is_string())
        throw ApiError(422, "field 'phase' must name the phase to reopen");
    const LogEntry& entry =
        e.session.reopen(phase_from_string(body.at("phase").get<std::string>()), now_iso());
    Json line = entry;
    line["type"] = "event";
    append_line(e.file, line);
    return session_next(e);
}

ApiResponse Service::session_params(SessionEntry& e) {
    const auto& s = e.session;
    Json out{{"phase", to_string(s.phase())},
             {"complete", s.parameters_complete()},
             {"partial", s.partial_params()},
             {"consistency", s.consistency_reports()}};
    if (s.parameters_complete()) {
        const auto up = s.params();
        out["params"] = up;
        out["warnings"] = regime_warnings(up);
        if (auto rule = s.stopping_rule()) {
            out["stoppingRule"] = *rule;
            out["uRef"] = derive_stopping_threshold(rule->refPointE, rule->refPointT, up);
        }
    }
    return {200, out};
}

// ---- live trials ----

ApiResponse Service::create_trial(const Json& body) {
    auto e = std::make_shared<TrialEntry>();
    const Json& d = body.contains("design") ? body.at("design") : Json("R2DT1");
    if (d.is_string())
        e->design = reference_design(d.get<std::string>());
    else
        e->design = design_from_json(d, named_utilities());
    if (body.contains("fromSession")) {
        auto s = find_session(body.at("fromSession").get<std::string>());
        std::lock_guard lock(s->mutex);
        e->design.utility = s->session.params();
        if (auto rule = s->session.stopping_rule()) e->design.utilityStop = *rule;
    }
    const auto doses = body.value("doses", std::vector<double>{20, 30, 40, 50});
    e->grid = transform_doses(doses);
    if (body.contains("prior")) from_json(body.at("prior"), e->prior);
    validate(e->prior);
    if (body.contains("mcmc")) from_json(body.at("mcmc"), e->mcmc);
    validate(e->mcmc);
    validate(e->design, e->grid);
    if (body.contains("seed")) {
        e->seed = body.at("seed").get<std::uint64_t>();
    } else {
        std::random_device rd;
        e->seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }
    e->current = opening_decision(e->design, e->grid.size());

    const std::string id = new_id("t");
    e->file = cfg_.dataDir / "trials" / (id + ".ndjson");
    append_line(e->file, {{"type", "created"},
                          {"design", e->design},
                          {"doses", doses},
                          {"prior", e->prior},
                          {"mcmc", e->mcmc},
                          {"seed", e->seed},
                          {"timestamp", now_iso()}});
    {
        std::lock_guard lock(registry_);
        trials_[id] = e;
    }
    std::lock_guard lock(e->mutex);
    auto r = trial_view(*e);
    r.status = 201;
    r.body["id"] = id;
    return r;
}

ApiResponse Service::trial_view(TrialEntry& e) {
    return {200, {{"design", e.design},
                  {"doses", e.grid.rawDoses},
                  {"seed", e.seed},
                  {"state", e.state},
                  {"recommendation", e.current},
                  {"history", e.history}}};
}

ApiResponse Service::trial_recommendation(TrialEntry& e) {
    Json j{{"status", to_string(e.state.status)}, {"decision", e.current}};
    if (!e.current.stops()) j["dose"] = e.grid.rawDoses[e.current.doseIndex];
    return {200, j};
}

Decision Service::apply_cohort(TrialEntry& e, std::size_t dose, const std::vector<Outcome>& outcomes,
                               bool overridden) {
    TrialState next = record_cohort(e.state, dose, outcomes, e.design, e.grid);
    McmcConfig mc = e.mcmc;
    mc.seed = mix_seed({e.seed, static_cast<std::uint64_t>(next.patients())});
    const PosteriorDraws draws = sample_posterior(next.data, e.prior, e.grid, mc);
    const bool final = reached_max_sample_size(next, e.design);
    Decision dec = final ? final_selection(next, draws, e.grid, e.design)
                         : next_decision(next, draws, e.grid, e.design);
    e.state = conclude(std::move(next), dec, final);
    e.current = dec;
    e.history.push_back({e.state.cohortsDone, dose, outcomes, dec, overridden});
    return dec;
}

ApiResponse Service::trial_cohort(TrialEntry& e, const Json& body) {
    if (e.state.status != TrialStatus::Running)
        throw ApiError(410, "trial has ended (" + to_string(e.state.status) + ")");
    if (!body.contains("doseIndex") || !body.at("doseIndex").is_number_unsigned())
        throw ApiError(422, "field 'doseIndex' must be a non-negative integer");
    const auto dose = body.at("doseIndex").get<std::size_t>();
    const bool overridden = body.value("override", false);
    if (dose != e.current.doseIndex && !overridden)
        throw ApiError(409, "cohort dose index " + std::to_string(dose) +
                                " differs from the recommended index " +
                                std::to_string(e.current.doseIndex) + "; set override to proceed");
    if (!body.contains("outcomes") || !body.at("outcomes").is_array())
        throw ApiError(422, "field 'outcomes' must be an array of {yE, yT}");
    const auto outcomes = body.at("outcomes").get<std::vector<Outcome>>();
    apply_cohort(e, dose, outcomes, overridden);
    append_line(e.file, {{"type", "cohort"},
                         {"doseIndex", dose},
                         {"outcomes", outcomes},
                         {"override", overridden},
                         {"decision", e.current},
                         {"timestamp", now_iso()}});
    return {200, {{"cohort", e.history.back()}, {"state", e.state}, {"recommendation", e.current}}};
}

// ---- utility queries ----

ApiResponse Service::utility_contours(const std::map<std::string, std::string>& query) {
    JointUtilityParams up = default_r2dt_params();
    if (auto it = query.find("params"); it != query.end()) {
        Json j;
        try {
            j = Json::parse(it->second);
        } catch (const Json::parse_error&) {
            throw ApiError(400, "query parameter 'params' is not valid JSON");
        }
        up = utility_from(j);
    } else if (auto p = query.find("preset"); p != query.end()) {
        up = utility_from(Json(p->second));
    }
    validate(up);
    std::vector<double> levels{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    if (auto it = query.find("levels"); it != query.end()) levels = parse_number_list(it->second);
    int resolution = 201;
    if (auto it = query.find("resolution"); it != query.end()) {
        const auto r = parse_number_list(it->second);
        if (r.size() != 1 || r[0] < 2 || r[0] > 100001) throw ApiError(422, "bad resolution");
        resolution = static_cast<int>(r[0]);
    }
    Json contours = Json::array();
    for (double level : levels) {
        if (!(level >= 0.0 && level <= 1.0)) throw ApiError(422, "contour levels must lie in [0,1]");
        Json pts = Json::array();
        for (const auto& pt : utility_contour(level, up, resolution)) pts.push_back({pt.piE, pt.piT});
        contours.push_back({{"level", level}, {"points", pts}});
    }
    return {200, {{"params", up}, {"contours", contours}}};
}

ApiResponse Service::utility_evaluate(const Json& body) {
    const JointUtilityParams up = utility_from(body.value("params", Json()));
    const JointUtility u(up);
    auto check = [](double v) {
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidParams("probabilities must lie in [0,1]");
        return v;
    };
    Json out{{"params", up}, {"warnings", regime_warnings(up)}};
    if (body.contains("points")) {
        Json values = Json::array();
        for (const auto& pt : body.at("points")) {
            const double e = check(pt.at(0).get<double>()), t = check(pt.at(1).get<double>());
            values.push_back(u(e, t));
        }
        out["values"] = values;
        return {200, out};
    }
    const double piE = check(number_field(body, "piE"));
    const double piT = check(number_field(body, "piT"));
    out["utility"] = u(piE, piT);
    out["efficacyUtility"] = u.efficacy(piE);
    out["toxicityUtility"] = u.toxicity(piT);
    return {200, out};
}

// ---- simulation jobs ----

ApiResponse Service::submit_simulation(const Json& body) {
    // validate now so a bad config is rejected synchronously
    StudyConfig cfg = study_config_from_json(body);
    if (body.contains("scenarioIds")) select_scenarios(cfg, body.at("scenarioIds").get<std::vector<int>>());
    if (body.contains("designNames"))
        select_designs(cfg, body.at("designNames").get<std::vector<std::string>>());
    const std::string id = new_id("j");
    auto e = std::make_shared<JobEntry>();
    e->config = body;
    e->file = cfg_.dataDir / "simulations" / (id + ".ndjson");
    e->outDir = cfg_.dataDir / "simulations" / id;
    append_line(e->file, {{"type", "created"}, {"config", body}, {"timestamp", now_iso()}});
    {
        std::lock_guard lock(registry_);
        jobs_[id] = e;
    }
    enqueue(id);
    return {202, {{"id", id}, {"status", "Queued"}}};
}

ApiResponse Service::simulation_view(const std::string& id, JobEntry& e) {
    std::lock_guard lock(e.mutex);
    Json out{{"id", id}, {"status", e.status}};
    if (!e.error.empty()) out["error"] = e.error;
    if (e.status == "Done") {
        out["summary"] = Json::parse(slurp(e.outDir / "summary.json"));
        out["ocCsv"] = slurp(e.outDir / "oc.csv");
        out["curvesCsv"] = slurp(e.outDir / "curves.csv");
    }
    return {200, out};
}

void Service::set_job_status(JobEntry& e, const std::string& status, const std::string& error) {
    std::lock_guard lock(e.mutex);
    e.status = status;
    e.error = error;
    Json line{{"type", "status"}, {"status", status}, {"timestamp", now_iso()}};
    if (!error.empty()) line["error"] = error;
    append_line(e.file, line);
}

void Service::enqueue(const std::string& id) {
    {
        std::lock_guard lock(queueMutex_);
        queue_.push_back(id);
    }
    queueCv_.notify_one();
}

void Service::worker_loop() {
    for (;;) {
        std::string id;
        {
            std::unique_lock lock(queueMutex_);
            queueCv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            id = queue_.front();
            queue_.pop_front();
            ++active_;
        }
        auto e = find_job(id);
        run_job(id, *e);
        {
            std::lock_guard lock(queueMutex_);
            --active_;
        }
        idleCv_.notify_all();
    }
}

void Service::run_job(const std::string& /*id*/, JobEntry& e) {
    set_job_status(e, "Running");
    try {
        StudyConfig cfg = study_config_from_json(e.config);
        if (e.config.contains("scenarioIds"))
            select_scenarios(cfg, e.config.at("scenarioIds").get<std::vector<int>>());
        if (e.config.contains("designNames"))
            select_designs(cfg, e.config.at("designNames").get<std::vector<std::string>>());
        if (!e.config.contains("parallelism")) cfg.parallelism = cfg_.simulationParallelism;
        const StudyResult result = run_study(cfg);
        fs::create_directories(e.outDir);
        {
            std::ofstream oc(e.outDir / "oc.csv");
            write_oc_csv(result, oc);
            std::ofstream curves(e.outDir / "curves.csv");
            write_curves_csv(result, curves);
            std::ofstream summary(e.outDir / "summary.json");
            summary << study_summary_json(result).dump(2) << '\n';
        }
        set_job_status(e, "Done");
    } catch (const std::exception& ex) {
        set_job_status(e, "Failed", ex.what());
    }
}

void Service::wait_for_jobs() {
    std::unique_lock lock(queueMutex_);
    idleCv_.wait(lock, [&] { return queue_.empty() && active_ == 0; });
}

// ---- startup replay ----

void Service::replay() {
    for (const auto& f : fs::directory_iterator(cfg_.dataDir / "sessions")) {
        if (f.path().extension() != ".ndjson") continue;
        const auto lines = read_lines(f.path());
        if (lines.empty() || lines[0].value("type", "") != "created") continue;
        ElicitationScript script;
        from_json(lines[0].at("script"), script);
        std::vector<LogEntry> events;
        for (std::size_t i = 1; i < lines.size(); ++i) events.push_back(lines[i].get<LogEntry>());
        auto e = std::make_shared<SessionEntry>(script);
        e->session = replay_session(script, events);
        e->file = f.path();
        sessions_[f.path().stem().string()] = e;
    }
    for (const auto& f : fs::directory_iterator(cfg_.dataDir / "trials")) {
        if (f.path().extension() != ".ndjson") continue;
        const auto lines = read_lines(f.path());
        if (lines.empty() || lines[0].value("type", "") != "created") continue;
        const Json& c = lines[0];
        auto e = std::make_shared<TrialEntry>();
        e->design = design_from_json(c.at("design"));
        e->grid = transform_doses(c.at("doses").get<std::vector<double>>());
        from_json(c.at("prior"), e->prior);
        from_json(c.at("mcmc"), e->mcmc);
        e->seed = c.at("seed").get<std::uint64_t>();
        e->current = opening_decision(e->design, e->grid.size());
        e->file = f.path();
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const Json& l = lines[i];
            const Decision dec = apply_cohort(*e, l.at("doseIndex").get<std::size_t>(),
                                              l.at("outcomes").get<std::vector<Outcome>>(),
                                              l.value("override", false));
            if (l.contains("decision") && !(l.at("decision").get<Decision>() == dec))
                std::cerr << "r2dt: replayed decision differs from the log in " << f.path()
                          << " cohort " << i << '\n';
        }
        trials_[f.path().stem().string()] = e;
    }
    for (const auto& f : fs::directory_iterator(cfg_.dataDir / "simulations")) {
        if (f.path().extension() != ".ndjson") continue;
        const auto lines = read_lines(f.path());
        if (lines.empty() || lines[0].value("type", "") != "created") continue;
        const std::string id = f.path().stem().string();
        auto e = std::make_shared<JobEntry>();
        e->config = lines[0].at("config");
        e->file = f.path();
        e->outDir = cfg_.dataDir / "simulations" / id;
        for (std::size_t i = 1; i < lines.size(); ++i) {
            e->status = lines[i].value("status", e->status);
            e->error = lines[i].value("error", std::string());
        }
        jobs_[id] = e;
        if (e->status == "Queued")
            queue_.push_back(id);
        else if (e->status == "Running")
            set_job_status(*e, "Failed", "interrupted by a service restart");
    }
}

}  // namespace r2dt
