#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "r2dt/elicitation.hpp"
#include "r2dt/simulation.hpp"
#include "r2dt/trial.hpp"

namespace r2dt {

using Json = nlohmann::json;

/// HTTP-level failure with its status code.
class ApiError : public std::runtime_error {
   public:
    ApiError(int status, const std::string& message)
        : std::runtime_error(message), status_(status) {}
    int status() const { return status_; }

   private:
    int status_;
};

struct ApiResponse {
    int status = 200;
    Json body;
};

struct ServiceConfig {
    std::filesystem::path dataDir = "r2dt-data";
    /// Simulation worker threads.
    int workers = 1;
    /// Required as "Bearer <token>" when non-empty.
    std::string token;
    /// Replicate-level parallelism inside one simulation job; 0 = hardware.
    int simulationParallelism = 0;
};

/// Reads R2DT_DATA_DIR, R2DT_WORKERS and R2DT_TOKEN over the defaults.
ServiceConfig service_config_from_env();

/// Transport-independent request router. Every mutation is appended to a
/// newline-delimited JSON log under dataDir before it is acknowledged, and
/// the constructor replays those logs.
class Service {
   public:
    explicit Service(ServiceConfig cfg);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// `path` excludes the query string; `query` holds decoded parameters.
    ApiResponse handle(const std::string& method, const std::string& path,
                       const std::map<std::string, std::string>& query, const std::string& body,
                       const std::string& authorization = {});

    /// Blocks until no simulation job is queued or running.
    void wait_for_jobs();

   private:
    struct SessionEntry {
        std::mutex mutex;
        ElicitationSession session;
        std::filesystem::path file;
        explicit SessionEntry(ElicitationScript s) : session(std::move(s)) {}
    };
    struct TrialEntry {
        std::mutex mutex;
        DesignConfig design;
        DoseGrid grid;
        PriorSpec prior;
        McmcConfig mcmc;
        std::uint64_t seed = 0;
        TrialState state;
        Decision current;
        std::vector<CohortRecord> history;
        std::filesystem::path file;
    };
    struct JobEntry {
        std::mutex mutex;
        std::string status = "Queued";
        std::string error;
        Json config;
        std::filesystem::path file;
        std::filesystem::path outDir;
    };

    ApiResponse route(const std::string& method, const std::vector<std::string>& parts,
                      const std::map<std::string, std::string>& query, const Json& body);

    ApiResponse create_session(const Json& body);
    ApiResponse session_next(SessionEntry& e);
    ApiResponse session_answer(SessionEntry& e, const Json& body);
    ApiResponse session_reopen(SessionEntry& e, const Json& body);
    ApiResponse session_params(SessionEntry& e);

    ApiResponse create_trial(const Json& body);
    ApiResponse trial_view(TrialEntry& e);
    ApiResponse trial_cohort(TrialEntry& e, const Json& body);
    ApiResponse trial_recommendation(TrialEntry& e);
    Decision apply_cohort(TrialEntry& e, std::size_t dose, const std::vector<Outcome>& outcomes,
                          bool overridden);

    ApiResponse utility_contours(const std::map<std::string, std::string>& query);
    ApiResponse utility_evaluate(const Json& body);

    ApiResponse submit_simulation(const Json& body);
    ApiResponse simulation_view(const std::string& id, JobEntry& e);
    void enqueue(const std::string& id);
    void worker_loop();
    void run_job(const std::string& id, JobEntry& e);
    void set_job_status(JobEntry& e, const std::string& status, const std::string& error = {});

    std::shared_ptr<SessionEntry> find_session(const std::string& id);
    std::shared_ptr<TrialEntry> find_trial(const std::string& id);
    std::shared_ptr<JobEntry> find_job(const std::string& id);

    void replay();
    std::string new_id(const char* prefix);

    ServiceConfig cfg_;
    std::mutex registry_;
    std::map<std::string, std::shared_ptr<SessionEntry>> sessions_;
    std::map<std::string, std::shared_ptr<TrialEntry>> trials_;
    std::map<std::string, std::shared_ptr<JobEntry>> jobs_;
    std::uint64_t idCounter_ = 0;
    std::uint64_t idSalt_ = 0;

    std::mutex queueMutex_;
    std::condition_variable queueCv_;
    std::condition_variable idleCv_;
    std::deque<std::string> queue_;
    int active_ = 0;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

/// Blocking HTTP listener for `service` (cpp-httplib). Returns when the
/// server stops.
int serve_http(Service& service, const std::string& host, int port);

}  // namespace r2dt
