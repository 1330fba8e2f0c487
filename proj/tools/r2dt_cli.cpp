// r2dt: simulation, utility queries and the HTTP service.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "r2dt/config.hpp"
#include "r2dt/errors.hpp"
#include "r2dt/service.hpp"

namespace fs = std::filesystem;
using namespace r2dt;

namespace {

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InvalidConfig(path + ": " + e.what());
    }
}

JointUtilityParams utility_arg(const std::string& paramsFile, const std::string& preset) {
    if (!paramsFile.empty()) {
        JointUtilityParams p = default_r2dt_params();
        from_json(read_json_file(paramsFile), p);
        return p;
    }
    const Json named = default_config_json().at("utility");
    if (!named.contains(preset)) throw InvalidConfig("unknown utility preset '" + preset + "'");
    return named.at(preset).get<JointUtilityParams>();
}

std::vector<std::string> split_names(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ','))
        if (!part.empty()) out.push_back(part);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reference-dependent Phase I-II dose-finding engine"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run the simulation study and write oc.csv, curves.csv, summary.json");
    std::string configPath, scenarioList, designList, outDir = "results";
    int reps = -1, threads = -1;
    std::uint64_t seed = 0;
    bool quiet = false;
    sim->add_option("--config", configPath, "Config document (JSON); defaults to the built-in study");
    sim->add_option("--scenarios", scenarioList, "Scenario ids, e.g. 1..10 or 1,3,9");
    sim->add_option("--designs", designList, "Design names, e.g. R2DT1,EFFTOXU2");
    sim->add_option("--reps", reps, "Replicates per scenario")->check(CLI::NonNegativeNumber);
    auto* seedOpt = sim->add_option("--seed", seed, "Study seed");
    sim->add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    sim->add_option("--out", outDir, "Output directory");
    sim->add_flag("--quiet", quiet, "No progress output");

    // default-config
    auto* defcfg = app.add_subcommand("default-config", "Print the built-in study configuration");
    std::string defOut;
    defcfg->add_option("--out", defOut, "Write to this file instead of stdout");

    // utility
    auto* util = app.add_subcommand("utility", "Evaluate the joint utility or trace a contour");
    util->require_subcommand(1);
    std::string paramsFile, preset = "r2dt";
    auto* ueval = util->add_subcommand("evaluate", "Utility at (piE, piT)");
    double piE = 0, piT = 0;
    ueval->add_option("--piE", piE)->required()->check(CLI::Range(0.0, 1.0));
    ueval->add_option("--piT", piT)->required()->check(CLI::Range(0.0, 1.0));
    auto* ucont = util->add_subcommand("contour", "Points (piE, piT) on a utility level set");
    double level = 0.5;
    int resolution = 201;
    ucont->add_option("--level", level)->required()->check(CLI::Range(0.0, 1.0));
    ucont->add_option("--resolution", resolution)->check(CLI::Range(2, 100001));
    for (auto* c : {ueval, ucont}) {
        c->add_option("--params", paramsFile, "Utility parameters (JSON)");
        c->add_option("--preset", preset, "r2dt, efftoxu or efftoxu_b");
    }

    // serve
    auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON service");
    ServiceConfig scfg = service_config_from_env();
    std::string bind = std::getenv("R2DT_BIND") ? std::getenv("R2DT_BIND") : "127.0.0.1:8080";
    std::string dataDir = scfg.dataDir.string();
    serve->add_option("--data-dir", dataDir, "Persistence directory (R2DT_DATA_DIR)");
    serve->add_option("--bind", bind, "host:port (R2DT_BIND)");
    serve->add_option("--workers", scfg.workers, "Simulation job workers (R2DT_WORKERS)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            StudyConfig cfg = study_config_from_json(configPath.empty() ? default_config_json()
                                                                        : read_json_file(configPath));
            if (!scenarioList.empty()) select_scenarios(cfg, parse_id_list(scenarioList));
            if (!designList.empty()) select_designs(cfg, split_names(designList));
            if (reps >= 0) cfg.reps = reps;
            if (*seedOpt) cfg.seed = seed;
            if (threads >= 0) cfg.parallelism = threads;
            validate(cfg);
            ProgressCallback progress;
            if (!quiet)
                progress = [](int done, int total) {
                    if (done == total || done % 50 == 0)
                        std::cerr << "\rreplicates " << done << '/' << total << std::flush;
                };
            const StudyResult result = run_study(cfg, progress);
            if (!quiet) std::cerr << '\n';
            fs::create_directories(outDir);
            std::ofstream oc(fs::path(outDir) / "oc.csv");
            write_oc_csv(result, oc);
            std::ofstream curves(fs::path(outDir) / "curves.csv");
            write_curves_csv(result, curves);
            std::ofstream summary(fs::path(outDir) / "summary.json");
            summary << study_summary_json(result).dump(2) << '\n';
            std::cout << "wrote " << outDir << "/oc.csv, curves.csv, summary.json\n";
        } else if (*defcfg) {
            const std::string text = default_config_json().dump(2) + "\n";
            if (defOut.empty()) {
                std::cout << text;
            } else {
                std::ofstream(defOut) << text;
            }
        } else if (*util) {
            const JointUtilityParams up = utility_arg(paramsFile, preset);
            validate(up);
            for (const auto& w : regime_warnings(up)) std::cerr << "note: " << w << '\n';
            if (*ueval) {
                const JointUtility u(up);
                std::cout << Json{{"utility", u(piE, piT)},
                                  {"efficacyUtility", u.efficacy(piE)},
                                  {"toxicityUtility", u.toxicity(piT)}}
                                 .dump(2)
                          << '\n';
            } else {
                std::cout << "piE,piT\n";
                for (const auto& p : utility_contour(level, up, resolution))
                    std::cout << p.piE << ',' << p.piT << '\n';
            }
        } else if (*serve) {
            scfg.dataDir = dataDir;
            const auto colon = bind.rfind(':');
            if (colon == std::string::npos) throw InvalidConfig("--bind expects host:port");
            const std::string host = bind.substr(0, colon);
            const int port = std::stoi(bind.substr(colon + 1));
            Service service(scfg);
            return serve_http(service, host, port);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
