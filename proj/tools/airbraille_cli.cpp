// airbraille command-line harness. Talks to the core only through the C API.

#include "airbraille/airbraille.h"

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <pthread.h>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using Json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

// Carries a status out of a subcommand to main().
struct Failure {
    ab_status status;
    std::string message;
};

[[noreturn]] void raise(ab_status s, std::string msg) { throw Failure{s, std::move(msg)}; }

void check(ab_status s) {
    if (s != AB_OK) raise(s, ab_last_error());
}

int exit_code(ab_status s) { return ab_is_validation_error(s) ? kExitValidation : kExitRuntime; }

// Owns a malloc'd string from the C API.
struct CString {
    char* p = nullptr;
    ~CString() { ab_free_string(p); }
    char** out() { return &p; }
    std::string str() const { return p ? p : ""; }
};

template <typename T, void (*Destroy)(T*)>
struct Handle {
    T* p = nullptr;
    ~Handle() { Destroy(p); }
    T** out() { return &p; }
};
using Config = Handle<ab_config, ab_config_destroy>;
using ScheduleH = Handle<ab_schedule, ab_schedule_destroy>;
using Simulation = Handle<ab_simulation, ab_simulation_destroy>;
using ServiceH = Handle<ab_service, ab_service_destroy>;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(AB_IO, "cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) raise(AB_IO, "cannot write " + path);
}

// Manifest: {"subcommand", "config": {...}, "seed", "paths": {...}}.
struct Manifest {
    Json config = Json::object();
    Json paths = Json::object();
};

Manifest load_manifest(const std::string& path, const std::string& subcommand) {
    Manifest m;
    if (path.empty()) return m;
    Json doc;
    try {
        doc = Json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        raise(AB_INVALID_CONFIG, "manifest " + path + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) raise(AB_INVALID_CONFIG, "manifest must be a JSON object");
    for (const auto& item : doc.items()) {
        const auto& k = item.key();
        if (k != "subcommand" && k != "config" && k != "seed" && k != "paths") {
            raise(AB_INVALID_CONFIG, "unknown manifest key '" + k + "'");
        }
    }
    if (doc.contains("subcommand") && doc["subcommand"] != subcommand) {
        raise(AB_INVALID_CONFIG, "manifest is for subcommand " + doc["subcommand"].dump());
    }
    if (doc.contains("config")) {
        if (!doc["config"].is_object()) raise(AB_INVALID_CONFIG, "manifest config must be an object");
        m.config = doc["config"];
    }
    if (doc.contains("seed")) m.config["seed"] = doc["seed"];
    if (doc.contains("paths")) {
        if (!doc["paths"].is_object()) raise(AB_INVALID_CONFIG, "manifest paths must be an object");
        m.paths = doc["paths"];
    }
    return m;
}

struct Options {
    std::string manifest;
    std::optional<double> spacing_m;
    std::optional<double> height_m;
    std::optional<std::uint64_t> seed;
    std::optional<double> grid_res_m;
    std::optional<int> iterations;
    std::optional<double> control_rate_hz;
    bool mirror_x = false;
    std::optional<std::string> mode;
};

void add_config_flags(CLI::App* app, Options& o) {
    app->add_option("--manifest", o.manifest, "JSON run manifest; flags override its values");
    app->add_option("--layout-spacing-m", o.spacing_m, "cell spacing in metres");
    app->add_option("--height-m", o.height_m, "presentation height above the array in metres");
    app->add_option("--seed", o.seed, "rng seed");
    app->add_option("--grid-res-m", o.grid_res_m, "field grid resolution in metres");
    app->add_option("--iterations", o.iterations, "phase retrieval iterations");
    app->add_option("--control-rate-hz", o.control_rate_hz, "array update rate");
    app->add_flag("--mirror-x", o.mirror_x, "mirror the cell layout left-right");
    app->add_option("--solver-mode", o.mode, "simultaneous | temporal-multiplex");
}

Json merged_config(const Options& o, const Manifest& m) {
    Json c = m.config;
    if (o.spacing_m) c["layout"]["cell_spacing_m"] = *o.spacing_m;
    if (o.height_m) c["layout"]["plane_height_m"] = *o.height_m;
    if (o.mirror_x) c["layout"]["mirror_x"] = true;
    if (o.seed) c["seed"] = *o.seed;
    if (o.grid_res_m) c["grid"]["resolution_m"] = *o.grid_res_m;
    if (o.iterations) c["solver"]["iterations"] = *o.iterations;
    if (o.mode) c["solver"]["mode"] = *o.mode;
    if (o.control_rate_hz) c["control_rate_hz"] = *o.control_rate_hz;
    return c;
}

void make_config(const Options& o, const Manifest& m, Config& cfg) {
    check(ab_config_create(merged_config(o, m).dump().c_str(), cfg.out()));
}

// Flag value, else manifest path, else fallback.
std::string pick(const std::string& flag, const Manifest& m, const char* key, const std::string& fallback = "") {
    if (!flag.empty()) return flag;
    if (m.paths.contains(key) && m.paths[key].is_string()) return m.paths[key].get<std::string>();
    return fallback;
}

char single_char(const std::string& s) {
    if (s.size() != 1) raise(AB_INVALID_ARGUMENT, "--char takes exactly one character");
    return s[0];
}

// ---------------------------------------------------------------- serve

httplib::Server* g_server = nullptr;

int run_server(ab_service* service, const std::string& host, int port) {
    httplib::Server svr;
    auto route = [service](const httplib::Request& req, httplib::Response& res) {
        int status = 500;
        CString body;
        if (ab_service_handle(service, req.method.c_str(), req.target.c_str(), req.body.c_str(), &status,
                              body.out()) != AB_OK) {
            status = 500;
        }
        res.status = status;
        res.set_content(body.str(), "application/json");
        res.set_header("Access-Control-Allow-Origin", "*");
    };
    svr.Get(".*", route);
    svr.Post(".*", route);
    svr.Options(".*", [](const httplib::Request&, httplib::Response& res) {
        res.status = 204;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });

    int bound = port;
    if (port == 0) {
        bound = svr.bind_to_any_port(host);
    } else if (!svr.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) raise(AB_IO, "cannot bind " + host + ":" + std::to_string(port));

    // SIGINT/SIGTERM are taken by a waiter thread so stop() runs outside a
    // signal handler. Logs are flushed per record, so stopping is enough.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    g_server = &svr;
    std::thread waiter([set] {
        int sig = 0;
        sigwait(&set, &sig);
        if (g_server) g_server->stop();
    });

    std::cout << "listening on http://" << host << ":" << bound << std::endl;
    svr.listen_after_bind();
    g_server = nullptr;
    // Wake the waiter if listen ended for another reason.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    std::cout << "stopped" << std::endl;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"airbraille: mid-air Braille stimulus, simulation and study harness"};
    app.require_subcommand(1);
    Options opt;

    std::string text;
    auto* encode = app.add_subcommand("encode", "print the cell set of each character");
    encode->add_option("text", text, "characters to encode");

    std::string sched_char, method, out_path;
    auto* schedule = app.add_subcommand("schedule", "write the emission schedule of one character");
    schedule->add_option("--char", sched_char, "character to present")->required();
    schedule->add_option("--method", method, "stimulation method")->required();
    schedule->add_option("-o,--out", out_path, "output file (default stdout)");
    add_config_flags(schedule, opt);

    std::string sim_schedule, sim_char, field_out, report_out;
    double time_s = 0.0025;
    auto* simulate = app.add_subcommand("simulate", "drive the array at time t and sample the field");
    simulate->add_option("--schedule", sim_schedule, "schedule document");
    simulate->add_option("--char", sim_char, "character (instead of --schedule)");
    simulate->add_option("--method", method, "stimulation method for --char");
    simulate->add_option("--time-s", time_s, "instant to simulate")->capture_default_str();
    simulate->add_option("--field-out", field_out, "field CSV output");
    simulate->add_option("--report-out", report_out, "metrics report output (default stdout)");
    add_config_flags(simulate, opt);

    std::string frames_schedule, frames_out;
    double t0 = 0.0, t1 = 0.01;
    auto* frames = app.add_subcommand("frames", "expand a schedule into control frames");
    frames->add_option("--schedule", frames_schedule, "schedule document")->required();
    frames->add_option("--t0", t0, "window start")->capture_default_str();
    frames->add_option("--t1", t1, "window end")->capture_default_str();
    frames->add_option("-o,--out", frames_out, "output JSONL (default stdout)");
    add_config_flags(frames, opt);

    std::vector<std::string> logs;
    std::string analyze_report, confusion_out;
    auto* analyze = app.add_subcommand("analyze", "statistics over one or more session logs");
    analyze->add_option("logs", logs, "session log files");
    analyze->add_option("--report-out", analyze_report, "report output (default stdout)");
    analyze->add_option("--confusion-out", confusion_out, "confusion matrix CSV output");
    analyze->add_option("--manifest", opt.manifest, "JSON run manifest");

    std::string host = "127.0.0.1", storage;
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "host the /v1 session service");
    serve->add_option("--bind", host, "bind address")->capture_default_str();
    serve->add_option("--port", port, "port, 0 picks a free one")->capture_default_str();
    serve->add_option("--storage", storage, "session log directory");
    add_config_flags(serve, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    }

    try {
        const std::string sub = app.get_subcommands().front()->get_name();
        const Manifest m = load_manifest(opt.manifest, sub);

        if (encode->parsed()) {
            CString listing;
            check(ab_encode_text(text.c_str(), listing.out()));
            if (!listing.str().empty()) std::cout << listing.str() << '\n';
            return kExitOk;
        }

        if (schedule->parsed()) {
            Config cfg;
            make_config(opt, m, cfg);
            ScheduleH s;
            check(ab_schedule_create(cfg.p, single_char(sched_char), method.c_str(), s.out()));
            CString doc;
            check(ab_schedule_to_json(s.p, doc.out()));
            write_output(pick(out_path, m, "out"), doc.str());
            return kExitOk;
        }

        if (simulate->parsed()) {
            Config cfg;
            make_config(opt, m, cfg);
            ScheduleH s;
            const std::string sched_path = pick(sim_schedule, m, "schedule");
            if (!sched_path.empty()) {
                check(ab_schedule_from_json(read_file(sched_path).c_str(), s.out()));
            } else if (!sim_char.empty() && !method.empty()) {
                check(ab_schedule_create(cfg.p, single_char(sim_char), method.c_str(), s.out()));
            } else {
                raise(AB_INVALID_ARGUMENT, "simulate needs --schedule or --char with --method");
            }
            Simulation sim;
            check(ab_simulate(cfg.p, s.p, time_s, sim.out()));
            const std::string field_path = pick(field_out, m, "field_out");
            if (!field_path.empty()) {
                CString csv;
                check(ab_simulation_field_csv(sim.p, csv.out()));
                write_output(field_path, csv.str());
            }
            CString report;
            const ab_status metrics = ab_simulation_report(sim.p, report.out());
            const std::string error = metrics == AB_OK ? "" : ab_last_error();
            write_output(pick(report_out, m, "report_out"), report.str());
            if (metrics != AB_OK) raise(metrics, error);
            return kExitOk;
        }

        if (frames->parsed()) {
            Config cfg;
            make_config(opt, m, cfg);
            ScheduleH s;
            check(ab_schedule_from_json(read_file(pick(frames_schedule, m, "schedule")).c_str(), s.out()));
            CString jsonl;
            check(ab_frames_expand(cfg.p, s.p, t0, t1, jsonl.out()));
            write_output(pick(frames_out, m, "out"), jsonl.str());
            return kExitOk;
        }

        if (analyze->parsed()) {
            if (logs.empty() && m.paths.contains("logs") && m.paths["logs"].is_array()) {
                for (const auto& p : m.paths["logs"]) logs.push_back(p.get<std::string>());
            }
            std::vector<const char*> paths;
            for (const auto& l : logs) paths.push_back(l.c_str());
            CString report, csv;
            check(ab_analyze_logs(paths.data(), paths.size(), report.out(), csv.out()));
            write_output(pick(analyze_report, m, "report_out"), report.str());
            const std::string cpath = pick(confusion_out, m, "confusion_out");
            if (!cpath.empty()) write_output(cpath, csv.str());
            return kExitOk;
        }

        if (serve->parsed()) {
            Config cfg;
            make_config(opt, m, cfg);
            ServiceH service;
            const std::string dir = pick(storage, m, "storage", "sessions");
            check(ab_service_create(cfg.p, dir.c_str(), service.out()));
            return run_server(service.p, host, port);
        }
    } catch (const Failure& f) {
        std::cerr << "airbraille: " << ab_status_name(f.status) << ": " << f.message << '\n';
        return exit_code(f.status);
    } catch (const std::exception& e) {
        std::cerr << "airbraille: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
