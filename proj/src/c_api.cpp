#include "airbraille/airbraille.h"

#include "braille.hpp"
#include "error.hpp"
#include "report.hpp"
#include "serialize.hpp"
#include "service.hpp"
#include "simulate.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

using namespace airbraille;

struct ab_config {
    RunConfig cfg;
};

struct ab_schedule {
    Schedule schedule;
};

struct ab_simulation {
    SimulationResult result;
};

struct ab_service {
    explicit ab_service(std::string dir, RunConfig cfg) : service(std::move(dir), std::move(cfg)) {}
    Service service;
};

namespace {

thread_local std::string g_last_error;

ab_status set_error(ab_status s, const std::string& msg) {
    g_last_error = msg;
    return s;
}

char* copy_out(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

// Runs f, translating exceptions into status codes.
template <typename F>
ab_status guard(F&& f) {
    try {
        g_last_error.clear();
        return f();
    } catch (const Error& e) {
        return set_error(static_cast<ab_status>(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
        return set_error(AB_INVALID_ARGUMENT, e.what());
    } catch (const std::bad_alloc&) {
        return set_error(AB_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(AB_INTERNAL, e.what());
    }
}

Json parse_json_arg(const char* text) {
    if (!text || !*text) return Json();
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("malformed JSON: ") + e.what());
    }
}

std::string read_file(const char* path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, std::string("cannot read ") + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ab_status finish_analysis(const StudyData& data, char** report_json, char** confusion) {
    const Json report = analysis_report(data);
    std::string csv;
    if (confusion) csv = confusion_csv(confusion_matrix(data.trials, TrialPhase::Actual));
    if (report_json) *report_json = copy_out(dump(report));
    if (confusion) *confusion = copy_out(csv);
    return AB_OK;
}

#define AB_REQUIRE(cond, what) \
    if (!(cond)) return set_error(AB_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

AB_API const char* ab_version(void) { return "0.1.0"; }

AB_API const char* ab_status_name(ab_status status) {
    if (status == AB_OK) return "Ok";
    if (status < AB_INVALID_ARGUMENT || status > AB_INTERNAL) return "Unknown";
    // names are backed by static storage
    return error_code_name(static_cast<ErrorCode>(status)).data();
}

AB_API int ab_is_validation_error(ab_status status) {
    if (status < AB_INVALID_ARGUMENT || status > AB_INTERNAL) return 0;
    return is_validation_error(static_cast<ErrorCode>(status)) ? 1 : 0;
}

AB_API const char* ab_last_error(void) { return g_last_error.c_str(); }

AB_API void ab_free_string(char* s) { std::free(s); }

AB_API ab_status ab_config_create(const char* overrides_json, ab_config** out) {
    AB_REQUIRE(out, "out must not be NULL");
    return guard([&] {
        auto c = std::make_unique<ab_config>();
        c->cfg = run_config_from_json(parse_json_arg(overrides_json));
        *out = c.release();
        return AB_OK;
    });
}

AB_API ab_status ab_config_to_json(const ab_config* cfg, char** out) {
    AB_REQUIRE(cfg && out, "cfg and out must not be NULL");
    return guard([&] {
        *out = copy_out(dump(run_config_to_json(cfg->cfg)));
        return AB_OK;
    });
}

AB_API void ab_config_destroy(ab_config* cfg) { delete cfg; }

AB_API ab_status ab_encode_text(const char* text, char** out) {
    AB_REQUIRE(text && out, "text and out must not be NULL");
    return guard([&] {
        std::string listing;
        for (const char* p = text; *p; ++p) {
            const DotPattern d = encode_char(*p);
            if (!listing.empty()) listing += ' ';
            listing += *p;
            listing += ':';
            listing += d.to_set_string();
        }
        *out = copy_out(listing);
        return AB_OK;
    });
}

AB_API ab_status ab_schedule_create(const ab_config* cfg, char character, const char* method,
                                    ab_schedule** out) {
    AB_REQUIRE(cfg && method && out, "cfg, method and out must not be NULL");
    return guard([&] {
        const Method m = parse_method(method);
        const DotPattern pattern = encode_char(character);
        auto s = std::make_unique<ab_schedule>();
        s->schedule = make_schedule(pattern, m, cfg->cfg.layout, cfg->cfg.frequencies, cfg->cfg.schedule);
        *out = s.release();
        return AB_OK;
    });
}

AB_API ab_status ab_schedule_from_json(const char* json, ab_schedule** out) {
    AB_REQUIRE(json && out, "json and out must not be NULL");
    return guard([&] {
        auto s = std::make_unique<ab_schedule>();
        s->schedule = schedule_from_json(parse_json_arg(json));
        *out = s.release();
        return AB_OK;
    });
}

AB_API ab_status ab_schedule_to_json(const ab_schedule* schedule, char** out) {
    AB_REQUIRE(schedule && out, "schedule and out must not be NULL");
    return guard([&] {
        *out = copy_out(dump(schedule_to_json(schedule->schedule)));
        return AB_OK;
    });
}

AB_API ab_status ab_schedule_sample(const ab_schedule* schedule, double t, char** out) {
    AB_REQUIRE(schedule && out, "schedule and out must not be NULL");
    return guard([&] {
        *out = copy_out(dump(active_points_to_json(sample_schedule(schedule->schedule, t))));
        return AB_OK;
    });
}

AB_API ab_status ab_schedule_total(const ab_schedule* schedule, double* total_s, int* is_open) {
    AB_REQUIRE(schedule && total_s && is_open, "arguments must not be NULL");
    const auto& total = schedule->schedule.total_duration;
    *is_open = total ? 0 : 1;
    *total_s = total ? *total : 0.0;
    return AB_OK;
}

AB_API void ab_schedule_destroy(ab_schedule* schedule) { delete schedule; }

AB_API ab_status ab_frames_expand(const ab_config* cfg, const ab_schedule* schedule, double t0,
                                  double t1, char** out_jsonl) {
    AB_REQUIRE(cfg && schedule && out_jsonl, "arguments must not be NULL");
    return guard([&] {
        FrameOptions fo;
        fo.control_rate_hz = cfg->cfg.control_rate_hz;
        fo.solver = cfg->cfg.solver;
        *out_jsonl = copy_out(frames_to_jsonl(expand_frames(schedule->schedule, cfg->cfg.array, t0, t1, fo)));
        return AB_OK;
    });
}

AB_API ab_status ab_simulate(const ab_config* cfg, const ab_schedule* schedule, double t,
                             ab_simulation** out) {
    AB_REQUIRE(cfg && schedule && out, "arguments must not be NULL");
    return guard([&] {
        auto s = std::make_unique<ab_simulation>();
        s->result = simulate(cfg->cfg, schedule->schedule, t);
        *out = s.release();
        return AB_OK;
    });
}

AB_API ab_status ab_simulation_field_csv(const ab_simulation* sim, char** out) {
    AB_REQUIRE(sim && out, "sim and out must not be NULL");
    return guard([&] {
        *out = copy_out(field_to_csv(sim->result.field));
        return AB_OK;
    });
}

AB_API ab_status ab_simulation_report(const ab_simulation* sim, char** out) {
    AB_REQUIRE(sim && out, "sim and out must not be NULL");
    return guard([&] {
        *out = copy_out(dump(simulation_report(sim->result)));
        if (sim->result.error) {
            return set_error(static_cast<ab_status>(*sim->result.error), sim->result.error_message);
        }
        return AB_OK;
    });
}

AB_API void ab_simulation_destroy(ab_simulation* sim) { delete sim; }

AB_API ab_status ab_analyze_logs(const char* const* paths, size_t count, char** report_json,
                                 char** confusion) {
    AB_REQUIRE(paths || count == 0, "paths must not be NULL");
    return guard([&] {
        StudyData data;
        for (size_t i = 0; i < count; ++i) {
            AB_REQUIRE(paths[i], "log path must not be NULL");
            append_study(data, parse_session_log(read_file(paths[i])));
        }
        return finish_analysis(data, report_json, confusion);
    });
}

AB_API ab_status ab_analyze_text(const char* log_text, char** report_json, char** confusion) {
    AB_REQUIRE(log_text, "log_text must not be NULL");
    return guard([&] { return finish_analysis(parse_session_log(log_text), report_json, confusion); });
}

AB_API ab_status ab_service_create(const ab_config* cfg, const char* storage_dir, ab_service** out) {
    AB_REQUIRE(out, "out must not be NULL");
    return guard([&] {
        RunConfig run = cfg ? cfg->cfg : RunConfig{};
        *out = new ab_service(storage_dir ? storage_dir : "", std::move(run));
        return AB_OK;
    });
}

AB_API ab_status ab_service_handle(ab_service* service, const char* method, const char* target,
                                   const char* body, int* http_status, char** response_body) {
    AB_REQUIRE(service && method && target && http_status && response_body, "arguments must not be NULL");
    return guard([&] {
        HttpReply r = service->service.handle(method, target, body ? body : "");
        *response_body = copy_out(r.body);
        *http_status = r.status;
        return AB_OK;
    });
}

AB_API void ab_service_destroy(ab_service* service) { delete service; }

}  // extern "C"
