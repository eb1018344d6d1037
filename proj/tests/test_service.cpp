#include <doctest.h>

#include "braille.hpp"
#include "service.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

using namespace airbraille;
namespace fs = std::filesystem;

namespace {

struct FakeClock {
    std::shared_ptr<std::atomic<double>> now = std::make_shared<std::atomic<double>>(100.0);
    Service::Clock fn() const {
        auto n = now;
        return [n] { return n->load(); };
    }
    void advance(double s) const { now->store(now->load() + s); }
};

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("ab_svc_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

Json body_of(const HttpReply& r) { return Json::parse(r.body); }

std::string error_code(const HttpReply& r) { return body_of(r)["error"]["code"].get<std::string>(); }

// What the device would render: the digit behind a trial's schedule.
char digit_for(Service& svc, const std::string& sid, int tid) {
    const HttpReply r =
        svc.handle("GET", "/v1/sessions/" + sid + "/trials/" + std::to_string(tid) + "/schedule?role=device", "");
    REQUIRE(r.status == 200);
    const auto d = decode_pattern(DotPattern::parse(body_of(r)["pattern"].get<std::string>()), Alphabet::DigitsOnly);
    REQUIRE(d.has_value());
    return *d;
}

Json questionnaire() {
    return Json{{"mental_demand", {{"constant", 4}, {"point-by-point", 3}, {"row-by-row", 5}}},
                {"comfort", {{"constant", 5}, {"point-by-point", 6}, {"row-by-row", 4}}},
                {"sus", {5, 1, 4, 2, 5, 1, 4, 2, 4, 2}}};
}

std::string create(Service& svc, const Json& cfg = Json::object()) {
    const HttpReply r = svc.handle("POST", "/v1/sessions", cfg.dump());
    REQUIRE(r.status == 201);
    return body_of(r)["session_id"].get<std::string>();
}

// Answers every trial through the router, correctly unless `wrong`.
void answer_all(Service& svc, const std::string& sid, auto wrong) {
    for (;;) {
        const Json next = body_of(svc.handle("GET", "/v1/sessions/" + sid + "/next", ""));
        if (next.value("done", false)) break;
        const int tid = next["trial_id"].get<int>();
        char d = digit_for(svc, sid, tid);
        if (wrong(tid)) d = d == '1' ? '2' : '1';
        const Json body{{"answer", std::string(1, d)}, {"elapsed_s", 1.5}};
        const HttpReply r =
            svc.handle("POST", "/v1/sessions/" + sid + "/trials/" + std::to_string(tid) + "/response", body.dump());
        REQUIRE(r.status == 200);
    }
}

}  // namespace

TEST_CASE("status mapping") {
    CHECK(http_status_for(ErrorCode::UnknownSession) == 404);
    CHECK(http_status_for(ErrorCode::UnknownTrial) == 404);
    CHECK(http_status_for(ErrorCode::DuplicateResponse) == 409);
    CHECK(http_status_for(ErrorCode::TrialNotPending) == 409);
    CHECK(http_status_for(ErrorCode::SessionIncomplete) == 409);
    CHECK(http_status_for(ErrorCode::TruthWithheld) == 403);
    CHECK(http_status_for(ErrorCode::InvalidConfig) == 400);
    CHECK(http_status_for(ErrorCode::Io) == 500);
}

TEST_CASE("create returns the first trial and method order") {
    Service svc;
    const HttpReply r = svc.handle("POST", "/v1/sessions", R"({"participant": {"id": "P01", "index": 1}})");
    REQUIRE(r.status == 201);
    const Json j = body_of(r);
    CHECK(j["session_id"] == "s000001");
    CHECK(j["trials"] == 42);
    CHECK(j["method_order"].size() == 3);
    CHECK(j["first_trial"]["trial_id"] == 0);
    CHECK(j["first_trial"]["phase"] == "training");
    CHECK(j["first_trial"]["method"] == j["method_order"][0]);
    CHECK(create(svc) == "s000002");
    CHECK(svc.session_count() == 2);

    CHECK(svc.handle("POST", "/v1/sessions", R"({"trials_per_method": 0})").status == 400);
    CHECK(svc.handle("POST", "/v1/sessions", "{nope").status == 400);
    CHECK(error_code(svc.handle("POST", "/v1/sessions", R"({"bogus": 1})")) == "InvalidConfig");
    CHECK(svc.session_count() == 2);
}

TEST_CASE("routing errors") {
    Service svc;
    const std::string sid = create(svc);
    CHECK(svc.handle("GET", "/v1/sessions", "").status == 405);
    CHECK(svc.handle("POST", "/v1/sessions/" + sid + "/next", "").status == 405);
    CHECK(svc.handle("GET", "/v2/sessions", "").status == 404);
    CHECK(svc.handle("GET", "/v1/sessions/" + sid + "/elsewhere", "").status == 404);
    const HttpReply unknown = svc.handle("GET", "/v1/sessions/s999999/next", "");
    CHECK(unknown.status == 404);
    CHECK(error_code(unknown) == "UnknownSession");
    CHECK(error_code(svc.handle("POST", "/v1/sessions/" + sid + "/trials/99/response",
                                R"({"answer":"1","elapsed_s":1})")) == "UnknownTrial");
    CHECK(svc.handle("POST", "/v1/sessions/" + sid + "/trials/x/response", R"({"answer":"1","elapsed_s":1})")
              .status == 404);
}

TEST_CASE("response validation and protocol conflicts") {
    Service svc;
    const std::string sid = create(svc);
    const std::string url0 = "/v1/sessions/" + sid + "/trials/0/response";
    CHECK(svc.handle("POST", url0, R"({"elapsed_s": 1})").status == 400);
    CHECK(svc.handle("POST", url0, R"({"answer": "1"})").status == 400);
    CHECK(svc.handle("POST", url0, R"({"answer": 12, "elapsed_s": 1})").status == 400);
    CHECK(svc.handle("POST", url0, R"({"answer": "a", "elapsed_s": 1})").status == 400);
    CHECK(svc.handle("POST", url0, R"({"answer": "1", "elapsed_s": -2})").status == 400);

    const HttpReply early = svc.handle("POST", "/v1/sessions/" + sid + "/trials/1/response",
                                       R"({"answer": "1", "elapsed_s": 1})");
    CHECK(early.status == 409);
    CHECK(error_code(early) == "TrialNotPending");

    const HttpReply first = svc.handle("POST", url0, R"({"answer": 3, "elapsed_s": 1})");
    REQUIRE(first.status == 200);
    CHECK(body_of(first).contains("truth"));  // training feedback
    const HttpReply again = svc.handle("POST", url0, R"({"answer": 3, "elapsed_s": 1})");
    CHECK(again.status == 409);
    CHECK(error_code(again) == "DuplicateResponse");
}

TEST_CASE("actual trials never leak the truth before the answer") {
    Service svc;
    const std::string sid = create(svc);
    std::set<std::string> leaks;
    for (;;) {
        const Json next = body_of(svc.handle("GET", "/v1/sessions/" + sid + "/next", ""));
        if (next.value("done", false)) break;
        const int tid = next["trial_id"].get<int>();
        const std::string base = "/v1/sessions/" + sid + "/trials/" + std::to_string(tid);
        const bool actual = next["phase"] == "actual";
        if (actual) {
            if (next.contains("truth") || next.contains("truth_char")) leaks.insert("descriptor");
            const HttpReply withheld = svc.handle("GET", base + "/schedule", "");
            CHECK(withheld.status == 403);
            CHECK(error_code(withheld) == "TruthWithheld");
            CHECK(svc.handle("GET", base + "/schedule?role=participant", "").status == 403);
        } else {
            CHECK(svc.handle("GET", base + "/schedule", "").status == 200);
        }
        const char d = digit_for(svc, sid, tid);
        const Json reply = body_of(svc.handle("POST", base + "/response",
                                              Json{{"answer", std::string(1, d)}, {"elapsed_s", 2.0}}.dump()));
        if (actual) {
            if (reply.dump().find("truth") != std::string::npos) leaks.insert("reply");
            if (reply.contains("correct")) leaks.insert("correct");
            CHECK(svc.handle("GET", base + "/schedule", "").status == 200);  // answered: no longer secret
        }
    }
    CHECK(leaks.empty());
}

TEST_CASE("finalize and results") {
    Service svc;
    const std::string sid = create(svc, Json{{"participant", {{"id", "P05"}, {"index", 4}}}});
    CHECK(error_code(svc.handle("POST", "/v1/sessions/" + sid + "/finalize", questionnaire().dump())) ==
          "SessionIncomplete");
    CHECK(error_code(svc.handle("GET", "/v1/sessions/" + sid + "/results", "")) == "SessionIncomplete");
    answer_all(svc, sid, [](int tid) { return tid % 7 == 0; });

    const Json done = body_of(svc.handle("GET", "/v1/sessions/" + sid + "/next", ""));
    CHECK(done["done"] == true);
    CHECK(done["finalized"] == false);

    Json bad = questionnaire();
    bad["sus"][0] = 6;
    CHECK(error_code(svc.handle("POST", "/v1/sessions/" + sid + "/finalize", bad.dump())) == "OutOfRangeItem");
    const HttpReply fin = svc.handle("POST", "/v1/sessions/" + sid + "/finalize", questionnaire().dump());
    REQUIRE(fin.status == 200);
    const Json report = body_of(fin)["report"];
    CHECK(report["actual_trials"] == 30);
    CHECK(report["sus"]["mean"] == 85.0);
    CHECK(body_of(fin)["participant"] == "P05");
    CHECK(svc.handle("POST", "/v1/sessions/" + sid + "/finalize", questionnaire().dump()).status == 409);

    const HttpReply res = svc.handle("GET", "/v1/sessions/" + sid + "/results", "");
    CHECK(res.status == 200);
    CHECK(res.body == fin.body);
}

TEST_CASE("sessions persist and reload with identical results") {
    TempDir dir("persist");
    std::string sid, results;
    {
        Service svc(dir.path.string());
        sid = create(svc, Json{{"seed", 5}});
        create(svc);
        answer_all(svc, sid, [](int tid) { return tid % 3 == 0; });
        REQUIRE(svc.handle("POST", "/v1/sessions/" + sid + "/finalize", questionnaire().dump()).status == 200);
        results = svc.handle("GET", "/v1/sessions/" + sid + "/results", "").body;

        std::ifstream in(svc.log_path(sid));
        std::string line;
        int lines = 0;
        while (std::getline(in, line)) {
            CHECK(Json::parse(line).is_object());
            ++lines;
        }
        CHECK(lines == 44);
    }
    Service reloaded(dir.path.string());
    CHECK(reloaded.session_count() == 2);
    CHECK(reloaded.handle("GET", "/v1/sessions/" + sid + "/results", "").body == results);
    CHECK(create(reloaded) == "s000003");
    // the half-done one resumes where it stopped
    const Json next = body_of(reloaded.handle("GET", "/v1/sessions/s000002/next", ""));
    CHECK(next["trial_id"] == 0);
}

TEST_CASE("server timer starts at first serve and flags disagreement") {
    FakeClock clock;
    TempDir dir("timing");
    Service svc(dir.path.string(), RunConfig{}, clock.fn());
    const std::string sid = create(svc);
    clock.advance(2.0);
    const char d0 = digit_for(svc, sid, 0);
    svc.handle("POST", "/v1/sessions/" + sid + "/trials/0/response",
               Json{{"answer", std::string(1, d0)}, {"elapsed_s", 1.9}}.dump());

    svc.handle("GET", "/v1/sessions/" + sid + "/next", "");
    clock.advance(3.0);
    svc.handle("GET", "/v1/sessions/" + sid + "/next", "");  // re-fetch keeps the timer
    const char d1 = digit_for(svc, sid, 1);
    svc.handle("POST", "/v1/sessions/" + sid + "/trials/1/response",
               Json{{"answer", std::string(1, d1)}, {"elapsed_s", 0.1}}.dump());

    std::ifstream in(svc.log_path(sid));
    std::string line;
    std::vector<Json> rows;
    while (std::getline(in, line)) rows.push_back(Json::parse(line));
    REQUIRE(rows.size() == 3);
    CHECK(rows[1]["server_elapsed_s"].get<double>() == doctest::Approx(2.0));
    CHECK(rows[1]["timing_flag"] == false);
    CHECK(rows[2]["server_elapsed_s"].get<double>() == doctest::Approx(3.0));
    CHECK(rows[2]["timing_flag"] == true);
}

TEST_CASE("concurrent sessions stay independent") {
    TempDir dir("concurrent");
    Service svc(dir.path.string());
    constexpr int kThreads = 6;
    std::vector<std::string> ids(kThreads);
    std::vector<std::thread> pool;
    std::atomic<int> failures{0};
    for (int i = 0; i < kThreads; ++i) {
        pool.emplace_back([&, i] {
            try {
                const HttpReply r = svc.handle("POST", "/v1/sessions",
                                               Json{{"seed", i}, {"participant", {{"index", i}}}}.dump());
                const std::string sid = Json::parse(r.body)["session_id"].get<std::string>();
                ids[static_cast<std::size_t>(i)] = sid;
                for (;;) {
                    const Json next = Json::parse(svc.handle("GET", "/v1/sessions/" + sid + "/next", "").body);
                    if (next.value("done", false)) break;
                    const int tid = next["trial_id"].get<int>();
                    const Json sched = Json::parse(
                        svc.handle("GET", "/v1/sessions/" + sid + "/trials/" + std::to_string(tid) +
                                              "/schedule?role=device", "")
                            .body);
                    const char d = *decode_pattern(DotPattern::parse(sched["pattern"].get<std::string>()),
                                                   Alphabet::DigitsOnly);
                    const HttpReply a = svc.handle("POST",
                                                   "/v1/sessions/" + sid + "/trials/" + std::to_string(tid) +
                                                       "/response",
                                                   Json{{"answer", std::string(1, d)}, {"elapsed_s", 1}}.dump());
                    if (a.status != 200) ++failures;
                }
                if (svc.handle("POST", "/v1/sessions/" + sid + "/finalize", questionnaire().dump()).status != 200) {
                    ++failures;
                }
            } catch (...) {
                ++failures;
            }
        });
    }
    for (auto& t : pool) t.join();
    CHECK(failures == 0);
    CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == kThreads);
    for (const auto& sid : ids) {
        const Json res = body_of(svc.handle("GET", "/v1/sessions/" + sid + "/results", ""));
        CHECK(res["report"]["actual_trials"] == 30);
    }
    // every log replays on its own
    Service reloaded(dir.path.string());
    CHECK(reloaded.session_count() == kThreads);
}
