#include <doctest.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

const char* kCells[] = {"245", "1", "12", "14", "145", "15", "124", "1245", "125", "24"};

char digit_of(const std::string& pattern) {
    for (int d = 0; d < 10; ++d) {
        if (pattern == kCells[d]) return static_cast<char>('0' + d);
    }
    FAIL("not a digit pattern: " << pattern);
    return '?';
}

// Child server process; reads the chosen port from its first stdout line.
struct Server {
    pid_t pid = -1;
    FILE* out = nullptr;
    int port = 0;

    explicit Server(const fs::path& storage) {
        int fds[2];
        REQUIRE(::pipe(fds) == 0);
        pid = ::fork();
        REQUIRE(pid >= 0);
        if (pid == 0) {
            ::dup2(fds[1], STDOUT_FILENO);
            ::close(fds[0]);
            ::close(fds[1]);
            const std::string dir = storage.string();
            ::execl(AB_CLI, AB_CLI, "serve", "--port", "0", "--storage", dir.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        ::close(fds[1]);
        out = ::fdopen(fds[0], "r");
        char line[256] = {};
        REQUIRE(std::fgets(line, sizeof line, out) != nullptr);
        const std::string s(line);
        const auto colon = s.rfind(':');
        REQUIRE(s.rfind("listening on http://", 0) == 0);
        port = std::stoi(s.substr(colon + 1));
    }

    // Sends SIGINT and returns the exit status plus the remaining stdout.
    std::pair<int, std::string> stop() {
        ::kill(pid, SIGINT);
        std::string rest;
        char buf[256];
        while (std::fgets(buf, sizeof buf, out)) rest += buf;
        int status = 0;
        ::waitpid(pid, &status, 0);
        std::fclose(out);
        pid = -1;
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, rest};
    }

    ~Server() {
        if (pid > 0) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, nullptr, 0);
            std::fclose(out);
        }
    }
};

Json json_of(const httplib::Result& r) {
    REQUIRE(r);
    return Json::parse(r->body);
}

Json questionnaire() {
    return Json{{"mental_demand", {{"constant", 4}, {"point-by-point", 3}, {"row-by-row", 5}}},
                {"comfort", {{"constant", 5}, {"point-by-point", 6}, {"row-by-row", 4}}},
                {"sus", {4, 2, 4, 2, 4, 2, 4, 2, 4, 2}}};
}

}  // namespace

TEST_CASE("a full session over HTTP, then a clean shutdown") {
    const fs::path storage = fs::temp_directory_path() / ("ab_http_" + std::to_string(::getpid()));
    fs::remove_all(storage);

    std::string sid;
    std::string results;
    {
        Server server(storage);
        httplib::Client client("127.0.0.1", server.port);
        client.set_read_timeout(30, 0);

        auto created = client.Post("/v1/sessions", R"({"participant": {"id": "P09", "index": 8}, "seed": 3})",
                                   "application/json");
        REQUIRE(created);
        CHECK(created->status == 201);
        CHECK(created->get_header_value("Access-Control-Allow-Origin") == "*");
        sid = json_of(created)["session_id"].get<std::string>();

        auto preflight = client.Options("/v1/sessions");
        REQUIRE(preflight);
        CHECK(preflight->status == 204);

        int trials = 0, leaks = 0;
        for (;;) {
            const Json next = json_of(client.Get("/v1/sessions/" + sid + "/next"));
            if (next.value("done", false)) break;
            const int tid = next["trial_id"].get<int>();
            const std::string base = "/v1/sessions/" + sid + "/trials/" + std::to_string(tid);
            const bool actual = next["phase"] == "actual";
            if (actual) {
                leaks += next.contains("truth") || next.contains("truth_char");
                auto withheld = client.Get(base + "/schedule");
                REQUIRE(withheld);
                CHECK(withheld->status == 403);
            }
            const Json sched = json_of(client.Get(base + "/schedule?role=device"));
            const char d = digit_of(sched["pattern"].get<std::string>());
            const char answer = tid % 4 == 0 ? (d == '1' ? '2' : '1') : d;
            auto posted = client.Post(base + "/response",
                                      Json{{"answer", std::string(1, answer)}, {"elapsed_s", 1.25}}.dump(),
                                      "application/json");
            REQUIRE(posted);
            CHECK(posted->status == 200);
            const Json reply = Json::parse(posted->body);
            if (actual) leaks += reply.dump().find("truth") != std::string::npos || reply.contains("correct");
            ++trials;
        }
        CHECK(trials == 42);
        CHECK(leaks == 0);

        auto dup = client.Post("/v1/sessions/" + sid + "/trials/0/response", R"({"answer":"1","elapsed_s":1})",
                               "application/json");
        REQUIRE(dup);
        CHECK(dup->status == 409);

        auto fin = client.Post("/v1/sessions/" + sid + "/finalize", questionnaire().dump(), "application/json");
        REQUIRE(fin);
        CHECK(fin->status == 200);
        auto res = client.Get("/v1/sessions/" + sid + "/results");
        REQUIRE(res);
        CHECK(res->status == 200);
        results = res->body;
        CHECK(Json::parse(results)["report"]["actual_trials"] == 30);

        const auto [code, rest] = server.stop();
        CHECK(code == 0);
        CHECK(rest.find("stopped") != std::string::npos);
    }

    std::ifstream log(storage / (sid + ".jsonl"));
    int lines = 0;
    std::string line;
    while (std::getline(log, line)) ++lines;
    CHECK(lines == 44);

    // a restarted server serves the same results from disk
    {
        Server again(storage);
        httplib::Client client("127.0.0.1", again.port);
        auto res = client.Get("/v1/sessions/" + sid + "/results");
        REQUIRE(res);
        CHECK(res->body == results);
        CHECK(again.stop().first == 0);
    }
    fs::remove_all(storage);
}
