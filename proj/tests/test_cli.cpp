#include <doctest.h>

#include <nlohmann/json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path work_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / ("ab_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) {
        if (c == '\'') q += "'\\''";
        else q += c;
    }
    return q + "'";
}

Run cli(const std::string& args) {
    const fs::path err = work_dir() / "stderr.txt";
    const std::string cmd = quote(AB_CLI) + " " + args + " 2>" + quote(err.string());
    Run r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err);
    return r;
}

std::string path_arg(const std::string& name) { return quote((work_dir() / name).string()); }

const char* kCells[] = {"245", "1", "12", "14", "145", "15", "124", "1245", "125", "24"};

std::string trial_row(char truth, char answer, const char* method = "constant") {
    return Json{{"type", "trial"},
                {"participant", "P1"},
                {"method", method},
                {"phase", "actual"},
                {"truth", kCells[truth - '0']},
                {"answer", std::string(1, answer)},
                {"elapsed_s", 2.5}}
               .dump() +
           "\n";
}

}  // namespace

TEST_CASE("encode") {
    Run r = cli("encode 17");
    CHECK(r.code == 0);
    CHECK(r.out == "1:{1} 7:{1,2,4,5}\n");
    r = cli("encode ''");
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    r = cli("encode '?'");
    CHECK(r.code == 2);
    CHECK(r.err.find("UnknownCharacter") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
    CHECK(cli("").code == 2);
    CHECK(cli("warp").code == 2);
    CHECK(cli("schedule --char 1").code == 2);
    CHECK(cli("encode 1 --height-m abc").code == 2);
}

TEST_CASE("schedule") {
    Run r = cli("schedule --char 7 --method point-by-point");
    REQUIRE(r.code == 0);
    Json doc = Json::parse(r.out);
    CHECK(doc["total_duration_s"] == 2.2);
    CHECK(doc["pattern"] == "1245");

    r = cli("schedule --char 1 --method constant -o " + path_arg("c1.json"));
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    doc = Json::parse(slurp(work_dir() / "c1.json"));
    CHECK(doc["events"].size() == 1);
    CHECK(doc["total_duration_s"] == "open");

    CHECK(cli("schedule --char ' ' --method constant").code == 2);
    CHECK(cli("schedule --char 1 --method sideways").code == 2);
    CHECK(cli("schedule --char 1 --method constant --height-m 0.9").code == 2);
    CHECK(cli("schedule --char 12 --method constant").code == 2);
}

TEST_CASE("simulate") {
    Run r = cli("simulate --char 1 --method constant --time-s 0.0025 --field-out " + path_arg("f1.csv"));
    REQUIRE(r.code == 0);
    Json rep = Json::parse(r.out);
    REQUIRE(rep["metrics"]["peaks"].size() == 1);
    CHECK(rep["metrics"]["peaks"][0]["peak_offset_m"].get<double>() < 0.0043);
    CHECK(slurp(work_dir() / "f1.csv").rfind("# airbraille.field/1", 0) == 0);

    r = cli("simulate --schedule " + path_arg("c1.json") + " --time-s 0");
    CHECK(r.code == 3);
    CHECK(Json::parse(r.out)["error"]["code"] == "PeakNotFound");

    r = cli("simulate --char 3 --method constant --grid-res-m 0.001");
    REQUIRE(r.code == 0);
    rep = Json::parse(r.out);
    CHECK(rep["metrics"]["peaks"].size() == 2);
    CHECK(rep["metrics"]["contrast_to_midpoint"].get<double>() < 0.7);

    CHECK(cli("simulate --char 1").code == 2);
    CHECK(cli("simulate --schedule " + path_arg("missing.json")).code == 3);
}

TEST_CASE("frames") {
    REQUIRE(cli("schedule --char 7 --method row-by-row -o " + path_arg("r7.json")).code == 0);
    const Run r = cli("frames --schedule " + path_arg("r7.json") + " --t0 0 --t1 0.005");
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) {
        const Json f = Json::parse(line);
        CHECK(f.contains("timestamp_s"));
        ++n;
    }
    CHECK(n == 5);
    CHECK(cli("frames --schedule " + path_arg("r7.json") + " --t0 0 --t1 0.1 --control-rate-hz 300").code == 2);
}

TEST_CASE("analyze") {
    std::string all_correct;
    for (char d = '0'; d <= '9'; ++d) all_correct += trial_row(d, d);
    write(work_dir() / "correct.jsonl", all_correct);
    Run r = cli("analyze " + path_arg("correct.jsonl") + " --confusion-out " + path_arg("cm.csv"));
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out)["accuracy_by_method"][0]["accuracy_pct"]["mean"] == 100.0);
    const std::string csv = slurp(work_dir() / "cm.csv");
    CHECK(csv.rfind("truth\\response,0,1,2,3,4,5,6,7,8,9\n0,1,0", 0) == 0);

    write(work_dir() / "errors.jsonl", trial_row('8', '5') + trial_row('9', '6') + trial_row('4', '0') +
                                           trial_row('7', '3'));
    r = cli("analyze " + path_arg("errors.jsonl"));
    REQUIRE(r.code == 0);
    const Json counts = Json::parse(r.out)["error_breakdown"]["counts"];
    CHECK(counts["SingleFalseNegative"] == 1);
    CHECK(counts["SingleFalsePositive"] == 1);
    CHECK(counts["SubstitutedPoint"] == 1);
    CHECK(counts["MultipleOmission"] == 1);

    write(work_dir() / "empty.jsonl", "");
    r = cli("analyze " + path_arg("empty.jsonl"));
    CHECK(r.code == 2);
    CHECK(r.err.find("EmptyInput") != std::string::npos);

    write(work_dir() / "bad.jsonl", Json{{"type", "trial"}, {"method", "constant"}, {"truth", "1"},
                                         {"response", "1x"}}.dump() + "\n");
    CHECK(cli("analyze " + path_arg("bad.jsonl")).code == 2);
}

TEST_CASE("outputs are byte-identical across runs") {
    const std::string sim = "simulate --char 7 --method constant --time-s 0.004 --iterations 10";
    CHECK(cli(sim).out == cli(sim).out);
    const std::string fr = "frames --schedule " + path_arg("r7.json") + " --t0 0.1 --t1 0.11";
    CHECK(cli(fr).out == cli(fr).out);
    const std::string an = "analyze " + path_arg("errors.jsonl");
    CHECK(cli(an).out == cli(an).out);
}

TEST_CASE("manifests, with flags taking precedence") {
    write(work_dir() / "m.json", Json{{"subcommand", "schedule"},
                                      {"config", {{"layout", {{"plane_height_m", 0.25}}}}},
                                      {"paths", {{"out", (work_dir() / "from_manifest.json").string()}}}}
                                     .dump());
    Run r = cli("schedule --manifest " + path_arg("m.json") + " --char 1 --method constant");
    REQUIRE(r.code == 0);
    Json doc = Json::parse(slurp(work_dir() / "from_manifest.json"));
    CHECK(doc["events"][0]["z"] == 0.25);

    r = cli("schedule --manifest " + path_arg("m.json") + " --char 1 --method constant --height-m 0.3 -o -");
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out)["events"][0]["z"] == 0.3);

    write(work_dir() / "wrong.json", Json{{"subcommand", "frames"}}.dump());
    CHECK(cli("schedule --manifest " + path_arg("wrong.json") + " --char 1 --method constant").code == 2);
    write(work_dir() / "unknown.json", Json{{"colour", "red"}}.dump());
    CHECK(cli("schedule --manifest " + path_arg("unknown.json") + " --char 1 --method constant").code == 2);
}
