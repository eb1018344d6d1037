#include "service.hpp"

#include "error.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace airbraille {
namespace fs = std::filesystem;
namespace {

double steady_seconds() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

std::string session_name(long serial) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%06ld", serial);
    return buf;
}

// "s000042" -> 42; anything else -> 0
long serial_of(const std::string& id) {
    if (id.size() < 2 || id[0] != 's') return 0;
    long v = 0;
    for (std::size_t i = 1; i < id.size(); ++i) {
        if (id[i] < '0' || id[i] > '9') return 0;
        v = v * 10 + (id[i] - '0');
    }
    return v;
}

Json parse_body(const std::string& body) {
    if (body.find_first_not_of(" \t\r\n") == std::string::npos) return Json();
    try {
        return Json::parse(body);
    } catch (const nlohmann::json::exception&) {
        fail(ErrorCode::InvalidArgument, "request body is not valid JSON");
    }
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : path) {
        if (c == '/') {
            if (!cur.empty()) parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) parts.push_back(cur);
    return parts;
}

int parse_trial_id(const std::string& s) {
    if (s.empty() || s.size() > 9) fail(ErrorCode::UnknownTrial, "no trial '" + s + "'");
    int v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') fail(ErrorCode::UnknownTrial, "no trial '" + s + "'");
        v = v * 10 + (c - '0');
    }
    return v;
}

bool query_flag(const std::string& query, const std::string& key, const std::string& value) {
    std::istringstream in(query);
    std::string pair;
    while (std::getline(in, pair, '&')) {
        if (pair == key + "=" + value) return true;
    }
    return false;
}

}  // namespace

int http_status_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::UnknownSession:
        case ErrorCode::UnknownTrial:
            return 404;
        case ErrorCode::DuplicateResponse:
        case ErrorCode::TrialNotPending:
        case ErrorCode::SessionIncomplete:
            return 409;
        case ErrorCode::TruthWithheld:
            return 403;
        default:
            return is_validation_error(code) ? 400 : 500;
    }
}

Json error_body(ErrorCode code, const std::string& message) {
    return Json{{"error", {{"code", std::string(error_code_name(code))}, {"message", message}}}};
}

Service::Service(std::string storage_dir, RunConfig run, Clock clock)
    : storage_dir_(std::move(storage_dir)), run_(std::move(run)), clock_(std::move(clock)) {
    if (!clock_) clock_ = steady_seconds;
    run_.validate();
    if (!storage_dir_.empty()) load_storage();
}

void Service::load_storage() {
    std::error_code ec;
    fs::create_directories(storage_dir_, ec);
    if (ec) fail(ErrorCode::Io, "cannot create storage directory " + storage_dir_ + ": " + ec.message());
    std::vector<fs::path> logs;
    for (const auto& e : fs::directory_iterator(storage_dir_)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") logs.push_back(e.path());
    }
    std::sort(logs.begin(), logs.end());
    for (const auto& path : logs) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream text;
        text << in.rdbuf();
        Session s = Session::replay(text.str());
        next_serial_ = std::max(next_serial_, serial_of(s.id()) + 1);
        const std::string id = s.id();
        sessions_.emplace(id, std::make_unique<Entry>(std::move(s)));
    }
}

std::string Service::log_path(const std::string& session_id) const {
    if (storage_dir_.empty()) return {};
    return (fs::path(storage_dir_) / (session_id + ".jsonl")).string();
}

void Service::append_log(const std::string& session_id, const Json& row) const {
    if (storage_dir_.empty()) return;
    std::ofstream out(log_path(session_id), std::ios::app | std::ios::binary);
    out << row.dump() << '\n';
    out.flush();
    if (!out) fail(ErrorCode::Io, "cannot append to " + log_path(session_id));
}

Service::Entry& Service::entry(const std::string& session_id) const {
    std::shared_lock lock(registry_mutex_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) fail(ErrorCode::UnknownSession, "no session '" + session_id + "'");
    return *it->second;
}

std::size_t Service::session_count() const {
    std::shared_lock lock(registry_mutex_);
    return sessions_.size();
}

Json Service::create_session(const Json& config_doc) {
    SessionConfig defaults;
    defaults.seed = run_.seed;
    SessionConfig cfg = session_config_from_json(config_doc, defaults);
    std::unique_lock lock(registry_mutex_);
    const std::string id = session_name(next_serial_++);
    auto e = std::make_unique<Entry>(Session(id, std::move(cfg)));
    append_log(id, e->session.header_row());

    const Session& s = e->session;
    Json reply;
    reply["session_id"] = id;
    reply["trials"] = s.plan().size();
    reply["method_order"] = Json::array();
    for (Method m : method_order(s.config())) reply["method_order"].push_back(std::string(method_name(m)));
    reply["config"] = session_config_to_json(s.config());
    const PlannedTrial* first = s.current();
    reply["first_trial"] = s.descriptor(*first);
    e->timed_trial = first->id;
    e->served_at = clock_();
    sessions_.emplace(id, std::move(e));
    return reply;
}

Json Service::next_trial(const std::string& session_id) {
    Entry& e = entry(session_id);
    std::lock_guard lock(e.mutex);
    const PlannedTrial* t = e.session.current();
    // The response timer starts the first time a trial is handed out.
    if (t && e.timed_trial != t->id) {
        e.timed_trial = t->id;
        e.served_at = clock_();
    }
    return e.session.next_trial();
}

Json Service::submit(const std::string& session_id, int trial_id, const Json& body) {
    Entry& e = entry(session_id);
    if (!body.is_object()) fail(ErrorCode::InvalidArgument, "response body must be an object");
    std::string answer;
    if (body.contains("answer") && body["answer"].is_string()) {
        answer = body["answer"].get<std::string>();
    } else if (body.contains("answer") && body["answer"].is_number_integer()) {
        const auto v = body["answer"].get<long long>();
        if (v < 0 || v > 9) fail(ErrorCode::InvalidArgument, "answer must be a single digit 0-9");
        answer = std::to_string(v);
    } else {
        fail(ErrorCode::InvalidArgument, "response needs an answer digit");
    }
    if (!body.contains("elapsed_s") || !body["elapsed_s"].is_number()) {
        fail(ErrorCode::InvalidArgument, "response needs elapsed_s in seconds");
    }
    const double elapsed = body["elapsed_s"].get<double>();

    std::lock_guard lock(e.mutex);
    std::optional<double> server;
    if (e.timed_trial == trial_id) server = clock_() - e.served_at;
    SubmitOutcome out = e.session.submit(trial_id, answer, elapsed, server);
    try {
        append_log(session_id, out.log_row);
    } catch (...) {
        // keep memory and disk in step
        e.session = Session::replay([&] {
            std::ifstream in(log_path(session_id), std::ios::binary);
            std::ostringstream text;
            text << in.rdbuf();
            return text.str();
        }());
        throw;
    }
    e.timed_trial = -1;
    return out.reply;
}

Json Service::finalize(const std::string& session_id, const Json& questionnaire) {
    Entry& e = entry(session_id);
    std::lock_guard lock(e.mutex);
    if (e.session.finalized()) {
        fail(ErrorCode::DuplicateResponse, "session " + session_id + " is already finalized");
    }
    if (!e.session.all_answered()) {
        fail(ErrorCode::SessionIncomplete,
             std::to_string(e.session.plan().size() - e.session.responses().size()) +
                 " trials are still unanswered");
    }
    const Questionnaire q = questionnaire_from_json(questionnaire, e.session.config().participant.id);
    Session trial_copy = e.session;
    Json summary = trial_copy.finalize(q);
    append_log(session_id, trial_copy.questionnaire_row());
    e.session = std::move(trial_copy);
    return summary;
}

Json Service::results(const std::string& session_id) const {
    Entry& e = entry(session_id);
    std::lock_guard lock(e.mutex);
    return e.session.summary();
}

Json Service::trial_schedule(const std::string& session_id, int trial_id, bool device) const {
    Entry& e = entry(session_id);
    std::lock_guard lock(e.mutex);
    const PlannedTrial* t = e.session.find(trial_id);
    if (!t) fail(ErrorCode::UnknownTrial, "no trial " + std::to_string(trial_id) + " in session " + session_id);
    if (t->phase == TrialPhase::Actual && !e.session.answered(trial_id) && !device) {
        fail(ErrorCode::TruthWithheld, "the schedule of a pending actual trial is only served to the device");
    }
    const Schedule s = make_schedule(encode_char(t->digit), t->method, run_.layout, run_.frequencies, run_.schedule);
    return schedule_to_json(s);
}

HttpReply Service::handle(const std::string& method, const std::string& target, const std::string& body) {
    const auto q = target.find('?');
    const std::string path = target.substr(0, q);
    const std::string query = q == std::string::npos ? "" : target.substr(q + 1);
    const auto parts = split_path(path);

    auto ok = [](int status, const Json& doc) { return HttpReply{status, dump(doc)}; };
    auto wrong_method = [&] {
        return HttpReply{405, dump(error_body(ErrorCode::InvalidArgument, method + " not allowed on " + path))};
    };

    try {
        if (parts.size() < 2 || parts[0] != "v1" || parts[1] != "sessions") {
            return {404, dump(error_body(ErrorCode::InvalidArgument, "no route " + path))};
        }
        if (parts.size() == 2) {
            if (method != "POST") return wrong_method();
            return ok(201, create_session(parse_body(body)));
        }
        const std::string& sid = parts[2];
        if (parts.size() == 4 && parts[3] == "next") {
            if (method != "GET") return wrong_method();
            return ok(200, next_trial(sid));
        }
        if (parts.size() == 4 && parts[3] == "finalize") {
            if (method != "POST") return wrong_method();
            return ok(200, finalize(sid, parse_body(body)));
        }
        if (parts.size() == 4 && parts[3] == "results") {
            if (method != "GET") return wrong_method();
            return ok(200, results(sid));
        }
        if (parts.size() == 6 && parts[3] == "trials" && parts[5] == "response") {
            if (method != "POST") return wrong_method();
            entry(sid);
            return ok(200, submit(sid, parse_trial_id(parts[4]), parse_body(body)));
        }
        if (parts.size() == 6 && parts[3] == "trials" && parts[5] == "schedule") {
            if (method != "GET") return wrong_method();
            entry(sid);
            return ok(200, trial_schedule(sid, parse_trial_id(parts[4]), query_flag(query, "role", "device")));
        }
        return {404, dump(error_body(ErrorCode::InvalidArgument, "no route " + path))};
    } catch (const Error& e) {
        return {http_status_for(e.code()), dump(error_body(e.code(), e.what()))};
    } catch (const std::exception& e) {
        return {500, dump(error_body(ErrorCode::Internal, e.what()))};
    }
}

}  // namespace airbraille
