#pragma once

#include "error.hpp"
#include "serialize.hpp"
#include "session.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>

namespace airbraille {

struct HttpReply {
    int status = 200;
    std::string body;
};

int http_status_for(ErrorCode code) noexcept;
Json error_body(ErrorCode code, const std::string& message);

// Session registry behind the /v1 wire API. Sessions are persisted as
// append-only JSONL files in `storage_dir` (empty: memory only) and reloaded
// on construction.
class Service {
public:
    // Monotonic seconds; injectable for tests.
    using Clock = std::function<double()>;

    explicit Service(std::string storage_dir = {}, RunConfig run = {}, Clock clock = {});

    Json create_session(const Json& config_doc);
    Json next_trial(const std::string& session_id);
    Json submit(const std::string& session_id, int trial_id, const Json& body);
    Json finalize(const std::string& session_id, const Json& questionnaire);
    Json results(const std::string& session_id) const;
    // Actual-phase trials still pending are withheld unless `device` is set:
    // the document carries the pattern.
    Json trial_schedule(const std::string& session_id, int trial_id, bool device) const;

    std::size_t session_count() const;
    std::string log_path(const std::string& session_id) const;

    // Routes one request; `target` may carry a query string. Never throws.
    HttpReply handle(const std::string& method, const std::string& target, const std::string& body);

private:
    struct Entry {
        explicit Entry(Session s) : session(std::move(s)) {}
        mutable std::mutex mutex;
        Session session;
        int timed_trial = -1;
        double served_at = 0.0;
    };

    Entry& entry(const std::string& session_id) const;
    void append_log(const std::string& session_id, const Json& row) const;
    void load_storage();

    std::string storage_dir_;
    RunConfig run_;
    Clock clock_;
    mutable std::shared_mutex registry_mutex_;
    std::map<std::string, std::unique_ptr<Entry>> sessions_;
    long next_serial_ = 1;
};

}  // namespace airbraille
