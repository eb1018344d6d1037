#include "session.hpp"

#include "error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace airbraille {
namespace {

// mt19937_64 output is fully specified by the standard; the distributions are
// not, so bounded draws and shuffles are done here to keep plans identical
// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
        }
    }

private:
    std::mt19937_64 engine_;
};

constexpr std::uint64_t kDigitStream = 0x9E3779B97F4A7C15ULL;

const char* ordering_name(MethodOrdering o) {
    return o == MethodOrdering::LatinSquare ? "latin-square" : "seeded-random";
}

std::vector<char> shuffled_digits(Rng& rng) {
    std::vector<char> deck = digit_labels();
    rng.shuffle(deck);
    return deck;
}

char parse_answer(const std::string& answer) {
    if (answer.size() != 1 || !std::isdigit(static_cast<unsigned char>(answer[0]))) {
        fail(ErrorCode::InvalidArgument, "answer must be a single digit 0-9");
    }
    return answer[0];
}

}  // namespace

void SessionConfig::validate() const {
    if (methods.empty()) fail(ErrorCode::InvalidConfig, "session needs at least one method");
    std::set<Method> unique(methods.begin(), methods.end());
    if (unique.size() != methods.size()) fail(ErrorCode::InvalidConfig, "session methods must be distinct");
    if (trials_per_method < 1) fail(ErrorCode::InvalidConfig, "trials_per_method must be >= 1");
    if (training_per_method < 0) fail(ErrorCode::InvalidConfig, "training_per_method must be >= 0");
    if (participant.id.empty()) fail(ErrorCode::InvalidConfig, "participant id must not be empty");
    if (participant.index < 0) fail(ErrorCode::InvalidConfig, "participant index must be >= 0");
}

Json session_config_to_json(const SessionConfig& cfg) {
    Json p;
    p["id"] = cfg.participant.id;
    p["index"] = cfg.participant.index;
    p["age"] = cfg.participant.age ? Json(*cfg.participant.age) : Json();
    p["handedness"] = cfg.participant.handedness;
    p["braille_years"] = cfg.participant.braille_years ? Json(*cfg.participant.braille_years) : Json();
    Json j;
    j["participant"] = p;
    j["methods"] = Json::array();
    for (Method m : cfg.methods) j["methods"].push_back(std::string(method_name(m)));
    j["trials_per_method"] = cfg.trials_per_method;
    j["training_per_method"] = cfg.training_per_method;
    j["seed"] = cfg.seed;
    j["ordering"] = ordering_name(cfg.ordering);
    return j;
}

SessionConfig session_config_from_json(const Json& doc, SessionConfig base) {
    SessionConfig cfg = std::move(base);
    if (doc.is_null()) return cfg;
    auto bad = [](const std::string& what) { fail(ErrorCode::InvalidConfig, what); };
    if (!doc.is_object()) bad("session config must be an object");
    static const std::set<std::string> keys{"participant", "methods", "trials_per_method",
                                            "training_per_method", "seed", "ordering"};
    for (const auto& item : doc.items()) {
        if (!keys.count(item.key())) bad("unknown session config key '" + item.key() + "'");
    }
    if (doc.contains("participant")) {
        const Json& p = doc["participant"];
        if (!p.is_object()) bad("participant must be an object");
        static const std::set<std::string> pkeys{"id", "index", "age", "handedness", "braille_years"};
        for (const auto& item : p.items()) {
            if (!pkeys.count(item.key())) bad("unknown participant key '" + item.key() + "'");
        }
        if (p.contains("id")) {
            if (!p["id"].is_string()) bad("participant.id must be a string");
            cfg.participant.id = p["id"].get<std::string>();
        }
        if (p.contains("index")) {
            if (!p["index"].is_number_integer()) bad("participant.index must be an integer");
            cfg.participant.index = p["index"].get<int>();
        }
        if (p.contains("age") && !p["age"].is_null()) {
            if (!p["age"].is_number_integer()) bad("participant.age must be an integer");
            cfg.participant.age = p["age"].get<int>();
        }
        if (p.contains("handedness")) {
            if (!p["handedness"].is_string()) bad("participant.handedness must be a string");
            cfg.participant.handedness = p["handedness"].get<std::string>();
        }
        if (p.contains("braille_years") && !p["braille_years"].is_null()) {
            if (!p["braille_years"].is_number_integer()) bad("participant.braille_years must be an integer");
            cfg.participant.braille_years = p["braille_years"].get<int>();
        }
    }
    if (doc.contains("methods")) {
        if (!doc["methods"].is_array()) bad("methods must be an array of names");
        cfg.methods.clear();
        for (const Json& m : doc["methods"]) {
            if (!m.is_string()) bad("methods must be an array of names");
            try {
                cfg.methods.push_back(parse_method(m.get<std::string>()));
            } catch (const Error& e) {
                bad(e.what());
            }
        }
    }
    if (doc.contains("trials_per_method")) {
        if (!doc["trials_per_method"].is_number_integer()) bad("trials_per_method must be an integer");
        cfg.trials_per_method = doc["trials_per_method"].get<int>();
    }
    if (doc.contains("training_per_method")) {
        if (!doc["training_per_method"].is_number_integer()) bad("training_per_method must be an integer");
        cfg.training_per_method = doc["training_per_method"].get<int>();
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) bad("seed must be a non-negative integer");
        cfg.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("ordering")) {
        const std::string o = doc["ordering"].is_string() ? doc["ordering"].get<std::string>() : "";
        if (o == "latin-square") {
            cfg.ordering = MethodOrdering::LatinSquare;
        } else if (o == "seeded-random") {
            cfg.ordering = MethodOrdering::SeededRandom;
        } else {
            bad("ordering must be latin-square or seeded-random");
        }
    }
    cfg.validate();
    return cfg;
}

std::vector<Method> method_order(const SessionConfig& cfg) {
    std::vector<Method> order;
    const std::size_t k = cfg.methods.size();
    if (cfg.ordering == MethodOrdering::LatinSquare) {
        const auto shift = static_cast<std::size_t>(cfg.participant.index) % k;
        for (std::size_t j = 0; j < k; ++j) order.push_back(cfg.methods[(shift + j) % k]);
    } else {
        order = cfg.methods;
        Rng rng(cfg.seed);
        rng.shuffle(order);
    }
    return order;
}

std::vector<PlannedTrial> plan_trials(const SessionConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed ^ kDigitStream);
    std::vector<PlannedTrial> plan;
    auto add = [&](Method m, TrialPhase phase, char digit) {
        plan.push_back({static_cast<int>(plan.size()), m, phase, digit});
    };
    const auto deck_size = digit_labels().size();
    for (Method m : method_order(cfg)) {
        std::vector<char> deck;
        for (int i = 0; i < cfg.training_per_method; ++i) {
            if (deck.empty()) deck = shuffled_digits(rng);
            add(m, TrialPhase::Training, deck.back());
            deck.pop_back();
        }

        std::vector<char> block;
        const auto rounds = static_cast<std::size_t>(cfg.trials_per_method) / deck_size;
        const auto rest = static_cast<std::size_t>(cfg.trials_per_method) % deck_size;
        for (std::size_t r = 0; r < rounds; ++r) {
            block.insert(block.end(), digit_labels().begin(), digit_labels().end());
        }
        const std::vector<char> partial = shuffled_digits(rng);
        block.insert(block.end(), partial.begin(), partial.begin() + static_cast<std::ptrdiff_t>(rest));
        rng.shuffle(block);
        for (char d : block) add(m, TrialPhase::Actual, d);
    }
    return plan;
}

bool timing_disagrees(double client_s, double server_s) {
    const double lo = std::min(client_s, server_s);
    const double hi = std::max(client_s, server_s);
    // Sub-50 ms gaps are scheduling jitter, not a disagreement.
    return hi - lo > 0.05 && hi > 10.0 * lo;
}

Session::Session(std::string id, SessionConfig cfg)
    : id_(std::move(id)), cfg_(std::move(cfg)), plan_(plan_trials(cfg_)) {}

const PlannedTrial* Session::current() const {
    if (all_answered()) return nullptr;
    return &plan_[responses_.size()];
}

const PlannedTrial* Session::find(int trial_id) const {
    if (trial_id < 0 || static_cast<std::size_t>(trial_id) >= plan_.size()) return nullptr;
    return &plan_[static_cast<std::size_t>(trial_id)];
}

bool Session::answered(int trial_id) const {
    return trial_id >= 0 && static_cast<std::size_t>(trial_id) < responses_.size();
}

Json Session::descriptor(const PlannedTrial& trial) const {
    Json d;
    d["session_id"] = id_;
    d["trial_id"] = trial.id;
    d["index"] = trial.id;
    d["total"] = plan_.size();
    d["phase"] = std::string(trial_phase_name(trial.phase));
    d["method"] = std::string(method_name(trial.method));
    d["schedule"] = "/v1/sessions/" + id_ + "/trials/" + std::to_string(trial.id) + "/schedule";
    if (trial.phase == TrialPhase::Training) {
        d["truth"] = encode_char(trial.digit).to_string();
        d["truth_char"] = std::string(1, trial.digit);
    }
    return d;
}

Json Session::next_trial() const {
    if (const PlannedTrial* t = current()) return descriptor(*t);
    return Json{{"session_id", id_}, {"done", true}, {"finalized", finalized()}};
}

SubmitOutcome Session::submit(int trial_id, const std::string& answer, double elapsed_s,
                              std::optional<double> server_elapsed_s) {
    const PlannedTrial* trial = find(trial_id);
    if (!trial) fail(ErrorCode::UnknownTrial, "no trial " + std::to_string(trial_id) + " in session " + id_);
    if (answered(trial_id)) {
        fail(ErrorCode::DuplicateResponse, "trial " + std::to_string(trial_id) + " was already answered");
    }
    if (current()->id != trial_id) {
        fail(ErrorCode::TrialNotPending, "trial " + std::to_string(trial_id) + " is not the pending trial");
    }
    if (!std::isfinite(elapsed_s) || elapsed_s < 0.0) {
        fail(ErrorCode::InvalidArgument, "elapsed_s must be a non-negative number");
    }
    const char digit = parse_answer(answer);

    SubmitOutcome out;
    out.record.trial_id = trial_id;
    out.record.answer = digit;
    out.record.elapsed_s = elapsed_s;
    out.record.server_elapsed_s = server_elapsed_s;
    out.record.timing_flag = server_elapsed_s && timing_disagrees(elapsed_s, *server_elapsed_s);
    responses_.push_back(out.record);

    out.reply["trial_id"] = trial_id;
    out.reply["recorded"] = true;
    if (trial->phase == TrialPhase::Training) {
        out.reply["correct"] = digit == trial->digit;
        out.reply["truth"] = encode_char(trial->digit).to_string();
        out.reply["truth_char"] = std::string(1, trial->digit);
    }
    out.log_row = trial_row(out.record);
    return out;
}

Json Session::finalize(const Questionnaire& questionnaire) {
    if (finalized()) fail(ErrorCode::DuplicateResponse, "session " + id_ + " is already finalized");
    if (!all_answered()) {
        fail(ErrorCode::SessionIncomplete,
             std::to_string(plan_.size() - responses_.size()) + " trials are still unanswered");
    }
    Questionnaire q = questionnaire;
    q.participant = cfg_.participant.id;
    q.validate(cfg_.methods);
    questionnaire_ = q;
    return summary();
}

Json Session::summary() const {
    if (!finalized()) fail(ErrorCode::SessionIncomplete, "session " + id_ + " is not finalized");
    StudyData data;
    data.trials = trial_records();
    data.questionnaires.push_back(*questionnaire_);
    Json s;
    s["session_id"] = id_;
    s["participant"] = cfg_.participant.id;
    s["report"] = analysis_report(data);
    return s;
}

Json Session::questionnaire_row() const {
    if (!finalized()) fail(ErrorCode::SessionIncomplete, "session " + id_ + " is not finalized");
    return questionnaire_to_json(*questionnaire_);
}

std::vector<TrialRecord> Session::trial_records() const {
    std::vector<TrialRecord> out;
    for (const ResponseRecord& r : responses_) {
        const PlannedTrial& p = plan_[static_cast<std::size_t>(r.trial_id)];
        out.push_back({cfg_.participant.id, p.method, encode_char(p.digit), encode_char(r.answer),
                       r.elapsed_s, p.phase});
    }
    return out;
}

Json Session::header_row() const {
    Json j;
    j["type"] = "session";
    j["format"] = kSessionFormat;
    j["session_id"] = id_;
    j["config"] = session_config_to_json(cfg_);
    return j;
}

Json Session::trial_row(const ResponseRecord& r) const {
    const PlannedTrial& p = plan_[static_cast<std::size_t>(r.trial_id)];
    Json j;
    j["type"] = "trial";
    j["trial_id"] = r.trial_id;
    j["participant"] = cfg_.participant.id;
    j["method"] = std::string(method_name(p.method));
    j["phase"] = std::string(trial_phase_name(p.phase));
    j["truth"] = encode_char(p.digit).to_string();
    j["truth_char"] = std::string(1, p.digit);
    j["answer"] = std::string(1, r.answer);
    j["response"] = encode_char(r.answer).to_string();
    j["elapsed_s"] = r.elapsed_s;
    j["server_elapsed_s"] = r.server_elapsed_s ? Json(*r.server_elapsed_s) : Json();
    j["timing_flag"] = r.timing_flag;
    return j;
}

Session Session::replay(const std::string& log_text) {
    std::istringstream in(log_text);
    std::string line;
    std::optional<Session> session;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json rec;
        try {
            rec = Json::parse(line);
        } catch (const nlohmann::json::exception&) {
            fail(ErrorCode::InvalidArgument, "malformed session log line " + std::to_string(line_no));
        }
        const std::string type = rec.value("type", "");
        if (!session) {
            if (type != "session" || rec.value("format", "") != kSessionFormat) {
                fail(ErrorCode::InvalidArgument, "session log must start with a session header");
            }
            session.emplace(rec.value("session_id", ""), session_config_from_json(rec["config"]));
            continue;
        }
        if (type == "trial") {
            if (!rec.contains("trial_id") || !rec["trial_id"].is_number_integer()) {
                fail(ErrorCode::InvalidArgument, "trial row lacks trial_id at line " + std::to_string(line_no));
            }
            const int id = rec["trial_id"].get<int>();
            const PlannedTrial* planned = session->find(id);
            if (!planned || rec.value("truth", "") != encode_char(planned->digit).to_string()) {
                fail(ErrorCode::InvalidArgument, "log does not match the session plan at line " +
                                                     std::to_string(line_no));
            }
            std::optional<double> server;
            if (rec.contains("server_elapsed_s") && rec["server_elapsed_s"].is_number()) {
                server = rec["server_elapsed_s"].get<double>();
            }
            session->submit(id, rec.value("answer", ""), rec.value("elapsed_s", -1.0), server);
            session->responses_.back().timing_flag = rec.value("timing_flag", false);
        } else if (type == "questionnaire") {
            session->finalize(questionnaire_from_json(rec, session->cfg_.participant.id));
        }
    }
    if (!session) fail(ErrorCode::InvalidArgument, "empty session log");
    return std::move(*session);
}

}  // namespace airbraille
