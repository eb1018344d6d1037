#pragma once

#include "analysis.hpp"
#include "report.hpp"
#include "serialize.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace airbraille {

enum class MethodOrdering { LatinSquare, SeededRandom };

struct ParticipantInfo {
    std::string id = "P01";
    // Position in the recruitment sequence; selects the Latin-square row.
    int index = 0;
    std::optional<int> age;
    std::string handedness;  // "l" | "r" | ""
    std::optional<int> braille_years;
};

struct SessionConfig {
    ParticipantInfo participant;
    std::vector<Method> methods{kStudiedMethods.begin(), kStudiedMethods.end()};
    int trials_per_method = 10;
    int training_per_method = 4;
    std::uint64_t seed = 1;
    MethodOrdering ordering = MethodOrdering::LatinSquare;

    void validate() const;
};

Json session_config_to_json(const SessionConfig& cfg);
// Keys missing from `doc` keep the values of `base`.
SessionConfig session_config_from_json(const Json& doc, SessionConfig base = {});

struct PlannedTrial {
    int id = 0;
    Method method = Method::Constant;
    TrialPhase phase = TrialPhase::Training;
    char digit = '0';
};

// Method order for this participant: cyclic Latin-square row or seeded shuffle.
std::vector<Method> method_order(const SessionConfig& cfg);

// Per method block: training trials, then actual trials. Each block of
// actual trials draws every digit once per round of ten, shuffled by seed.
std::vector<PlannedTrial> plan_trials(const SessionConfig& cfg);

struct ResponseRecord {
    int trial_id = 0;
    char answer = '0';
    double elapsed_s = 0.0;
    std::optional<double> server_elapsed_s;
    bool timing_flag = false;
};

// Client and server timings disagree by more than a factor of ten.
bool timing_disagrees(double client_s, double server_s);

struct SubmitOutcome {
    ResponseRecord record;
    Json reply;
    Json log_row;
};

class Session {
public:
    Session(std::string id, SessionConfig cfg);

    const std::string& id() const { return id_; }
    const SessionConfig& config() const { return cfg_; }
    const std::vector<PlannedTrial>& plan() const { return plan_; }
    const std::vector<ResponseRecord>& responses() const { return responses_; }

    bool all_answered() const { return responses_.size() == plan_.size(); }
    bool finalized() const { return questionnaire_.has_value(); }
    const PlannedTrial* current() const;
    const PlannedTrial* find(int trial_id) const;
    bool answered(int trial_id) const;

    // Wire descriptor; the truth is included for training trials only.
    Json descriptor(const PlannedTrial& trial) const;
    Json next_trial() const;

    SubmitOutcome submit(int trial_id, const std::string& answer, double elapsed_s,
                         std::optional<double> server_elapsed_s);

    // Returns the summary; the questionnaire log row is available from
    // questionnaire_row() afterwards.
    Json finalize(const Questionnaire& questionnaire);
    Json summary() const;
    Json questionnaire_row() const;

    std::vector<TrialRecord> trial_records() const;
    Json header_row() const;
    Json trial_row(const ResponseRecord& r) const;

    // Reconstructs a session from its line-delimited log.
    static Session replay(const std::string& log_text);

private:
    std::string id_;
    SessionConfig cfg_;
    std::vector<PlannedTrial> plan_;
    std::vector<ResponseRecord> responses_;
    std::optional<Questionnaire> questionnaire_;
};

inline constexpr const char* kSessionFormat = "airbraille.session/1";

}  // namespace airbraille
