#pragma once

#include "analysis.hpp"
#include "serialize.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace airbraille {

struct Questionnaire {
    std::string participant;
    std::map<Method, int> mental_demand;  // 1..7
    std::map<Method, int> comfort;        // 1..7
    std::array<int, 10> sus{};            // 1..5

    // Every listed method needs both Likert answers.
    void validate(const std::vector<Method>& methods) const;
};

Json questionnaire_to_json(const Questionnaire& q);
Questionnaire questionnaire_from_json(const Json& doc, const std::string& participant);

struct StudyData {
    std::vector<TrialRecord> trials;
    std::vector<Questionnaire> questionnaires;
};

// Parses a line-delimited session log. Lines of unknown type are ignored;
// trial lines may give the response as a cell string ("response") or as a
// digit ("answer").
StudyData parse_session_log(const std::string& text);
void append_study(StudyData& into, const StudyData& from);

TrialRecord trial_from_json(const Json& rec, const std::string& default_participant);

inline constexpr const char* kReportFormat = "airbraille.report/1";

// Runs the full analysis suite over the actual-phase trials. Fails with
// EmptyInput when there are none.
Json analysis_report(const StudyData& data);

// Header row of digit labels; first column is the truth label.
std::string confusion_csv(const ConfusionMatrix& m);

}  // namespace airbraille
