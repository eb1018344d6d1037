#pragma once

#include "braille.hpp"
#include "scheduler.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace airbraille {

enum class TrialPhase { Training, Actual };

std::string_view trial_phase_name(TrialPhase phase) noexcept;
TrialPhase parse_trial_phase(std::string_view name);

struct TrialRecord {
    std::string participant;
    Method method = Method::Constant;
    DotPattern truth;
    DotPattern response;
    double elapsed_s = 0.0;
    TrialPhase phase = TrialPhase::Actual;
};

// Perceptual error taxonomy over (missing, extra) cell counts.
enum class ErrorKind {
    Correct,
    SingleFalseNegative,
    SingleFalsePositive,
    SubstitutedPoint,
    MultipleOmission,
    Other,
};

struct ErrorClass {
    ErrorKind kind = ErrorKind::Correct;
    int missing = 0;
    int extra = 0;
};

std::string_view error_kind_name(ErrorKind kind) noexcept;

ErrorClass classify_error(DotPattern truth, DotPattern response);

// Rows are truth, columns response, both indexed by digit value 0..9.
struct ConfusionMatrix {
    std::array<std::array<int, 10>, 10> counts{};

    int total() const;
    int correct() const;
};

// nullopt counts every phase.
ConfusionMatrix confusion_matrix(const std::vector<TrialRecord>& trials,
                                 std::optional<TrialPhase> phase = TrialPhase::Actual);

struct SummaryStats {
    double mean = 0.0;
    double sd = 0.0;      // sample SD (n-1); 0 when n == 1
    int n = 0;
    bool sd_defined = false;
};

SummaryStats summarize(const std::vector<double>& values);

struct MethodAccuracy {
    Method method = Method::Constant;
    SummaryStats accuracy_pct;  // across participants
    SummaryStats time_s;        // per-participant mean response time
};

// Actual-phase trials only; methods in enum order.
std::vector<MethodAccuracy> accuracy_by_method(const std::vector<TrialRecord>& trials);

struct FriedmanResult {
    double chi2 = 0.0;
    int df = 0;
    double p = 1.0;
};

// blocks[i][j]: participant i, treatment j.
FriedmanResult friedman_test(const std::vector<std::vector<double>>& blocks);

// Within-block average ranks (1-based).
std::vector<double> average_ranks(const std::vector<double>& values);

// Exact permutation p-value: fraction of all within-block rank permutations
// whose statistic is at least the observed one. Limited to small designs.
double friedman_exact_p(const std::vector<std::vector<double>>& blocks);

double chi_square_upper_tail(double x, int df);

// SUS items are 1..5; item 1 is index 0.
double sus_participant_score(const std::array<int, 10>& items);
SummaryStats sus_score(const std::vector<std::array<int, 10>>& responses);

double likert_median(std::vector<int> values);
std::map<Method, double> likert_medians(const std::map<Method, std::vector<int>>& responses);

struct ErrorBreakdown {
    int errors = 0;
    std::map<ErrorKind, int> counts;
    std::map<ErrorKind, double> share_pct;
    double single_point_share_pct = 0.0;
};

// Actual-phase incorrect trials only; empty when nothing is wrong.
ErrorBreakdown error_breakdown(const std::vector<TrialRecord>& trials);

}  // namespace airbraille
