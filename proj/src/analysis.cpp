#include "analysis.hpp"

#include "error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace airbraille {
namespace {

int digit_index(DotPattern pattern, const char* what) {
    const auto d = decode_pattern(pattern, Alphabet::DigitsOnly);
    if (!d) {
        fail(ErrorCode::UndecodableResponse,
             std::string(what) + " pattern {" + pattern.to_string() + "} is not a digit");
    }
    return *d - '0';
}

void validate_blocks(const std::vector<std::vector<double>>& blocks) {
    if (blocks.size() < 2) fail(ErrorCode::DegenerateInput, "Friedman test needs at least two blocks");
    const std::size_t k = blocks.front().size();
    if (k < 2) fail(ErrorCode::DegenerateInput, "Friedman test needs at least two treatments");
    for (const auto& row : blocks) {
        if (row.size() != k) fail(ErrorCode::DegenerateInput, "Friedman blocks must have equal length");
        for (double v : row) {
            if (!std::isfinite(v)) fail(ErrorCode::DegenerateInput, "Friedman values must be finite");
        }
    }
}

struct RankedBlocks {
    std::vector<std::vector<double>> ranks;
    double tie_sum = 0.0;  // sum over tie groups of (t^3 - t)
};

RankedBlocks rank_blocks(const std::vector<std::vector<double>>& blocks) {
    RankedBlocks out;
    for (const auto& row : blocks) {
        out.ranks.push_back(average_ranks(row));
        std::vector<double> sorted = row;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size();) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            const auto t = static_cast<double>(j - i);
            out.tie_sum += t * t * t - t;
            i = j;
        }
    }
    return out;
}

double rank_sum_squares(const std::vector<std::vector<double>>& ranks) {
    const std::size_t k = ranks.front().size();
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double r = 0.0;
        for (const auto& row : ranks) r += row[j];
        total += r * r;
    }
    return total;
}

double friedman_statistic(double rank_sq, double tie_sum, double n, double k) {
    const double denom = 1.0 - tie_sum / (n * (k * k * k - k));
    if (denom <= 1e-12) return 0.0;
    const double raw = 12.0 / (n * k * (k + 1.0)) * rank_sq - 3.0 * n * (k + 1.0);
    return std::max(0.0, raw / denom);
}

}  // namespace

std::string_view trial_phase_name(TrialPhase phase) noexcept {
    return phase == TrialPhase::Training ? "training" : "actual";
}

TrialPhase parse_trial_phase(std::string_view name) {
    if (name == "training") return TrialPhase::Training;
    if (name == "actual") return TrialPhase::Actual;
    fail(ErrorCode::InvalidArgument, "unknown trial phase '" + std::string(name) + "'");
}

std::string_view error_kind_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Correct: return "Correct";
        case ErrorKind::SingleFalseNegative: return "SingleFalseNegative";
        case ErrorKind::SingleFalsePositive: return "SingleFalsePositive";
        case ErrorKind::SubstitutedPoint: return "SubstitutedPoint";
        case ErrorKind::MultipleOmission: return "MultipleOmission";
        case ErrorKind::Other: return "Other";
    }
    return "Other";
}

ErrorClass classify_error(DotPattern truth, DotPattern response) {
    const PatternDiff diff = pattern_diff(truth, response);
    ErrorClass c;
    c.missing = diff.missing.size();
    c.extra = diff.extra.size();
    if (c.missing == 0 && c.extra == 0) {
        c.kind = ErrorKind::Correct;
    } else if (c.missing == 1 && c.extra == 0) {
        c.kind = ErrorKind::SingleFalseNegative;
    } else if (c.missing == 0 && c.extra == 1) {
        c.kind = ErrorKind::SingleFalsePositive;
    } else if (c.missing == 1 && c.extra == 1) {
        c.kind = ErrorKind::SubstitutedPoint;
    } else if (c.missing >= 2 && c.extra == 0) {
        c.kind = ErrorKind::MultipleOmission;
    } else {
        c.kind = ErrorKind::Other;
    }
    return c;
}

int ConfusionMatrix::total() const {
    int sum = 0;
    for (const auto& row : counts) sum += std::accumulate(row.begin(), row.end(), 0);
    return sum;
}

int ConfusionMatrix::correct() const {
    int sum = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) sum += counts[i][i];
    return sum;
}

ConfusionMatrix confusion_matrix(const std::vector<TrialRecord>& trials,
                                 std::optional<TrialPhase> phase) {
    ConfusionMatrix m;
    for (const auto& t : trials) {
        if (phase && t.phase != *phase) continue;
        const int row = digit_index(t.truth, "truth");
        const int col = digit_index(t.response, "response");
        ++m.counts[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
    }
    return m;
}

SummaryStats summarize(const std::vector<double>& values) {
    SummaryStats s;
    s.n = static_cast<int>(values.size());
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / s.n;
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / (s.n - 1));
        s.sd_defined = true;
    }
    return s;
}

std::vector<MethodAccuracy> accuracy_by_method(const std::vector<TrialRecord>& trials) {
    // method -> participant -> (correct, total, elapsed sum), participants in
    // first-appearance order for a stable reduction order.
    struct Tally {
        int correct = 0;
        int total = 0;
        double elapsed = 0.0;
    };
    std::map<Method, std::vector<std::pair<std::string, Tally>>> tallies;
    for (const auto& t : trials) {
        if (t.phase != TrialPhase::Actual) continue;
        auto& rows = tallies[t.method];
        auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.first == t.participant; });
        if (it == rows.end()) {
            rows.emplace_back(t.participant, Tally{});
            it = std::prev(rows.end());
        }
        it->second.total += 1;
        it->second.correct += t.truth == t.response ? 1 : 0;
        it->second.elapsed += t.elapsed_s;
    }
    if (tallies.empty()) fail(ErrorCode::EmptyInput, "no actual-phase trials to analyse");

    std::vector<MethodAccuracy> out;
    for (const auto& [m, rows] : tallies) {
        std::vector<double> acc;
        std::vector<double> time;
        for (const auto& [participant, tally] : rows) {
            acc.push_back(100.0 * tally.correct / tally.total);
            time.push_back(tally.elapsed / tally.total);
        }
        out.push_back({m, summarize(acc), summarize(time)});
    }
    return out;
}

std::vector<double> average_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t) ranks[order[t]] = avg;
        i = j;
    }
    return ranks;
}

double chi_square_upper_tail(double x, int df) {
    if (df < 1) fail(ErrorCode::InvalidArgument, "chi-square degrees of freedom must be >= 1");
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(df / 2.0, x / 2.0);
}

FriedmanResult friedman_test(const std::vector<std::vector<double>>& blocks) {
    validate_blocks(blocks);
    const auto n = static_cast<double>(blocks.size());
    const auto k = static_cast<double>(blocks.front().size());
    const RankedBlocks ranked = rank_blocks(blocks);
    FriedmanResult r;
    r.df = static_cast<int>(blocks.front().size()) - 1;
    // Every block fully tied: no evidence of any treatment difference.
    r.chi2 = friedman_statistic(rank_sum_squares(ranked.ranks), ranked.tie_sum, n, k);
    r.p = chi_square_upper_tail(r.chi2, r.df);
    return r;
}

double friedman_exact_p(const std::vector<std::vector<double>>& blocks) {
    validate_blocks(blocks);
    const RankedBlocks ranked = rank_blocks(blocks);
    const std::size_t k = blocks.front().size();

    // Distinct arrangements of each block's ranks; ties make some of the k!
    // orderings coincide, each with equal multiplicity.
    std::vector<std::vector<std::vector<double>>> arrangements;
    double combos = 1.0;
    for (const auto& row : ranked.ranks) {
        std::vector<double> perm = row;
        std::sort(perm.begin(), perm.end());
        std::vector<std::vector<double>> distinct;
        do {
            distinct.push_back(perm);
        } while (std::next_permutation(perm.begin(), perm.end()));
        combos *= static_cast<double>(distinct.size());
        arrangements.push_back(std::move(distinct));
    }
    if (combos > 2e7) {
        fail(ErrorCode::InvalidArgument, "design too large for exact permutation enumeration");
    }

    const double observed = rank_sum_squares(ranked.ranks);
    std::vector<double> column(k, 0.0);
    double hits = 0.0;
    double total = 0.0;
    auto recurse = [&](auto&& self, std::size_t block) -> void {
        if (block == arrangements.size()) {
            double sq = 0.0;
            for (double c : column) sq += c * c;
            total += 1.0;
            if (sq >= observed - 1e-9) hits += 1.0;
            return;
        }
        for (const auto& arr : arrangements[block]) {
            for (std::size_t j = 0; j < k; ++j) column[j] += arr[j];
            self(self, block + 1);
            for (std::size_t j = 0; j < k; ++j) column[j] -= arr[j];
        }
    };
    recurse(recurse, 0);
    return hits / total;
}

double sus_participant_score(const std::array<int, 10>& items) {
    int sum = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const int x = items[i];
        if (x < 1 || x > 5) {
            fail(ErrorCode::OutOfRangeItem, "SUS item " + std::to_string(i + 1) + " must be in 1..5");
        }
        // Items 1,3,5,... are positively worded.
        sum += (i % 2 == 0) ? x - 1 : 5 - x;
    }
    return sum * 2.5;
}

SummaryStats sus_score(const std::vector<std::array<int, 10>>& responses) {
    if (responses.empty()) fail(ErrorCode::EmptyInput, "no SUS responses");
    std::vector<double> scores;
    for (const auto& r : responses) scores.push_back(sus_participant_score(r));
    return summarize(scores);
}

double likert_median(std::vector<int> values) {
    if (values.empty()) fail(ErrorCode::EmptyInput, "no Likert responses");
    for (int v : values) {
        if (v < 1 || v > 7) fail(ErrorCode::OutOfRange, "Likert responses must be in 1..7");
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return (values[mid - 1] + values[mid]) / 2.0;
}

std::map<Method, double> likert_medians(const std::map<Method, std::vector<int>>& responses) {
    std::map<Method, double> out;
    for (const auto& [method, values] : responses) out[method] = likert_median(values);
    return out;
}

ErrorBreakdown error_breakdown(const std::vector<TrialRecord>& trials) {
    ErrorBreakdown b;
    for (const auto& t : trials) {
        if (t.phase != TrialPhase::Actual) continue;
        const ErrorClass c = classify_error(t.truth, t.response);
        if (c.kind == ErrorKind::Correct) continue;
        ++b.errors;
        ++b.counts[c.kind];
    }
    if (b.errors == 0) return b;
    for (const auto& [kind, count] : b.counts) b.share_pct[kind] = 100.0 * count / b.errors;
    const int single = (b.counts.count(ErrorKind::SingleFalseNegative) ? b.counts[ErrorKind::SingleFalseNegative] : 0) +
                       (b.counts.count(ErrorKind::SingleFalsePositive) ? b.counts[ErrorKind::SingleFalsePositive] : 0);
    b.single_point_share_pct = 100.0 * single / b.errors;
    return b;
}

}  // namespace airbraille
