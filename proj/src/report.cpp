#include "report.hpp"

#include "error.hpp"

#include <cctype>
#include <set>
#include <sstream>

namespace airbraille {
namespace {

std::map<Method, int> likert_from_json(const Json& j, const char* what) {
    std::map<Method, int> out;
    if (j.is_null()) return out;
    if (!j.is_object()) fail(ErrorCode::InvalidArgument, std::string(what) + " must map methods to 1..7");
    for (const auto& item : j.items()) {
        if (!item.value().is_number_integer()) {
            fail(ErrorCode::InvalidArgument, std::string(what) + " answers must be integers");
        }
        out[parse_method(item.key())] = item.value().get<int>();
    }
    return out;
}

Json likert_to_json(const std::map<Method, int>& m) {
    Json j = Json::object();
    for (const auto& [method, value] : m) j[std::string(method_name(method))] = value;
    return j;
}

Json friedman_json(const std::vector<std::vector<double>>& blocks) {
    if (blocks.size() < 2 || blocks.front().size() < 2) return Json();
    const FriedmanResult r = friedman_test(blocks);
    return Json{{"chi2", r.chi2}, {"df", r.df}, {"p", r.p}, {"blocks", blocks.size()}};
}

// Participants (first-appearance order) that have a value for every method.
template <typename Lookup>
std::vector<std::vector<double>> complete_blocks(const std::vector<std::string>& participants,
                                                 const std::vector<Method>& methods, Lookup lookup) {
    std::vector<std::vector<double>> blocks;
    for (const auto& p : participants) {
        std::vector<double> row;
        for (Method m : methods) {
            const auto v = lookup(p, m);
            if (!v) break;
            row.push_back(*v);
        }
        if (row.size() == methods.size()) blocks.push_back(std::move(row));
    }
    return blocks;
}

Json stats_json(const SummaryStats& s) {
    return Json{{"mean", s.mean}, {"sd", s.sd}, {"n", s.n}, {"sd_defined", s.sd_defined}};
}

}  // namespace

void Questionnaire::validate(const std::vector<Method>& methods) const {
    for (Method m : methods) {
        if (!mental_demand.count(m) || !comfort.count(m)) {
            fail(ErrorCode::InvalidArgument,
                 "questionnaire lacks Likert answers for " + std::string(method_name(m)));
        }
    }
    for (const auto* table : {&mental_demand, &comfort}) {
        for (const auto& [m, v] : *table) {
            if (v < 1 || v > 7) fail(ErrorCode::OutOfRange, "Likert answers must be in 1..7");
        }
    }
    sus_participant_score(sus);
}

Json questionnaire_to_json(const Questionnaire& q) {
    Json j;
    j["type"] = "questionnaire";
    j["participant"] = q.participant;
    j["mental_demand"] = likert_to_json(q.mental_demand);
    j["comfort"] = likert_to_json(q.comfort);
    j["sus"] = q.sus;
    return j;
}

Questionnaire questionnaire_from_json(const Json& doc, const std::string& participant) {
    if (!doc.is_object()) fail(ErrorCode::InvalidArgument, "questionnaire must be an object");
    Questionnaire q;
    q.participant = doc.contains("participant") && doc["participant"].is_string()
                        ? doc["participant"].get<std::string>()
                        : participant;
    q.mental_demand = likert_from_json(doc.value("mental_demand", Json()), "mental_demand");
    q.comfort = likert_from_json(doc.value("comfort", Json()), "comfort");
    if (!doc.contains("sus") || !doc["sus"].is_array() || doc["sus"].size() != 10) {
        fail(ErrorCode::OutOfRangeItem, "SUS answers must list exactly 10 items");
    }
    for (std::size_t i = 0; i < 10; ++i) {
        if (!doc["sus"][i].is_number_integer()) {
            fail(ErrorCode::OutOfRangeItem, "SUS items must be integers in 1..5");
        }
        q.sus[i] = doc["sus"][i].get<int>();
    }
    return q;
}

TrialRecord trial_from_json(const Json& rec, const std::string& default_participant) {
    TrialRecord t;
    t.participant = rec.contains("participant") && rec["participant"].is_string()
                        ? rec["participant"].get<std::string>()
                        : default_participant;
    if (!rec.contains("method") || !rec["method"].is_string()) {
        fail(ErrorCode::InvalidArgument, "trial record lacks a method");
    }
    t.method = parse_method(rec["method"].get<std::string>());
    t.phase = rec.contains("phase") ? parse_trial_phase(rec["phase"].get<std::string>()) : TrialPhase::Actual;
    if (!rec.contains("truth") || !rec["truth"].is_string()) {
        fail(ErrorCode::InvalidArgument, "trial record lacks a truth pattern");
    }
    t.truth = DotPattern::parse(rec["truth"].get<std::string>());
    if (rec.contains("response") && rec["response"].is_string()) {
        try {
            t.response = DotPattern::parse(rec["response"].get<std::string>());
        } catch (const Error&) {
            fail(ErrorCode::UndecodableResponse, "trial response is not a cell pattern");
        }
    } else if (rec.contains("answer") && rec["answer"].is_string() &&
               rec["answer"].get<std::string>().size() == 1 &&
               std::isdigit(static_cast<unsigned char>(rec["answer"].get<std::string>()[0]))) {
        t.response = encode_char(rec["answer"].get<std::string>()[0]);
    } else {
        fail(ErrorCode::UndecodableResponse, "trial record has no decodable response");
    }
    if (rec.contains("elapsed_s")) {
        if (!rec["elapsed_s"].is_number() || rec["elapsed_s"].get<double>() < 0.0) {
            fail(ErrorCode::InvalidArgument, "elapsed_s must be a non-negative number");
        }
        t.elapsed_s = rec["elapsed_s"].get<double>();
    }
    return t;
}

StudyData parse_session_log(const std::string& text) {
    StudyData data;
    std::istringstream in(text);
    std::string line;
    std::string participant;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json rec;
        try {
            rec = Json::parse(line);
        } catch (const nlohmann::json::exception&) {
            fail(ErrorCode::InvalidArgument, "malformed log line " + std::to_string(line_no));
        }
        const std::string type = rec.value("type", "");
        if (type == "session") {
            participant = rec.contains("config") ? rec["config"].value("participant", Json::object()).value("id", "") : "";
        } else if (type == "trial") {
            data.trials.push_back(trial_from_json(rec, participant));
        } else if (type == "questionnaire") {
            data.questionnaires.push_back(questionnaire_from_json(rec, participant));
        }
    }
    return data;
}

void append_study(StudyData& into, const StudyData& from) {
    into.trials.insert(into.trials.end(), from.trials.begin(), from.trials.end());
    into.questionnaires.insert(into.questionnaires.end(), from.questionnaires.begin(),
                               from.questionnaires.end());
}

Json analysis_report(const StudyData& data) {
    const std::vector<MethodAccuracy> accuracy = accuracy_by_method(data.trials);

    std::vector<Method> methods;
    for (const auto& a : accuracy) methods.push_back(a.method);
    std::vector<std::string> participants;
    std::set<std::string> seen;
    int actual = 0;
    // (participant, method) -> (correct, total, elapsed)
    std::map<std::pair<std::string, Method>, std::array<double, 3>> cells;
    for (const auto& t : data.trials) {
        if (t.phase != TrialPhase::Actual) continue;
        ++actual;
        if (seen.insert(t.participant).second) participants.push_back(t.participant);
        auto& c = cells[{t.participant, t.method}];
        c[0] += t.truth == t.response ? 1.0 : 0.0;
        c[1] += 1.0;
        c[2] += t.elapsed_s;
    }

    Json report;
    report["format"] = kReportFormat;
    report["participants"] = participants.size();
    report["actual_trials"] = actual;

    Json acc = Json::array();
    for (const auto& a : accuracy) {
        acc.push_back({{"method", std::string(method_name(a.method))},
                       {"participants", a.accuracy_pct.n},
                       {"accuracy_pct", stats_json(a.accuracy_pct)},
                       {"time_s", stats_json(a.time_s)}});
    }
    report["accuracy_by_method"] = acc;

    auto cell_value = [&](std::size_t index) {
        return [&, index](const std::string& p, Method m) -> std::optional<double> {
            const auto it = cells.find({p, m});
            if (it == cells.end()) return std::nullopt;
            const auto& c = it->second;
            return index == 0 ? 100.0 * c[0] / c[1] : c[2] / c[1];
        };
    };
    std::vector<std::string> q_participants;
    std::map<std::string, const Questionnaire*> q_by_participant;
    for (const auto& q : data.questionnaires) {
        if (!q_by_participant.count(q.participant)) q_participants.push_back(q.participant);
        q_by_participant[q.participant] = &q;
    }
    auto likert_value = [&](bool demand) {
        return [&, demand](const std::string& p, Method m) -> std::optional<double> {
            const auto& table = demand ? q_by_participant.at(p)->mental_demand : q_by_participant.at(p)->comfort;
            const auto it = table.find(m);
            if (it == table.end()) return std::nullopt;
            return static_cast<double>(it->second);
        };
    };
    Json fr;
    fr["accuracy"] = friedman_json(complete_blocks(participants, methods, cell_value(0)));
    fr["time"] = friedman_json(complete_blocks(participants, methods, cell_value(1)));
    fr["mental_demand"] = friedman_json(complete_blocks(q_participants, methods, likert_value(true)));
    fr["comfort"] = friedman_json(complete_blocks(q_participants, methods, likert_value(false)));
    report["friedman"] = fr;

    const ErrorBreakdown eb = error_breakdown(data.trials);
    Json ebj;
    ebj["errors"] = eb.errors;
    Json counts = Json::object();
    Json shares = Json::object();
    for (const auto& [kind, count] : eb.counts) {
        counts[std::string(error_kind_name(kind))] = count;
        shares[std::string(error_kind_name(kind))] = eb.share_pct.at(kind);
    }
    ebj["counts"] = counts;
    ebj["share_pct"] = shares;
    ebj["single_point_share_pct"] = eb.errors ? Json(eb.single_point_share_pct) : Json();
    report["error_breakdown"] = ebj;

    const ConfusionMatrix cm = confusion_matrix(data.trials, TrialPhase::Actual);
    Json cmj;
    cmj["labels"] = Json::array();
    for (char d : digit_labels()) cmj["labels"].push_back(std::string(1, d));
    cmj["counts"] = cm.counts;
    report["confusion_matrix"] = cmj;

    Json lik;
    for (const char* key : {"mental_demand", "comfort"}) {
        std::map<Method, std::vector<int>> values;
        for (const auto& q : data.questionnaires) {
            const auto& table = std::string(key) == "mental_demand" ? q.mental_demand : q.comfort;
            for (const auto& [m, v] : table) values[m].push_back(v);
        }
        Json medians = Json::object();
        for (const auto& [m, median] : likert_medians(values)) medians[std::string(method_name(m))] = median;
        lik[key] = medians;
    }
    report["likert_medians"] = lik;

    if (data.questionnaires.empty()) {
        report["sus"] = Json();
    } else {
        std::vector<std::array<int, 10>> sus;
        for (const auto& q : data.questionnaires) sus.push_back(q.sus);
        report["sus"] = stats_json(sus_score(sus));
    }
    return report;
}

std::string confusion_csv(const ConfusionMatrix& m) {
    std::ostringstream os;
    os << "truth\\response";
    for (char d : digit_labels()) os << ',' << d;
    os << '\n';
    for (std::size_t i = 0; i < m.counts.size(); ++i) {
        os << digit_labels()[i];
        for (int c : m.counts[i]) os << ',' << c;
        os << '\n';
    }
    return os.str();
}

}  // namespace airbraille
