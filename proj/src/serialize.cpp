#include "serialize.hpp"

#include "error.hpp"

#include <cstdio>
#include <initializer_list>
#include <set>
#include <sstream>

namespace airbraille {
namespace {

void check_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) fail(ErrorCode::InvalidConfig, where + " must be an object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& item : obj.items()) {
        if (!keys.count(item.key())) {
            fail(ErrorCode::InvalidConfig, "unknown key '" + item.key() + "' in " + where);
        }
    }
}

void read(const Json& obj, const char* key, double& out, const std::string& where) {
    if (!obj.contains(key)) return;
    const Json& v = obj.at(key);
    if (!v.is_number()) fail(ErrorCode::InvalidConfig, where + "." + key + " must be a number");
    out = v.get<double>();
}

void read(const Json& obj, const char* key, int& out, const std::string& where) {
    if (!obj.contains(key)) return;
    const Json& v = obj.at(key);
    if (!v.is_number_integer()) fail(ErrorCode::InvalidConfig, where + "." + key + " must be an integer");
    out = v.get<int>();
}

void read(const Json& obj, const char* key, std::uint64_t& out, const std::string& where) {
    if (!obj.contains(key)) return;
    const Json& v = obj.at(key);
    if (!v.is_number_unsigned()) fail(ErrorCode::InvalidConfig, where + "." + key + " must be a non-negative integer");
    out = v.get<std::uint64_t>();
}

void read(const Json& obj, const char* key, bool& out, const std::string& where) {
    if (!obj.contains(key)) return;
    const Json& v = obj.at(key);
    if (!v.is_boolean()) fail(ErrorCode::InvalidConfig, where + "." + key + " must be a boolean");
    out = v.get<bool>();
}

// Schedule documents are validated as data, not config.
double number(const Json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_number()) {
        fail(ErrorCode::InvalidArgument, std::string("schedule field '") + key + "' must be a number");
    }
    return obj.at(key).get<double>();
}

std::string text(const Json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_string()) {
        fail(ErrorCode::InvalidArgument, std::string("schedule field '") + key + "' must be a string");
    }
    return obj.at(key).get<std::string>();
}

std::optional<double> number_or_open(const Json& obj, const char* key) {
    if (obj.contains(key) && obj.at(key).is_string() && obj.at(key).get<std::string>() == "open") {
        return std::nullopt;
    }
    return number(obj, key);
}

Json open_or(const std::optional<double>& v) {
    if (v) return *v;
    return "open";
}

const char* mode_name(MultiPointMode m) {
    return m == MultiPointMode::Simultaneous ? "simultaneous" : "temporal-multiplex";
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

Json params_to_json(const MethodParams& p) {
    Json j;
    j["dot_on_s"] = p.dot_on_s;
    j["dot_gap_s"] = p.dot_gap_s;
    j["end_pause_s"] = p.end_pause_s;
    j["row_interval_s"] = p.row_interval_s;
    j["column_interval_s"] = p.column_interval_s;
    j["pulse_rate_hz"] = p.pulse_rate_hz;
    j["pulse_duty"] = p.pulse_duty;
    j["rotation_radius_m"] = p.rotation_radius_m;
    j["rotation_rev_per_s"] = p.rotation_rev_per_s;
    j["expansion_max_scale"] = p.expansion_max_scale;
    j["expansion_period_s"] = p.expansion_period_s;
    j["intensity_offset"] = p.intensity_offset;
    j["intensity_depth"] = p.intensity_depth;
    j["intensity_rate_hz"] = p.intensity_rate_hz;
    j["morse_pulse_s"] = p.morse_pulse_s;
    j["morse_gap_s"] = p.morse_gap_s;
    j["morse_end_pause_s"] = p.morse_end_pause_s;
    return j;
}

void params_from_json(const Json& j, MethodParams& p) {
    const std::string w = "schedule.params";
    check_keys(j,
               {"dot_on_s", "dot_gap_s", "end_pause_s", "row_interval_s", "column_interval_s",
                "pulse_rate_hz", "pulse_duty", "rotation_radius_m", "rotation_rev_per_s",
                "expansion_max_scale", "expansion_period_s", "intensity_offset", "intensity_depth",
                "intensity_rate_hz", "morse_pulse_s", "morse_gap_s", "morse_end_pause_s"},
               w);
    read(j, "dot_on_s", p.dot_on_s, w);
    read(j, "dot_gap_s", p.dot_gap_s, w);
    read(j, "end_pause_s", p.end_pause_s, w);
    read(j, "row_interval_s", p.row_interval_s, w);
    read(j, "column_interval_s", p.column_interval_s, w);
    read(j, "pulse_rate_hz", p.pulse_rate_hz, w);
    read(j, "pulse_duty", p.pulse_duty, w);
    read(j, "rotation_radius_m", p.rotation_radius_m, w);
    read(j, "rotation_rev_per_s", p.rotation_rev_per_s, w);
    read(j, "expansion_max_scale", p.expansion_max_scale, w);
    read(j, "expansion_period_s", p.expansion_period_s, w);
    read(j, "intensity_offset", p.intensity_offset, w);
    read(j, "intensity_depth", p.intensity_depth, w);
    read(j, "intensity_rate_hz", p.intensity_rate_hz, w);
    read(j, "morse_pulse_s", p.morse_pulse_s, w);
    read(j, "morse_gap_s", p.morse_gap_s, w);
    read(j, "morse_end_pause_s", p.morse_end_pause_s, w);
}

Json vec_to_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number()) {
        fail(ErrorCode::InvalidArgument, "expected a 3-vector [x, y, z]");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

void RunConfig::validate() const {
    layout.validate();
    frequencies.validate();
    schedule.validate();
    array.validate();
    if (solver.iterations < 1) fail(ErrorCode::InvalidConfig, "solver.iterations must be >= 1");
    if (!(control_rate_hz > 0.0)) fail(ErrorCode::InvalidConfig, "control_rate_hz must be positive");
    if (!(grid_resolution_m > 0.0 && grid_resolution_m <= 0.001)) {
        fail(ErrorCode::InvalidConfig, "grid resolution must lie in (0, 1 mm]");
    }
    if (!(grid_margin_m > 0.0)) fail(ErrorCode::InvalidConfig, "grid margin must be positive");
}

void apply_overrides(RunConfig& cfg, const Json& o) {
    if (o.is_null()) return;
    check_keys(o, {"layout", "frequencies_hz", "array", "solver", "control_rate_hz", "grid", "schedule", "seed"},
               "config");
    if (o.contains("layout")) {
        const Json& j = o["layout"];
        check_keys(j, {"cell_spacing_m", "plane_height_m", "mirror_x"}, "layout");
        read(j, "cell_spacing_m", cfg.layout.cell_spacing, "layout");
        read(j, "plane_height_m", cfg.layout.plane_height, "layout");
        read(j, "mirror_x", cfg.layout.mirror_x, "layout");
    }
    if (o.contains("frequencies_hz")) {
        const Json& j = o["frequencies_hz"];
        if (!j.is_array() || j.size() != kCellCount) {
            fail(ErrorCode::InvalidConfig, "frequencies_hz must list six numbers (cells 1..6)");
        }
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (!j[i].is_number()) fail(ErrorCode::InvalidConfig, "frequencies_hz entries must be numbers");
            cfg.frequencies.hz[i] = j[i].get<double>();
        }
    }
    if (o.contains("array")) {
        const Json& j = o["array"];
        check_keys(j, {"rows", "cols", "pitch_m", "element_radius_m", "carrier_hz", "sound_speed_m_s"}, "array");
        read(j, "rows", cfg.array.rows, "array");
        read(j, "cols", cfg.array.cols, "array");
        read(j, "pitch_m", cfg.array.pitch, "array");
        read(j, "element_radius_m", cfg.array.element_radius, "array");
        read(j, "carrier_hz", cfg.array.carrier_freq, "array");
        read(j, "sound_speed_m_s", cfg.array.sound_speed, "array");
    }
    if (o.contains("solver")) {
        const Json& j = o["solver"];
        check_keys(j, {"iterations", "mode"}, "solver");
        read(j, "iterations", cfg.solver.iterations, "solver");
        if (j.contains("mode")) {
            if (!j["mode"].is_string()) fail(ErrorCode::InvalidConfig, "solver.mode must be a string");
            const auto mode = j["mode"].get<std::string>();
            if (mode == "simultaneous") {
                cfg.solver.mode = MultiPointMode::Simultaneous;
            } else if (mode == "temporal-multiplex") {
                cfg.solver.mode = MultiPointMode::TemporalMultiplex;
            } else {
                fail(ErrorCode::InvalidConfig, "solver.mode must be simultaneous or temporal-multiplex");
            }
        }
    }
    read(o, "control_rate_hz", cfg.control_rate_hz, "config");
    read(o, "seed", cfg.seed, "config");
    if (o.contains("grid")) {
        const Json& j = o["grid"];
        check_keys(j, {"resolution_m", "margin_m"}, "grid");
        read(j, "resolution_m", cfg.grid_resolution_m, "grid");
        read(j, "margin_m", cfg.grid_margin_m, "grid");
    }
    if (o.contains("schedule")) {
        const Json& j = o["schedule"];
        check_keys(j, {"loop", "bounded_replay_s", "peak_amplitude", "params"}, "schedule");
        read(j, "loop", cfg.schedule.loop, "schedule");
        read(j, "peak_amplitude", cfg.schedule.peak_amplitude, "schedule");
        if (j.contains("bounded_replay_s")) {
            if (j["bounded_replay_s"].is_null()) {
                cfg.schedule.bounded_replay_s.reset();
            } else {
                double v = 0.0;
                read(j, "bounded_replay_s", v, "schedule");
                cfg.schedule.bounded_replay_s = v;
            }
        }
        if (j.contains("params")) params_from_json(j["params"], cfg.schedule.params);
    }
}

RunConfig run_config_from_json(const Json& overrides) {
    RunConfig cfg;
    apply_overrides(cfg, overrides);
    cfg.validate();
    return cfg;
}

Json run_config_to_json(const RunConfig& cfg) {
    Json j;
    j["layout"] = {{"cell_spacing_m", cfg.layout.cell_spacing},
                   {"plane_height_m", cfg.layout.plane_height},
                   {"mirror_x", cfg.layout.mirror_x}};
    j["frequencies_hz"] = Json::array();
    for (double f : cfg.frequencies.hz) j["frequencies_hz"].push_back(f);
    j["array"] = {{"rows", cfg.array.rows},
                  {"cols", cfg.array.cols},
                  {"pitch_m", cfg.array.pitch},
                  {"element_radius_m", cfg.array.element_radius},
                  {"carrier_hz", cfg.array.carrier_freq},
                  {"sound_speed_m_s", cfg.array.sound_speed}};
    j["solver"] = {{"iterations", cfg.solver.iterations}, {"mode", mode_name(cfg.solver.mode)}};
    j["control_rate_hz"] = cfg.control_rate_hz;
    j["grid"] = {{"resolution_m", cfg.grid_resolution_m}, {"margin_m", cfg.grid_margin_m}};
    Json s;
    s["loop"] = cfg.schedule.loop;
    s["bounded_replay_s"] = cfg.schedule.bounded_replay_s ? Json(*cfg.schedule.bounded_replay_s) : Json();
    s["peak_amplitude"] = cfg.schedule.peak_amplitude;
    s["params"] = params_to_json(cfg.schedule.params);
    j["schedule"] = s;
    j["seed"] = cfg.seed;
    return j;
}

Json schedule_to_json(const Schedule& s) {
    Json doc;
    doc["format"] = kScheduleFormat;
    doc["method"] = std::string(method_name(s.method));
    doc["pattern"] = s.pattern.to_string();
    doc["looping"] = s.looping;
    doc["total_duration_s"] = open_or(s.total_duration);
    doc["events"] = Json::array();
    for (const EmissionEvent& ev : s.events) {
        Json e;
        e["cell"] = ev.cell;
        e["x"] = ev.position.x;
        e["y"] = ev.position.y;
        e["z"] = ev.position.z;
        e["start_s"] = ev.start;
        e["duration_s"] = open_or(ev.duration);
        e["freq_hz"] = ev.mod_freq;
        e["amplitude"] = ev.peak_amplitude;
        if (ev.trajectory) {
            const Trajectory& t = *ev.trajectory;
            if (t.kind == Trajectory::Kind::Circle) {
                e["trajectory"] = {{"kind", "circle"}, {"radius_m", t.radius_m},
                                   {"rev_per_s", t.rev_per_s}, {"clockwise", true}};
            } else {
                e["trajectory"] = {{"kind", "radial"}, {"center", vec_to_json(t.center)},
                                   {"max_scale", t.max_scale}, {"period_s", t.period_s}};
            }
        }
        if (ev.envelope) {
            const Envelope& env = *ev.envelope;
            if (env.kind == Envelope::Kind::Square) {
                e["envelope"] = {{"kind", "square"}, {"freq_hz", env.freq_hz}, {"duty", env.duty}};
            } else {
                e["envelope"] = {{"kind", "sine"}, {"offset", env.offset}, {"depth", env.depth},
                                 {"freq_hz", env.freq_hz}};
            }
        }
        doc["events"].push_back(e);
    }
    return doc;
}

Schedule schedule_from_json(const Json& doc) {
    if (!doc.is_object()) fail(ErrorCode::InvalidArgument, "schedule document must be an object");
    if (text(doc, "format") != kScheduleFormat) {
        fail(ErrorCode::InvalidArgument, "unsupported schedule format");
    }
    Schedule s;
    s.method = parse_method(text(doc, "method"));
    s.pattern = DotPattern::parse(text(doc, "pattern"));
    if (!doc.contains("looping") || !doc["looping"].is_boolean()) {
        fail(ErrorCode::InvalidArgument, "schedule field 'looping' must be a boolean");
    }
    s.looping = doc["looping"].get<bool>();
    s.total_duration = number_or_open(doc, "total_duration_s");
    if (s.total_duration && !(*s.total_duration > 0.0)) {
        fail(ErrorCode::InvalidArgument, "total_duration_s must be positive");
    }
    if (!doc.contains("events") || !doc["events"].is_array()) {
        fail(ErrorCode::InvalidArgument, "schedule field 'events' must be an array");
    }
    double last_start = 0.0;
    for (const Json& e : doc["events"]) {
        EmissionEvent ev;
        const double cell = number(e, "cell");
        ev.cell = static_cast<int>(cell);
        if (ev.cell != cell || ev.cell < 1 || ev.cell > kCellCount) {
            fail(ErrorCode::InvalidCell, "event cell must be an integer in 1..6");
        }
        ev.position = {number(e, "x"), number(e, "y"), number(e, "z")};
        ev.start = number(e, "start_s");
        ev.duration = number_or_open(e, "duration_s");
        ev.mod_freq = number(e, "freq_hz");
        ev.peak_amplitude = number(e, "amplitude");
        if (!(ev.start >= 0.0) || ev.start < last_start) {
            fail(ErrorCode::InvalidArgument, "event starts must be non-negative and sorted");
        }
        last_start = ev.start;
        if (ev.duration && !(*ev.duration > 0.0)) {
            fail(ErrorCode::InvalidArgument, "bounded event durations must be positive");
        }
        if (!(ev.position.z > 0.0) || ev.position.z > kMaxWorkingHeight) {
            fail(ErrorCode::OutOfRange, "event position outside the 0.70 m working volume");
        }
        if (!(ev.peak_amplitude > 0.0 && ev.peak_amplitude <= 1.0)) {
            fail(ErrorCode::InvalidArgument, "event amplitude must lie in (0, 1]");
        }
        if (!(ev.mod_freq > 0.0)) fail(ErrorCode::InvalidArgument, "event freq_hz must be positive");
        if (e.contains("trajectory")) {
            const Json& t = e["trajectory"];
            Trajectory tr;
            const std::string kind = text(t, "kind");
            if (kind == "circle") {
                tr.kind = Trajectory::Kind::Circle;
                tr.radius_m = number(t, "radius_m");
                tr.rev_per_s = number(t, "rev_per_s");
            } else if (kind == "radial") {
                tr.kind = Trajectory::Kind::Radial;
                if (!t.contains("center")) fail(ErrorCode::InvalidArgument, "radial trajectory needs a center");
                tr.center = vec_from_json(t["center"]);
                tr.max_scale = number(t, "max_scale");
                tr.period_s = number(t, "period_s");
                if (!(tr.period_s > 0.0)) fail(ErrorCode::InvalidArgument, "period_s must be positive");
            } else {
                fail(ErrorCode::InvalidArgument, "unknown trajectory kind '" + kind + "'");
            }
            ev.trajectory = tr;
        }
        if (e.contains("envelope")) {
            const Json& j = e["envelope"];
            Envelope env;
            const std::string kind = text(j, "kind");
            if (kind == "square") {
                env.kind = Envelope::Kind::Square;
                env.freq_hz = number(j, "freq_hz");
                env.duty = number(j, "duty");
            } else if (kind == "sine") {
                env.kind = Envelope::Kind::Sine;
                env.offset = number(j, "offset");
                env.depth = number(j, "depth");
                env.freq_hz = number(j, "freq_hz");
            } else {
                fail(ErrorCode::InvalidArgument, "unknown envelope kind '" + kind + "'");
            }
            ev.envelope = env;
        }
        s.events.push_back(ev);
    }
    if (max_simultaneous(s) > kMaxFocalPoints) {
        fail(ErrorCode::TooManyPoints, "schedule exceeds eight simultaneous focal points");
    }
    return s;
}

Json active_points_to_json(const std::vector<ActivePoint>& points) {
    Json arr = Json::array();
    for (const auto& p : points) {
        arr.push_back({{"cell", p.cell}, {"x", p.position.x}, {"y", p.position.y}, {"z", p.position.z},
                       {"freq_hz", p.mod_freq}, {"amplitude", p.amplitude}});
    }
    return arr;
}

std::string frames_to_jsonl(const std::vector<Frame>& frames) {
    std::string out;
    for (const Frame& f : frames) {
        Json rec;
        rec["timestamp_s"] = f.timestamp;
        rec["phases"] = f.solution.phases;
        rec["amplitudes"] = f.solution.amplitudes;
        Json pts = Json::array();
        for (const auto& p : f.points) {
            pts.push_back({{"cell", p.cell}, {"x", p.position.x}, {"y", p.position.y},
                           {"z", p.position.z}, {"amplitude", p.amplitude}});
        }
        rec["points"] = pts;
        out += rec.dump();
        out += '\n';
    }
    return out;
}

std::string field_to_csv(const FieldSample& field) {
    const GridSpec& g = field.grid;
    std::ostringstream os;
    auto axis = [&](const char* name, const GridAxis& a) {
        os << "# " << name << ": " << fmt("%.9g", a.direction.x) << ',' << fmt("%.9g", a.direction.y)
           << ',' << fmt("%.9g", a.direction.z) << ',' << a.count << '\n';
    };
    os << "# airbraille.field/1\n";
    os << "# origin_m: " << fmt("%.9g", g.origin.x) << ',' << fmt("%.9g", g.origin.y) << ','
       << fmt("%.9g", g.origin.z) << '\n';
    axis("axis_u", g.u);
    axis("axis_v", g.v);
    axis("axis_w", g.w);
    os << "# resolution_m: " << fmt("%.9g", g.resolution) << '\n';
    os << "# units: positions in m; pressure in arbitrary linear units\n";
    os << "i,j,l,x_m,y_m,z_m,re,im,abs\n";
    for (int l = 0; l < g.w.count; ++l) {
        for (int j = 0; j < g.v.count; ++j) {
            for (int i = 0; i < g.u.count; ++i) {
                const Vec3 p = g.node(i, j, l);
                const auto c = field.at(i, j, l);
                os << i << ',' << j << ',' << l << ',' << fmt("%.9g", p.x) << ',' << fmt("%.9g", p.y)
                   << ',' << fmt("%.9g", p.z) << ',' << fmt("%.10g", c.real()) << ','
                   << fmt("%.10g", c.imag()) << ',' << fmt("%.10g", std::abs(c)) << '\n';
            }
        }
    }
    return os.str();
}

Json focal_metrics_to_json(const FocalMetrics& m) {
    Json doc;
    doc["peaks"] = Json::array();
    for (const auto& p : m.peaks) {
        Json e;
        e["target"] = vec_to_json(p.target);
        e["peak_position"] = vec_to_json(p.position);
        e["peak_offset_m"] = distance(p.position, p.target);
        e["peak_magnitude"] = p.magnitude;
        e["fwhm_x_m"] = p.fwhm_x ? Json(*p.fwhm_x) : Json();
        e["fwhm_y_m"] = p.fwhm_y ? Json(*p.fwhm_y) : Json();
        doc["peaks"].push_back(e);
    }
    doc["contrast_to_midpoint"] = m.contrast_to_midpoint ? Json(*m.contrast_to_midpoint) : Json();
    return doc;
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

}  // namespace airbraille
