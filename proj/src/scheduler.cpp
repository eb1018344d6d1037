#include "scheduler.hpp"

#include "error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <utility>

namespace airbraille {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Keeps sums of decimal durations on a nanosecond grid so that e.g. the
// four-dot sequence totals print as 2.2 rather than 2.2000000000000002.
double snap(double t) { return std::round(t * 1e9) / 1e9; }

void require_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        fail(ErrorCode::InvalidConfig, std::string(name) + " must be positive");
    }
}

void require_non_negative(double value, const char* name) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        fail(ErrorCode::InvalidConfig, std::string(name) + " must be non-negative");
    }
}

bool is_sequential(Method m) {
    return m == Method::PointByPoint || m == Method::RowByRow ||
           m == Method::ColumnByColumn || m == Method::MorseLike;
}

double fractional(double x) { return x - std::floor(x); }

}  // namespace

std::string_view method_name(Method method) noexcept {
    switch (method) {
        case Method::Constant: return "constant";
        case Method::PointByPoint: return "point-by-point";
        case Method::RowByRow: return "row-by-row";
        case Method::ColumnByColumn: return "column-by-column";
        case Method::Pulsating: return "pulsating";
        case Method::Rotating: return "rotating";
        case Method::Expanding: return "expanding";
        case Method::VaryingIntensity: return "varying-intensity";
        case Method::MorseLike: return "morse-like";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    std::string key;
    for (char ch : name) {
        const auto uc = static_cast<unsigned char>(ch);
        key.push_back(ch == '_' || ch == ' ' ? '-' : static_cast<char>(std::tolower(uc)));
    }
    for (Method m : kAllMethods) {
        if (key == method_name(m)) return m;
    }
    static const std::pair<const char*, Method> aliases[] = {
        {"pbp", Method::PointByPoint},   {"rbr", Method::RowByRow},
        {"cbc", Method::ColumnByColumn}, {"varying", Method::VaryingIntensity},
        {"morse", Method::MorseLike},
    };
    for (const auto& [alias, m] : aliases) {
        if (key == alias) return m;
    }
    fail(ErrorCode::UnknownMethod, "unknown stimulation method '" + std::string(name) + "'");
}

void LayoutConfig::validate() const {
    require_positive(cell_spacing, "cell_spacing");
    require_positive(plane_height, "plane_height");
    if (plane_height > kMaxWorkingHeight) {
        fail(ErrorCode::OutOfRange, "plane_height exceeds the 0.70 m working range");
    }
}

double CellFrequencies::of(int cell) const {
    if (cell < 1 || cell > kCellCount) {
        fail(ErrorCode::InvalidCell, "cell index out of range: " + std::to_string(cell));
    }
    return hz[static_cast<std::size_t>(cell - 1)];
}

void CellFrequencies::validate() const {
    for (double f : hz) {
        if (!(f >= 100.0 && f <= 200.0)) {
            fail(ErrorCode::InvalidConfig, "modulation frequencies must lie in [100, 200] Hz");
        }
    }
}

void MethodParams::validate() const {
    require_positive(dot_on_s, "dot_on_s");
    require_non_negative(dot_gap_s, "dot_gap_s");
    require_non_negative(end_pause_s, "end_pause_s");
    require_positive(row_interval_s, "row_interval_s");
    require_positive(column_interval_s, "column_interval_s");
    require_positive(pulse_rate_hz, "pulse_rate_hz");
    if (!(pulse_duty > 0.0 && pulse_duty <= 1.0)) {
        fail(ErrorCode::InvalidConfig, "pulse_duty must lie in (0, 1]");
    }
    require_non_negative(rotation_radius_m, "rotation_radius_m");
    require_positive(rotation_rev_per_s, "rotation_rev_per_s");
    if (!(expansion_max_scale >= 1.0)) {
        fail(ErrorCode::InvalidConfig, "expansion_max_scale must be >= 1");
    }
    require_positive(expansion_period_s, "expansion_period_s");
    if (!(intensity_depth >= 0.0 && intensity_offset - intensity_depth >= 0.0 &&
          intensity_offset + intensity_depth <= 1.0)) {
        fail(ErrorCode::InvalidConfig, "intensity envelope must stay within [0, 1]");
    }
    require_positive(intensity_rate_hz, "intensity_rate_hz");
    require_positive(morse_pulse_s, "morse_pulse_s");
    require_non_negative(morse_gap_s, "morse_gap_s");
    require_non_negative(morse_end_pause_s, "morse_end_pause_s");
}

void ScheduleOptions::validate() const {
    params.validate();
    if (!(peak_amplitude > 0.0 && peak_amplitude <= 1.0)) {
        fail(ErrorCode::InvalidConfig, "peak_amplitude must lie in (0, 1]");
    }
    if (bounded_replay_s) require_positive(*bounded_replay_s, "bounded_replay_s");
}

Vec3 Trajectory::offset(const Vec3& base, double t) const {
    switch (kind) {
        case Kind::Circle: {
            const double angle = -kTwoPi * rev_per_s * t;
            return {radius_m * std::cos(angle), radius_m * std::sin(angle), 0.0};
        }
        case Kind::Radial: {
            const double scale = 1.0 + (max_scale - 1.0) * fractional(t / period_s);
            const Vec3 rel = base - center;
            return {rel.x * (scale - 1.0), rel.y * (scale - 1.0), 0.0};
        }
    }
    return {};
}

double Envelope::value(double t) const {
    switch (kind) {
        case Kind::Square:
            return fractional(t * freq_hz) < duty ? 1.0 : 0.0;
        case Kind::Sine:
            return offset + depth * std::sin(kTwoPi * freq_hz * t);
    }
    return 1.0;
}

Vec3 cell_position(int cell, const LayoutConfig& layout) {
    if (cell < 1 || cell > kCellCount) {
        fail(ErrorCode::InvalidCell, "cell index out of range: " + std::to_string(cell));
    }
    const double half = layout.cell_spacing / 2.0;
    double x = cell <= 3 ? -half : half;
    if (layout.mirror_x) x = -x;
    const int row = (cell - 1) % 3;
    const double y = layout.cell_spacing * (1 - row);
    return {x, y, layout.plane_height};
}

Vec3 grid_center(const LayoutConfig& layout) { return {0.0, 0.0, layout.plane_height}; }

Schedule make_schedule(DotPattern pattern, Method method, const LayoutConfig& layout,
                       const CellFrequencies& freqs, const ScheduleOptions& opts) {
    layout.validate();
    freqs.validate();
    opts.validate();
    if (pattern.empty()) {
        fail(ErrorCode::EmptyPattern, "cannot schedule an empty dot pattern");
    }

    const MethodParams& p = opts.params;
    Schedule s;
    s.method = method;
    s.pattern = pattern;
    s.looping = is_sequential(method) && opts.loop;

    auto make_event = [&](int cell, double start, std::optional<double> duration) {
        EmissionEvent ev;
        ev.cell = cell;
        ev.position = cell_position(cell, layout);
        ev.start = snap(start);
        if (duration) duration = snap(*duration);
        ev.duration = duration;
        ev.mod_freq = freqs.of(cell);
        ev.peak_amplitude = opts.peak_amplitude;
        return ev;
    };

    const std::vector<int> cells = pattern.cells();

    switch (method) {
        case Method::Constant:
        case Method::Pulsating:
        case Method::Rotating:
        case Method::Expanding:
        case Method::VaryingIntensity: {
            Vec3 centroid;
            for (int cell : cells) centroid = centroid + cell_position(cell, layout);
            centroid = centroid * (1.0 / static_cast<double>(cells.size()));
            for (int cell : cells) {
                EmissionEvent ev = make_event(cell, 0.0, opts.bounded_replay_s);
                if (method == Method::Pulsating) {
                    Envelope env;
                    env.kind = Envelope::Kind::Square;
                    env.freq_hz = p.pulse_rate_hz;
                    env.duty = p.pulse_duty;
                    ev.envelope = env;
                } else if (method == Method::VaryingIntensity) {
                    Envelope env;
                    env.kind = Envelope::Kind::Sine;
                    env.freq_hz = p.intensity_rate_hz;
                    env.offset = p.intensity_offset;
                    env.depth = p.intensity_depth;
                    ev.envelope = env;
                } else if (method == Method::Rotating) {
                    Trajectory tr;
                    tr.kind = Trajectory::Kind::Circle;
                    tr.radius_m = p.rotation_radius_m;
                    tr.rev_per_s = p.rotation_rev_per_s;
                    ev.trajectory = tr;
                } else if (method == Method::Expanding) {
                    Trajectory tr;
                    tr.kind = Trajectory::Kind::Radial;
                    tr.center = centroid;
                    tr.max_scale = p.expansion_max_scale;
                    tr.period_s = p.expansion_period_s;
                    ev.trajectory = tr;
                }
                s.events.push_back(ev);
            }
            if (opts.bounded_replay_s) s.total_duration = snap(*opts.bounded_replay_s);
            break;
        }
        case Method::PointByPoint: {
            const double step = p.dot_on_s + p.dot_gap_s;
            for (std::size_t i = 0; i < cells.size(); ++i) {
                s.events.push_back(make_event(cells[i], static_cast<double>(i) * step, p.dot_on_s));
            }
            s.total_duration =
                snap(static_cast<double>(cells.size() - 1) * step + p.dot_on_s + p.end_pause_s);
            break;
        }
        case Method::RowByRow: {
            // Four-cell characters span two rows; anything touching cells 3 or
            // 6 spans three. Empty rows keep their silent slot.
            const int rows = (pattern.contains(3) || pattern.contains(6)) ? 3 : 2;
            for (int row = 0; row < rows; ++row) {
                for (int cell : {row + 1, row + 4}) {
                    if (pattern.contains(cell)) {
                        s.events.push_back(make_event(cell, row * p.row_interval_s, p.row_interval_s));
                    }
                }
            }
            s.total_duration = snap(rows * p.row_interval_s);
            break;
        }
        case Method::ColumnByColumn: {
            for (int column = 0; column < 2; ++column) {
                for (int cell = column * 3 + 1; cell <= column * 3 + 3; ++cell) {
                    if (pattern.contains(cell)) {
                        s.events.push_back(
                            make_event(cell, column * p.column_interval_s, p.column_interval_s));
                    }
                }
            }
            s.total_duration = snap(2 * p.column_interval_s);
            break;
        }
        case Method::MorseLike: {
            const double step = p.morse_pulse_s + p.morse_gap_s;
            const Vec3 center = grid_center(layout);
            for (int cell = 1; cell <= kCellCount; ++cell) {
                if (!pattern.contains(cell)) continue;
                EmissionEvent ev = make_event(cell, (cell - 1) * step, p.morse_pulse_s);
                ev.position = center;
                s.events.push_back(ev);
            }
            s.total_duration = snap((kCellCount - 1) * step + p.morse_pulse_s + p.morse_end_pause_s);
            break;
        }
    }

    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const EmissionEvent& a, const EmissionEvent& b) { return a.start < b.start; });
    if (max_simultaneous(s) > kMaxFocalPoints) {
        fail(ErrorCode::TooManyPoints, "schedule exceeds eight simultaneous focal points");
    }
    return s;
}

std::vector<ActivePoint> sample_schedule(const Schedule& schedule, double t) {
    std::vector<ActivePoint> out;
    if (t < 0.0 || !std::isfinite(t)) return out;

    double local = t;
    if (schedule.total_duration) {
        if (schedule.looping) {
            local = std::fmod(t, *schedule.total_duration);
        } else if (t >= *schedule.total_duration) {
            return out;
        }
    }

    for (const EmissionEvent& ev : schedule.events) {
        if (local < ev.start) continue;
        if (ev.duration && local >= ev.start + *ev.duration) continue;
        const double since = local - ev.start;
        double amplitude =
            ev.peak_amplitude * 0.5 * (1.0 - std::cos(kTwoPi * ev.mod_freq * since));
        if (ev.envelope) amplitude *= ev.envelope->value(since);
        Vec3 pos = ev.position;
        if (ev.trajectory) pos = pos + ev.trajectory->offset(ev.position, since);
        out.push_back(ActivePoint{ev.cell, pos, ev.mod_freq, amplitude});
    }
    return out;
}

int max_simultaneous(const Schedule& schedule) {
    // +1 at starts, -1 at ends; ends sort before starts at equal times because
    // intervals are half-open.
    std::vector<std::pair<double, int>> edges;
    for (const EmissionEvent& ev : schedule.events) {
        edges.emplace_back(ev.start, +1);
        if (ev.duration) edges.emplace_back(ev.start + *ev.duration, -1);
    }
    std::sort(edges.begin(), edges.end());
    int active = 0;
    int peak = 0;
    for (const auto& [time, delta] : edges) {
        active += delta;
        peak = std::max(peak, active);
    }
    return peak;
}

}  // namespace airbraille
