#include "acoustics.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <thread>

namespace airbraille {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kDirectivityTableSize = 8192;
constexpr std::size_t kMaxCachedPointSets = 4096;

double wrap_phase(double phase) {
    double w = std::fmod(phase, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0;
    return w;
}

bool nearly(const Vec3& a, const Vec3& b) { return distance(a, b) < 1e-9; }

// Distances from every transducer (rows) to every target (columns).
std::vector<double> distance_matrix(const std::vector<WeightedTarget>& targets,
                                    const ArrayConfig& cfg) {
    const int n = cfg.transducer_count();
    const std::size_t m = targets.size();
    std::vector<double> d(static_cast<std::size_t>(n) * m);
    for (int j = 0; j < n; ++j) {
        const Vec3 tp = cfg.transducer_position(j);
        for (std::size_t t = 0; t < m; ++t) {
            d[static_cast<std::size_t>(j) * m + t] = distance(tp, targets[t].position);
        }
    }
    return d;
}

std::vector<double> backpropagate(const std::vector<WeightedTarget>& targets,
                                  const std::vector<double>& focal_phases,
                                  const std::vector<double>& dist, const ArrayConfig& cfg) {
    const double k = cfg.wavenumber();
    const int n = cfg.transducer_count();
    const std::size_t m = targets.size();
    std::vector<double> phases(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t t = 0; t < m; ++t) {
            const double d = dist[static_cast<std::size_t>(j) * m + t];
            acc += targets[t].weight * std::polar(1.0 / d, focal_phases[t] - k * d);
        }
        phases[static_cast<std::size_t>(j)] = wrap_phase(std::arg(acc));
    }
    return phases;
}

void validate_targets(const std::vector<WeightedTarget>& targets) {
    if (targets.empty()) fail(ErrorCode::InvalidArgument, "at least one focal target is required");
    if (targets.size() > static_cast<std::size_t>(kMaxFocalPoints)) {
        fail(ErrorCode::TooManyPoints, "at most eight focal points can be rendered");
    }
    bool any_weight = false;
    for (const auto& t : targets) {
        check_working_volume(t.position);
        if (!(t.weight >= 0.0) || !std::isfinite(t.weight)) {
            fail(ErrorCode::InvalidArgument, "target weights must be finite and non-negative");
        }
        any_weight = any_weight || t.weight > 0.0;
    }
    if (!any_weight) fail(ErrorCode::InvalidArgument, "at least one target weight must be positive");
}

}  // namespace

double ArrayConfig::wavenumber() const { return kTwoPi / wavelength(); }

Vec3 ArrayConfig::transducer_position(int index) const {
    const int row = index / cols;
    const int col = index % cols;
    const double x = (col - (cols - 1) / 2.0) * pitch;
    const double y = (row - (rows - 1) / 2.0) * pitch;
    return {x, y, 0.0};
}

int ArrayConfig::mirror_x_index(int index) const {
    const int row = index / cols;
    const int col = index % cols;
    return row * cols + (cols - 1 - col);
}

void ArrayConfig::validate() const {
    if (rows < 1 || cols < 1) fail(ErrorCode::InvalidConfig, "array grid must be at least 1x1");
    if (!(pitch > 0.0 && element_radius > 0.0 && carrier_freq > 0.0 && sound_speed > 0.0)) {
        fail(ErrorCode::InvalidConfig, "array pitch, radius, carrier and sound speed must be positive");
    }
    if (2.0 * element_radius > pitch) {
        fail(ErrorCode::InvalidConfig, "transducer elements overlap: 2*radius exceeds pitch");
    }
}

double piston_directivity_exact(double ka, double sin_theta) {
    const double x = ka * sin_theta;
    if (std::abs(x) < 1e-8) return 1.0;
    return 2.0 * std::cyl_bessel_j(1.0, x) / x;
}

PistonDirectivity::PistonDirectivity(const ArrayConfig& cfg)
    : ka_(cfg.wavenumber() * cfg.element_radius), table_(kDirectivityTableSize + 1) {
    for (std::size_t i = 0; i <= kDirectivityTableSize; ++i) {
        table_[i] = piston_directivity_exact(ka_, static_cast<double>(i) / kDirectivityTableSize);
    }
}

double PistonDirectivity::operator()(double sin_theta) const {
    const double s = std::clamp(sin_theta, 0.0, 1.0) * kDirectivityTableSize;
    const auto i = std::min(static_cast<std::size_t>(s), kDirectivityTableSize - 1);
    const double frac = s - static_cast<double>(i);
    return table_[i] + frac * (table_[i + 1] - table_[i]);
}

void check_working_volume(const Vec3& target) {
    if (!std::isfinite(target.x) || !std::isfinite(target.y) || !std::isfinite(target.z)) {
        fail(ErrorCode::OutOfRange, "target coordinates must be finite");
    }
    if (!(target.z > 0.0) || target.z > kMaxWorkingHeight) {
        fail(ErrorCode::OutOfRange, "target height must lie in (0, 0.70] m above the array");
    }
}

PhaseSolution solve_single(const Vec3& target, const ArrayConfig& cfg) {
    cfg.validate();
    check_working_volume(target);
    const double k = cfg.wavenumber();
    const int n = cfg.transducer_count();
    PhaseSolution sol;
    sol.phases.resize(static_cast<std::size_t>(n));
    sol.amplitudes.assign(static_cast<std::size_t>(n), 1.0);
    for (int j = 0; j < n; ++j) {
        const double d = distance(cfg.transducer_position(j), target);
        sol.phases[static_cast<std::size_t>(j)] = wrap_phase(-k * d);
    }
    return sol;
}

std::vector<double> backpropagate_phases(const std::vector<WeightedTarget>& targets,
                                         const std::vector<double>& focal_phases,
                                         const ArrayConfig& cfg) {
    if (focal_phases.size() != targets.size()) {
        fail(ErrorCode::InvalidArgument, "one focal phase per target is required");
    }
    return backpropagate(targets, focal_phases, distance_matrix(targets, cfg), cfg);
}

MultiSolveDetail solve_multi_detailed(const std::vector<WeightedTarget>& targets,
                                      const ArrayConfig& cfg, int iterations) {
    cfg.validate();
    validate_targets(targets);
    if (iterations < 1) fail(ErrorCode::InvalidArgument, "iterations must be at least 1");

    const double k = cfg.wavenumber();
    const std::size_t m = targets.size();
    const auto n = static_cast<std::size_t>(cfg.transducer_count());
    const std::vector<double> dist = distance_matrix(targets, cfg);
    const PistonDirectivity directivity(cfg);

    // Directivity factor per transducer/target pair, fixed across iterations.
    std::vector<double> gain(n * m);
    for (std::size_t j = 0; j < n; ++j) {
        const Vec3 tp = cfg.transducer_position(static_cast<int>(j));
        for (std::size_t t = 0; t < m; ++t) {
            const double d = dist[j * m + t];
            const Vec3 r = targets[t].position - tp;
            const double sin_theta = std::sqrt(r.x * r.x + r.y * r.y) / d;
            gain[j * m + t] = directivity(sin_theta) / d;
        }
    }

    MultiSolveDetail out;
    std::vector<double> psi(m, 0.0);
    std::vector<double> phases;
    for (int it = 0; it < iterations; ++it) {
        phases = backpropagate(targets, psi, dist, cfg);
        out.focal_phases = psi;
        for (std::size_t t = 0; t < m; ++t) {
            std::complex<double> field{0.0, 0.0};
            for (std::size_t j = 0; j < n; ++j) {
                field += std::polar(gain[j * m + t], k * dist[j * m + t] + phases[j]);
            }
            psi[t] = std::arg(field);
        }
    }
    out.solution.phases = std::move(phases);
    out.solution.amplitudes.assign(n, 1.0);
    return out;
}

PhaseSolution solve_multi(const std::vector<WeightedTarget>& targets, const ArrayConfig& cfg,
                          int iterations) {
    return solve_multi_detailed(targets, cfg, iterations).solution;
}

std::size_t GridSpec::node_count() const {
    return static_cast<std::size_t>(u.count) * static_cast<std::size_t>(v.count) *
           static_cast<std::size_t>(w.count);
}

Vec3 GridSpec::node(int i, int j, int l) const {
    return origin + u.direction * (resolution * i) + v.direction * (resolution * j) +
           w.direction * (resolution * l);
}

void GridSpec::validate() const {
    if (!(resolution > 0.0) || !std::isfinite(resolution)) {
        fail(ErrorCode::InvalidArgument, "grid resolution must be positive");
    }
    for (const GridAxis* axis : {&u, &v, &w}) {
        if (axis->count < 1) fail(ErrorCode::InvalidArgument, "grid axis counts must be >= 1");
        if (std::abs(axis->direction.norm() - 1.0) > 1e-9) {
            fail(ErrorCode::InvalidArgument, "grid axis directions must be unit vectors");
        }
    }
}

GridSpec GridSpec::plane(const Vec3& center, double half_width_x, double half_width_y,
                         double resolution) {
    GridSpec g;
    g.resolution = resolution;
    const int half_x = static_cast<int>(std::round(half_width_x / resolution));
    const int half_y = static_cast<int>(std::round(half_width_y / resolution));
    g.u.count = 2 * half_x + 1;
    g.v.count = 2 * half_y + 1;
    g.origin = {center.x - half_x * resolution, center.y - half_y * resolution, center.z};
    return g;
}

std::complex<double> FieldSample::at(int i, int j, int l) const {
    const std::size_t idx =
        (static_cast<std::size_t>(l) * static_cast<std::size_t>(grid.v.count) +
         static_cast<std::size_t>(j)) * static_cast<std::size_t>(grid.u.count) +
        static_cast<std::size_t>(i);
    return pressure[idx];
}

std::complex<double> pressure_at(const Vec3& point, const PhaseSolution& sol, const ArrayConfig& cfg,
                                 const PistonDirectivity& directivity) {
    const double k = cfg.wavenumber();
    const int n = cfg.transducer_count();
    std::complex<double> p{0.0, 0.0};
    for (int j = 0; j < n; ++j) {
        const auto idx = static_cast<std::size_t>(j);
        if (sol.amplitudes[idx] == 0.0) continue;
        const Vec3 r = point - cfg.transducer_position(j);
        const double lateral2 = r.x * r.x + r.y * r.y;
        const double d = std::sqrt(lateral2 + r.z * r.z);
        const double sin_theta = std::sqrt(lateral2) / d;
        p += std::polar(sol.amplitudes[idx] * directivity(sin_theta) / d, k * d + sol.phases[idx]);
    }
    return p;
}

FieldSample evaluate_field(const PhaseSolution& sol, const ArrayConfig& cfg, const GridSpec& grid,
                           const FieldOptions& opts) {
    cfg.validate();
    grid.validate();
    const auto n = static_cast<std::size_t>(cfg.transducer_count());
    if (sol.phases.size() != n || sol.amplitudes.size() != n) {
        fail(ErrorCode::InvalidArgument, "phase solution does not match the transducer count");
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(sol.phases[j]) || !std::isfinite(sol.amplitudes[j])) {
            fail(ErrorCode::InvalidArgument, "phase solution contains non-finite values");
        }
    }

    const PistonDirectivity directivity(cfg);
    FieldSample field;
    field.grid = grid;
    const std::size_t total = grid.node_count();
    field.pressure.resize(total);

    const int nu = grid.u.count;
    const int nv = grid.v.count;
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t idx = begin; idx < end; ++idx) {
            const int i = static_cast<int>(idx % static_cast<std::size_t>(nu));
            const int j = static_cast<int>((idx / static_cast<std::size_t>(nu)) % static_cast<std::size_t>(nv));
            const int l = static_cast<int>(idx / (static_cast<std::size_t>(nu) * static_cast<std::size_t>(nv)));
            field.pressure[idx] = pressure_at(grid.node(i, j, l), sol, cfg, directivity);
        }
    };

    unsigned threads = opts.threads ? opts.threads : std::max(1U, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, total / 256)));
    if (threads <= 1) {
        work(0, total);
        return field;
    }
    // Each node is written by exactly one worker, so results do not depend on
    // the thread count.
    std::vector<std::jthread> pool;
    const std::size_t chunk = (total + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(total, begin + chunk);
        if (begin < end) pool.emplace_back(work, begin, end);
    }
    return field;
}

namespace {

// Distance from peak to the half-maximum crossing along one grid axis, or
// nullopt if the crossing is off the grid.
std::optional<double> half_width(const FieldSample& field, int pi, int pj, int di, int dj,
                                 double half) {
    int i = pi;
    int j = pj;
    double prev = std::abs(field.at(i, j));
    for (int step = 1;; ++step) {
        i += di;
        j += dj;
        if (i < 0 || j < 0 || i >= field.grid.u.count || j >= field.grid.v.count) return std::nullopt;
        const double cur = std::abs(field.at(i, j));
        if (cur < half) {
            const double frac = (prev - half) / (prev - cur);
            return (step - 1 + frac) * field.grid.resolution;
        }
        prev = cur;
    }
}

double interpolated_magnitude(const FieldSample& field, const Vec3& point) {
    const GridSpec& g = field.grid;
    const double fx = (point.x - g.origin.x) / g.resolution;
    const double fy = (point.y - g.origin.y) / g.resolution;
    const int i0 = std::clamp(static_cast<int>(std::floor(fx)), 0, std::max(0, g.u.count - 2));
    const int j0 = std::clamp(static_cast<int>(std::floor(fy)), 0, std::max(0, g.v.count - 2));
    const int i1 = std::min(i0 + 1, g.u.count - 1);
    const int j1 = std::min(j0 + 1, g.v.count - 1);
    const double tx = std::clamp(fx - i0, 0.0, 1.0);
    const double ty = std::clamp(fy - j0, 0.0, 1.0);
    const double a = std::abs(field.at(i0, j0));
    const double b = std::abs(field.at(i1, j0));
    const double c = std::abs(field.at(i0, j1));
    const double d = std::abs(field.at(i1, j1));
    return (1 - ty) * ((1 - tx) * a + tx * b) + ty * ((1 - tx) * c + tx * d);
}

}  // namespace

FocalMetrics focal_metrics(const FieldSample& field, const std::vector<Vec3>& targets,
                           const ArrayConfig& cfg) {
    const GridSpec& g = field.grid;
    g.validate();
    if (!nearly(g.u.direction, {1, 0, 0}) || !nearly(g.v.direction, {0, 1, 0}) || g.w.count != 1) {
        fail(ErrorCode::InvalidArgument, "focal metrics need an x/y-aligned planar grid");
    }
    if (g.resolution > 0.001 + 1e-12) {
        fail(ErrorCode::InvalidArgument, "focal metrics need a grid resolution of 1 mm or finer");
    }
    if (field.pressure.size() != g.node_count()) {
        fail(ErrorCode::InvalidArgument, "field sample size does not match its grid");
    }
    if (targets.empty()) fail(ErrorCode::InvalidArgument, "at least one target is required");

    const double search_radius = cfg.wavelength();
    FocalMetrics metrics;
    for (const Vec3& target : targets) {
        int best_i = -1;
        int best_j = -1;
        double best = 0.0;
        for (int j = 0; j < g.v.count; ++j) {
            for (int i = 0; i < g.u.count; ++i) {
                if (distance(g.node(i, j), target) > search_radius) continue;
                const double mag = std::abs(field.at(i, j));
                if (mag > best) {
                    best = mag;
                    best_i = i;
                    best_j = j;
                }
            }
        }
        if (best_i < 0 || !(best > 0.0)) {
            fail(ErrorCode::PeakNotFound, "no field maximum within one wavelength of a target");
        }
        for (int dj = -1; dj <= 1; ++dj) {
            for (int di = -1; di <= 1; ++di) {
                const int i = best_i + di;
                const int j = best_j + dj;
                if ((di == 0 && dj == 0) || i < 0 || j < 0 || i >= g.u.count || j >= g.v.count) continue;
                if (std::abs(field.at(i, j)) > best) {
                    fail(ErrorCode::PeakNotFound, "no local maximum within one wavelength of a target");
                }
            }
        }
        FocalPeak peak;
        peak.target = target;
        peak.position = g.node(best_i, best_j);
        peak.magnitude = best;
        const double half = best / 2.0;
        const auto right = half_width(field, best_i, best_j, +1, 0, half);
        const auto left = half_width(field, best_i, best_j, -1, 0, half);
        const auto up = half_width(field, best_i, best_j, 0, +1, half);
        const auto down = half_width(field, best_i, best_j, 0, -1, half);
        if (left && right) peak.fwhm_x = *left + *right;
        if (up && down) peak.fwhm_y = *up + *down;
        metrics.peaks.push_back(peak);
    }
    if (targets.size() == 2) {
        const Vec3 mid = (targets[0] + targets[1]) * 0.5;
        const double weakest = std::min(metrics.peaks[0].magnitude, metrics.peaks[1].magnitude);
        metrics.contrast_to_midpoint = interpolated_magnitude(field, mid) / weakest;
    }
    return metrics;
}

std::size_t frame_count(double t0, double t1, double control_rate_hz) {
    return static_cast<std::size_t>(std::ceil((t1 - t0) * control_rate_hz - 1e-9));
}

std::vector<Frame> expand_frames(const Schedule& schedule, const ArrayConfig& cfg, double t0,
                                 double t1, const FrameOptions& opts) {
    cfg.validate();
    if (!(t0 >= 0.0) || !(t1 > t0) || !std::isfinite(t1)) {
        fail(ErrorCode::InvalidArgument, "frame window must satisfy 0 <= t0 < t1");
    }
    double max_mod = 0.0;
    for (const auto& ev : schedule.events) max_mod = std::max(max_mod, ev.mod_freq);
    if (!(opts.control_rate_hz > 2.0 * max_mod) || !std::isfinite(opts.control_rate_hz)) {
        fail(ErrorCode::InvalidArgument,
             "control rate must exceed twice the highest modulation frequency");
    }

    const auto n = static_cast<std::size_t>(cfg.transducer_count());
    const std::size_t count = frame_count(t0, t1, opts.control_rate_hz);
    std::map<std::vector<Vec3>, std::vector<double>> focal_cache;

    std::vector<Frame> frames;
    frames.reserve(count);
    for (std::size_t tick = 0; tick < count; ++tick) {
        Frame frame;
        frame.timestamp = t0 + static_cast<double>(tick) / opts.control_rate_hz;
        const std::vector<ActivePoint> active = sample_schedule(schedule, frame.timestamp);
        if (active.empty()) {
            frame.solution.phases.assign(n, 0.0);
            frame.solution.amplitudes.assign(n, 0.0);
            frames.push_back(std::move(frame));
            continue;
        }

        if (opts.solver.mode == MultiPointMode::TemporalMultiplex) {
            const ActivePoint& p = active[tick % active.size()];
            frame.solution = solve_single(p.position, cfg);
            frame.solution.amplitudes.assign(n, p.amplitude);
            frame.points.push_back({p.cell, p.position, p.amplitude});
            frames.push_back(std::move(frame));
            continue;
        }

        std::vector<Vec3> key;
        std::vector<WeightedTarget> targets;
        double drive = 0.0;
        for (const auto& p : active) {
            key.push_back(p.position);
            targets.push_back({p.position, 1.0});
            drive = std::max(drive, p.amplitude);
            frame.points.push_back({p.cell, p.position, p.amplitude});
        }
        auto it = focal_cache.find(key);
        if (it == focal_cache.end()) {
            if (focal_cache.size() >= kMaxCachedPointSets) focal_cache.clear();
            auto detail = solve_multi_detailed(targets, cfg, opts.solver.iterations);
            it = focal_cache.emplace(key, std::move(detail.focal_phases)).first;
        }
        // Relative point amplitudes weight the final back-propagation; equal
        // amplitudes reproduce the cached uniform solution exactly.
        if (drive > 0.0) {
            for (std::size_t m = 0; m < targets.size(); ++m) targets[m].weight = active[m].amplitude / drive;
            if (std::none_of(targets.begin(), targets.end(), [](const auto& t) { return t.weight > 0.0; })) {
                for (auto& t : targets) t.weight = 1.0;
            }
        }
        frame.solution.phases = backpropagate_phases(targets, it->second, cfg);
        frame.solution.amplitudes.assign(n, drive);
        frames.push_back(std::move(frame));
    }
    return frames;
}

}  // namespace airbraille
