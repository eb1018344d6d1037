#include "simulate.hpp"

#include <algorithm>
#include <cmath>

namespace airbraille {
namespace {

Json vec_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

GridSpec plane_for(const RunConfig& cfg, const Frame& frame) {
    const double margin = cfg.grid_margin_m;
    if (frame.points.empty()) {
        const double s = cfg.layout.cell_spacing;
        return GridSpec::plane(grid_center(cfg.layout), 0.5 * s + margin, s + margin, cfg.grid_resolution_m);
    }
    double x0 = frame.points.front().position.x, x1 = x0;
    double y0 = frame.points.front().position.y, y1 = y0;
    for (const auto& p : frame.points) {
        x0 = std::min(x0, p.position.x);
        x1 = std::max(x1, p.position.x);
        y0 = std::min(y0, p.position.y);
        y1 = std::max(y1, p.position.y);
    }
    const Vec3 c{0.5 * (x0 + x1), 0.5 * (y0 + y1), frame.points.front().position.z};
    return GridSpec::plane(c, 0.5 * (x1 - x0) + margin, 0.5 * (y1 - y0) + margin, cfg.grid_resolution_m);
}

}  // namespace

SimulationResult simulate(const RunConfig& cfg, const Schedule& schedule, double t) {
    cfg.validate();
    if (!std::isfinite(t) || t < 0.0) fail(ErrorCode::InvalidArgument, "time must be a non-negative number");
    FrameOptions fo;
    fo.control_rate_hz = cfg.control_rate_hz;
    fo.solver = cfg.solver;
    std::vector<Frame> frames = expand_frames(schedule, cfg.array, t, t + 1.0 / cfg.control_rate_hz, fo);

    SimulationResult r;
    r.time_s = t;
    r.frame = std::move(frames.front());
    r.field = evaluate_field(r.frame.solution, cfg.array, plane_for(cfg, r.frame));

    std::vector<Vec3> targets;
    for (const auto& p : r.frame.points) {
        if (p.amplitude > 0.0) targets.push_back(p.position);
    }
    if (targets.empty()) {
        r.error = ErrorCode::PeakNotFound;
        r.error_message = "no focal point is emitting at t = " + std::to_string(t) + " s";
        return r;
    }
    try {
        r.metrics = focal_metrics(r.field, targets, cfg.array);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::PeakNotFound) throw;
        r.error = e.code();
        r.error_message = e.what();
    }
    return r;
}

Json simulation_report(const SimulationResult& r) {
    Json doc;
    doc["format"] = kSimulationFormat;
    doc["time_s"] = r.time_s;
    doc["frame_timestamp_s"] = r.frame.timestamp;
    Json pts = Json::array();
    double drive = 0.0;
    for (const auto& p : r.frame.points) {
        pts.push_back({{"cell", p.cell}, {"position", vec_json(p.position)}, {"amplitude", p.amplitude}});
    }
    for (double a : r.frame.solution.amplitudes) drive = std::max(drive, a);
    doc["drive_amplitude"] = drive;
    doc["points"] = pts;
    const GridSpec& g = r.field.grid;
    doc["grid"] = {{"origin_m", vec_json(g.origin)},
                   {"resolution_m", g.resolution},
                   {"counts", Json::array({g.u.count, g.v.count, g.w.count})}};
    double peak = 0.0;
    for (const auto& p : r.field.pressure) peak = std::max(peak, std::abs(p));
    doc["max_abs_pressure"] = peak;
    doc["metrics"] = r.metrics ? focal_metrics_to_json(*r.metrics) : Json();
    doc["error"] = r.error ? Json{{"code", std::string(error_code_name(*r.error))}, {"message", r.error_message}}
                           : Json();
    return doc;
}

}  // namespace airbraille
