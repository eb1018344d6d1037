#pragma once

#include "acoustics.hpp"
#include "scheduler.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace airbraille {

using Json = nlohmann::ordered_json;

inline constexpr const char* kScheduleFormat = "airbraille.schedule/1";

// Every tunable of a run. Built from defaults plus a JSON override document;
// unknown keys and wrong types are rejected before anything executes.
struct RunConfig {
    LayoutConfig layout;
    CellFrequencies frequencies;
    ScheduleOptions schedule;
    ArrayConfig array;
    SolverOptions solver;
    double control_rate_hz = 1000.0;
    double grid_resolution_m = 0.0005;
    double grid_margin_m = 0.012;
    // Default seed for sessions that do not bring their own.
    std::uint64_t seed = 1;

    void validate() const;
};

RunConfig run_config_from_json(const Json& overrides);
Json run_config_to_json(const RunConfig& cfg);
// Applies `overrides` on top of `base` (same schema as run_config_from_json).
void apply_overrides(RunConfig& base, const Json& overrides);

Json schedule_to_json(const Schedule& schedule);
Schedule schedule_from_json(const Json& doc);

Json active_points_to_json(const std::vector<ActivePoint>& points);

// One JSON object per line: timestamp_s, phases[], amplitudes[], points[].
std::string frames_to_jsonl(const std::vector<Frame>& frames);

// Commented header (origin, axes, resolution, units) followed by one row per
// node: i,j,l,x_m,y_m,z_m,re,im,abs.
std::string field_to_csv(const FieldSample& field);

Json focal_metrics_to_json(const FocalMetrics& metrics);

std::string dump(const Json& doc);

}  // namespace airbraille
