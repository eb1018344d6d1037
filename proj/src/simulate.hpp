#pragma once

#include "error.hpp"
#include "serialize.hpp"

#include <optional>
#include <string>

namespace airbraille {

inline constexpr const char* kSimulationFormat = "airbraille.simulation/1";

struct SimulationResult {
    double time_s = 0.0;
    Frame frame;
    FieldSample field;
    std::optional<FocalMetrics> metrics;
    // Set instead of metrics when no peak could be located.
    std::optional<ErrorCode> error;
    std::string error_message;
};

// Frame at time t, field on a z-plane that covers the active points plus the
// configured margin. Input errors throw; a missing peak is recorded.
SimulationResult simulate(const RunConfig& cfg, const Schedule& schedule, double t);

Json simulation_report(const SimulationResult& r);

}  // namespace airbraille
