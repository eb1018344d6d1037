#pragma once

#include "braille.hpp"
#include "vec3.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace airbraille {

enum class Method {
    Constant,
    PointByPoint,
    RowByRow,
    ColumnByColumn,
    Pulsating,
    Rotating,
    Expanding,
    VaryingIntensity,
    MorseLike,
};

inline constexpr std::array<Method, 9> kAllMethods{
    Method::Constant,  Method::PointByPoint, Method::RowByRow,
    Method::ColumnByColumn, Method::Pulsating, Method::Rotating,
    Method::Expanding, Method::VaryingIntensity, Method::MorseLike,
};

// The three methods carried into the perception studies.
inline constexpr std::array<Method, 3> kStudiedMethods{
    Method::Constant, Method::PointByPoint, Method::RowByRow};

std::string_view method_name(Method method) noexcept;
// Accepts canonical names ("point-by-point") and short aliases ("pbp").
Method parse_method(std::string_view name);

struct LayoutConfig {
    double cell_spacing = 0.03;
    double plane_height = 0.20;
    bool mirror_x = false;

    void validate() const;
};

// Modulation frequency per cell, index 0 = cell 1.
struct CellFrequencies {
    std::array<double, kCellCount> hz{200.0, 140.0, 120.0, 160.0, 180.0, 100.0};

    double of(int cell) const;
    void validate() const;
};

// Timing and motion parameters; the defaults reproduce the reference
// presentation timings.
struct MethodParams {
    double dot_on_s = 0.200;
    double dot_gap_s = 0.300;
    double end_pause_s = 0.500;
    double row_interval_s = 0.300;
    double column_interval_s = 0.300;
    double pulse_rate_hz = 2.0;
    double pulse_duty = 0.5;
    double rotation_radius_m = 0.004;
    double rotation_rev_per_s = 2.0;
    double expansion_max_scale = 1.5;
    double expansion_period_s = 1.0;
    double intensity_offset = 0.75;
    double intensity_depth = 0.25;
    double intensity_rate_hz = 1.0;
    double morse_pulse_s = 0.200;
    double morse_gap_s = 0.300;
    double morse_end_pause_s = 0.500;

    void validate() const;
};

struct ScheduleOptions {
    MethodParams params;
    double peak_amplitude = 1.0;
    // Sequential methods replay from the start after their total duration.
    bool loop = true;
    // When set, the otherwise open-ended methods stop after this many seconds.
    std::optional<double> bounded_replay_s;

    void validate() const;
};

struct Trajectory {
    enum class Kind { Circle, Radial };
    Kind kind = Kind::Circle;
    // Circle: clockwise seen from above the array.
    double radius_m = 0.0;
    double rev_per_s = 0.0;
    // Radial: scale about `center` from 1 to max_scale over period_s, then reset.
    Vec3 center;
    double max_scale = 1.0;
    double period_s = 1.0;

    Vec3 offset(const Vec3& base, double t) const;
    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Envelope {
    enum class Kind { Square, Sine };
    Kind kind = Kind::Square;
    double freq_hz = 1.0;
    double duty = 0.5;     // Square
    double offset = 1.0;   // Sine
    double depth = 0.0;    // Sine

    double value(double t) const;
    friend bool operator==(const Envelope&, const Envelope&) = default;
};

struct EmissionEvent {
    int cell = 0;
    Vec3 position;
    double start = 0.0;
    std::optional<double> duration;  // nullopt: open-ended
    double mod_freq = 0.0;
    double peak_amplitude = 1.0;
    std::optional<Trajectory> trajectory;
    std::optional<Envelope> envelope;

    friend bool operator==(const EmissionEvent&, const EmissionEvent&) = default;
};

struct Schedule {
    Method method = Method::Constant;
    DotPattern pattern;
    std::vector<EmissionEvent> events;
    std::optional<double> total_duration;  // nullopt: open-ended
    bool looping = false;

    friend bool operator==(const Schedule&, const Schedule&) = default;
};

struct ActivePoint {
    int cell = 0;
    Vec3 position;
    double mod_freq = 0.0;
    double amplitude = 0.0;
};

Vec3 cell_position(int cell, const LayoutConfig& layout);

// Centre of the 2x3 grid at the presentation height.
Vec3 grid_center(const LayoutConfig& layout);

Schedule make_schedule(DotPattern pattern, Method method, const LayoutConfig& layout,
                       const CellFrequencies& freqs, const ScheduleOptions& opts = {});

std::vector<ActivePoint> sample_schedule(const Schedule& schedule, double t);

// Largest number of events overlapping at any instant.
int max_simultaneous(const Schedule& schedule);

// Working-volume ceiling for focal points above the array.
inline constexpr double kMaxWorkingHeight = 0.70;
inline constexpr int kMaxFocalPoints = 8;

}  // namespace airbraille
