#pragma once

#include "scheduler.hpp"
#include "vec3.hpp"

#include <complex>
#include <optional>
#include <vector>

namespace airbraille {

struct ArrayConfig {
    int rows = 16;
    int cols = 16;
    double pitch = 0.0103;
    double element_radius = 0.0045;
    double carrier_freq = 40000.0;
    double sound_speed = 344.0;

    int transducer_count() const { return rows * cols; }
    double wavelength() const { return sound_speed / carrier_freq; }
    double wavenumber() const;
    // Row-major lattice centred on the origin in the z = 0 plane.
    Vec3 transducer_position(int index) const;
    // Index of the transducer at the x-mirrored lattice site.
    int mirror_x_index(int index) const;
    void validate() const;
};

struct PhaseSolution {
    std::vector<double> phases;      // radians in [0, 2*pi)
    std::vector<double> amplitudes;  // [0, 1]
};

// Far-field circular piston directivity 2*J1(x)/x with x = k*a*sin(theta),
// tabulated once per array geometry.
class PistonDirectivity {
public:
    explicit PistonDirectivity(const ArrayConfig& cfg);
    double operator()(double sin_theta) const;

private:
    double ka_;
    std::vector<double> table_;
};

// Exact directivity from the standard-library Bessel function; the table above
// is checked against it.
double piston_directivity_exact(double ka, double sin_theta);

struct WeightedTarget {
    Vec3 position;
    double weight = 1.0;
};

enum class MultiPointMode { Simultaneous, TemporalMultiplex };

struct SolverOptions {
    int iterations = 30;
    MultiPointMode mode = MultiPointMode::Simultaneous;
};

void check_working_volume(const Vec3& target);

PhaseSolution solve_single(const Vec3& target, const ArrayConfig& cfg);

PhaseSolution solve_multi(const std::vector<WeightedTarget>& targets, const ArrayConfig& cfg,
                          int iterations = 30);

// Focal phases from the final retrieval pass alongside the solution, so
// callers can re-weight the back-propagation step without re-iterating.
struct MultiSolveDetail {
    PhaseSolution solution;
    std::vector<double> focal_phases;
};
MultiSolveDetail solve_multi_detailed(const std::vector<WeightedTarget>& targets,
                                      const ArrayConfig& cfg, int iterations);

// Transducer phases arg(sum_m w_m exp(i(psi_m - k d_jm)) / d_jm).
std::vector<double> backpropagate_phases(const std::vector<WeightedTarget>& targets,
                                         const std::vector<double>& focal_phases,
                                         const ArrayConfig& cfg);

struct GridAxis {
    Vec3 direction;  // unit vector
    int count = 1;
};

// Nodes are origin + resolution * (i*u + j*v + l*w).
struct GridSpec {
    Vec3 origin;
    GridAxis u{{1.0, 0.0, 0.0}, 1};
    GridAxis v{{0.0, 1.0, 0.0}, 1};
    GridAxis w{{0.0, 0.0, 1.0}, 1};
    double resolution = 0.001;

    std::size_t node_count() const;
    Vec3 node(int i, int j, int l = 0) const;
    void validate() const;

    // Axis-aligned z-plane patch centred on `center`.
    static GridSpec plane(const Vec3& center, double half_width_x, double half_width_y,
                          double resolution);
};

struct FieldSample {
    GridSpec grid;
    std::vector<std::complex<double>> pressure;  // index ((l*nv)+j)*nu + i

    std::complex<double> at(int i, int j, int l = 0) const;
};

struct FieldOptions {
    // 0 picks std::thread::hardware_concurrency().
    unsigned threads = 0;
};

std::complex<double> pressure_at(const Vec3& point, const PhaseSolution& sol, const ArrayConfig& cfg,
                                 const PistonDirectivity& directivity);

FieldSample evaluate_field(const PhaseSolution& sol, const ArrayConfig& cfg, const GridSpec& grid,
                           const FieldOptions& opts = {});

struct FocalPeak {
    Vec3 target;
    Vec3 position;
    double magnitude = 0.0;
    // Unset when the half-maximum crossing falls outside the grid.
    std::optional<double> fwhm_x;
    std::optional<double> fwhm_y;
};

struct FocalMetrics {
    std::vector<FocalPeak> peaks;
    std::optional<double> contrast_to_midpoint;  // two targets only
};

// Requires a z-plane grid with axes along +x and +y.
FocalMetrics focal_metrics(const FieldSample& field, const std::vector<Vec3>& targets,
                           const ArrayConfig& cfg);

struct FramePoint {
    int cell = 0;
    Vec3 position;
    double amplitude = 0.0;
};

struct Frame {
    double timestamp = 0.0;
    PhaseSolution solution;
    std::vector<FramePoint> points;
};

struct FrameOptions {
    double control_rate_hz = 1000.0;
    SolverOptions solver;
};

std::size_t frame_count(double t0, double t1, double control_rate_hz);

std::vector<Frame> expand_frames(const Schedule& schedule, const ArrayConfig& cfg, double t0,
                                 double t1, const FrameOptions& opts = {});

}  // namespace airbraille
