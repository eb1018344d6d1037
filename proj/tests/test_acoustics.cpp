#include <doctest.h>

#include "acoustics.hpp"
#include "error.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace airbraille;

namespace {

const ArrayConfig kArray;

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::Internal;
}

double max_deviation_up_to_constant(const std::vector<double>& a, const std::vector<double>& b) {
    const double offset = a[0] - b[0];
    double worst = 0;
    for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, oracle::circular_distance(a[j] - b[j], offset));
    return worst;
}

}  // namespace

TEST_CASE("40 kHz in air gives an 8.6 mm wavelength") {
    CHECK(kArray.wavelength() == doctest::Approx(0.0086));
    CHECK(kArray.wavenumber() == doctest::Approx(2 * M_PI / 0.0086));
    CHECK(kArray.transducer_count() == 256);
}

TEST_CASE("lattice is centred and pitched") {
    Vec3 sum;
    for (int j = 0; j < kArray.transducer_count(); ++j) sum = sum + kArray.transducer_position(j);
    CHECK(sum.norm() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(distance(kArray.transducer_position(0), kArray.transducer_position(1)) == doctest::Approx(0.0103));
    CHECK(distance(kArray.transducer_position(0), kArray.transducer_position(16)) == doctest::Approx(0.0103));
    for (int j = 0; j < kArray.transducer_count(); ++j) {
        const Vec3 p = kArray.transducer_position(j);
        const Vec3 q = kArray.transducer_position(kArray.mirror_x_index(j));
        CHECK(q.x == doctest::Approx(-p.x));
        CHECK(q.y == doctest::Approx(p.y));
    }
}

TEST_CASE("geometry validation") {
    ArrayConfig overlap;
    overlap.element_radius = 0.006;
    CHECK(code_of([&] { overlap.validate(); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { check_working_volume({0, 0, 0.75}); }) == ErrorCode::OutOfRange);
    CHECK(code_of([] { check_working_volume({0, 0, 0.0}); }) == ErrorCode::OutOfRange);
    check_working_volume({0, 0, 0.7});
}

TEST_CASE("directivity table matches the exact Bessel form") {
    const PistonDirectivity table(kArray);
    const double ka = kArray.wavenumber() * kArray.element_radius;
    CHECK(table(0.0) == doctest::Approx(1.0));
    for (int i = 0; i <= 1000; ++i) {
        const double s = i / 1000.0;
        const double x = ka * s;
        const double expect = x < 1e-12 ? 1.0 : 2 * std::cyl_bessel_j(1.0, x) / x;
        CHECK(std::abs(table(s) - expect) < 1e-6);
        CHECK(std::abs(piston_directivity_exact(ka, s) - expect) < 1e-12);
    }
}

TEST_CASE("linear focusing aligns every transducer at the target") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec3 target{u(rng), u(rng), 0.2 + u(rng)};
        const PhaseSolution s = solve_single(target, kArray);
        const double k = kArray.wavenumber();
        for (int j = 0; j < kArray.transducer_count(); ++j) {
            const double d = distance(target, kArray.transducer_position(j));
            const double phase = s.phases[static_cast<std::size_t>(j)];
            CHECK(phase >= 0.0);
            CHECK(phase < 2 * M_PI);
            CHECK(oracle::circular_distance(k * d + phase, 0.0) < 1e-9);
            CHECK(s.amplitudes[static_cast<std::size_t>(j)] == 1.0);
        }
    }
}

TEST_CASE("mirrored targets give mirrored phases") {
    const Vec3 a{0.021, -0.013, 0.18};
    const Vec3 b{-0.021, -0.013, 0.18};
    const PhaseSolution sa = solve_single(a, kArray);
    const PhaseSolution sb = solve_single(b, kArray);
    for (int j = 0; j < kArray.transducer_count(); ++j) {
        CHECK(oracle::circular_distance(sa.phases[static_cast<std::size_t>(j)],
                                        sb.phases[static_cast<std::size_t>(kArray.mirror_x_index(j))]) < 1e-9);
    }
    const PhaseSolution ma = solve_multi({{{0.015, 0.03, 0.2}, 1}, {{0.015, 0.0, 0.2}, 1}}, kArray);
    const PhaseSolution mb = solve_multi({{{-0.015, 0.03, 0.2}, 1}, {{-0.015, 0.0, 0.2}, 1}}, kArray);
    for (int j = 0; j < kArray.transducer_count(); ++j) {
        CHECK(oracle::circular_distance(ma.phases[static_cast<std::size_t>(j)],
                                        mb.phases[static_cast<std::size_t>(kArray.mirror_x_index(j))]) < 1e-6);
    }
}

TEST_CASE("one-target retrieval reduces to linear focusing") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec3 t{u(rng), u(rng), 0.2 + u(rng)};
        const PhaseSolution single = solve_single(t, kArray);
        for (int iters : {1, 5, 30}) {
            const PhaseSolution multi = solve_multi({{t, 1.0}}, kArray, iters);
            CHECK(max_deviation_up_to_constant(single.phases, multi.phases) < 1e-6);
        }
    }
}

TEST_CASE("solver input checks") {
    std::vector<WeightedTarget> nine;
    for (int i = 0; i < 9; ++i) nine.push_back({{0.01 * i - 0.04, 0, 0.2}, 1});
    CHECK(code_of([&] { solve_multi(nine, kArray); }) == ErrorCode::TooManyPoints);
    CHECK(code_of([] { solve_multi({}, kArray); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { solve_multi({{{0, 0, 0.2}, 0.0}}, kArray); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { solve_multi({{{0, 0, 0.2}, 1.0}}, kArray, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("field evaluation agrees with a plain reference sum") {
    const PhaseSolution s = solve_multi({{{-0.015, 0.03, 0.2}, 1}, {{0.015, 0.0, 0.2}, 1}}, kArray);
    const PistonDirectivity table(kArray);
    oracle::PlainArray plain;
    for (const Vec3 p : {Vec3{0, 0, 0.2}, Vec3{-0.015, 0.03, 0.2}, Vec3{0.05, -0.02, 0.1}, Vec3{0.1, 0.1, 0.05}}) {
        const auto got = pressure_at(p, s, kArray, table);
        const auto want = oracle::field(plain, s.phases, s.amplitudes, p.x, p.y, p.z);
        CHECK(std::abs(got - want) <= 1e-6 * std::abs(want) + 1e-9);
    }
}

TEST_CASE("field sampling is independent of thread count") {
    const PhaseSolution s = solve_single({0.0, 0.0, 0.2}, kArray);
    const GridSpec g = GridSpec::plane({0, 0, 0.2}, 0.01, 0.01, 0.001);
    const FieldSample one = evaluate_field(s, kArray, g, {1});
    const FieldSample four = evaluate_field(s, kArray, g, {4});
    REQUIRE(one.pressure.size() == g.node_count());
    CHECK(one.pressure == four.pressure);
    const PistonDirectivity table(kArray);
    CHECK(one.at(3, 7) == pressure_at(g.node(3, 7), s, kArray, table));
}

TEST_CASE("single focus: argmax on target, wavelength-scale spot") {
    const Vec3 t{0, 0, 0.2};
    const PhaseSolution s = solve_single(t, kArray);
    const FieldSample f = evaluate_field(s, kArray, GridSpec::plane(t, 0.03, 0.03, 0.0005));
    const FocalMetrics m = focal_metrics(f, {t}, kArray);
    REQUIRE(m.peaks.size() == 1);
    CHECK(distance(m.peaks[0].position, t) < 0.0043);
    REQUIRE(m.peaks[0].fwhm_x.has_value());
    CHECK(*m.peaks[0].fwhm_x > 0.0043);
    CHECK(*m.peaks[0].fwhm_x < 0.0172);
    CHECK(*m.peaks[0].fwhm_y == doctest::Approx(*m.peaks[0].fwhm_x).epsilon(1e-6));
}

TEST_CASE("silent field has no peak") {
    PhaseSolution s;
    s.phases.assign(256, 0.0);
    s.amplitudes.assign(256, 0.0);
    const FieldSample f = evaluate_field(s, kArray, GridSpec::plane({0, 0, 0.2}, 0.01, 0.01, 0.001));
    CHECK(code_of([&] { focal_metrics(f, {{0, 0, 0.2}}, kArray); }) == ErrorCode::PeakNotFound);
}

TEST_CASE("frames: count, silence, control-rate floor, multiplexing") {
    CHECK(frame_count(0.0, 0.01, 1000) == 10);
    CHECK(frame_count(0.0, 0.0105, 1000) == 11);
    const Schedule pbp = make_schedule(encode_char('3'), Method::PointByPoint, {}, {});
    const auto frames = expand_frames(pbp, kArray, 0.1905, 0.2095);
    REQUIRE(frames.size() == 19);
    for (const auto& fr : frames) {
        const bool on = fr.timestamp < 0.2;
        CHECK(fr.points.empty() == !on);
        if (!on) {
            for (double a : fr.solution.amplitudes) CHECK(a == 0.0);
        }
    }
    FrameOptions slow;
    slow.control_rate_hz = 400;  // 200 Hz cell needs more than 400
    CHECK(code_of([&] { expand_frames(pbp, kArray, 0, 0.1, slow); }) == ErrorCode::InvalidArgument);

    const Schedule both = make_schedule(encode_char('3'), Method::Constant, {}, {});
    FrameOptions tm;
    tm.solver.mode = MultiPointMode::TemporalMultiplex;
    const auto mux = expand_frames(both, kArray, 0.001, 0.005, tm);
    for (std::size_t i = 0; i < mux.size(); ++i) {
        REQUIRE(mux[i].points.size() == 1);
        CHECK(mux[i].points[0].cell == (i % 2 == 0 ? 1 : 4));
    }
}

TEST_CASE("simultaneous frames reuse retrieval and track amplitude") {
    const Schedule both = make_schedule(encode_char('3'), Method::Constant, {}, {});
    const auto frames = expand_frames(both, kArray, 0.0, 0.02);
    for (const auto& fr : frames) {
        double drive = 0;
        for (const auto& p : fr.points) drive = std::max(drive, p.amplitude);
        for (double a : fr.solution.amplitudes) CHECK(a == doctest::Approx(drive));
    }
    // equal amplitudes reproduce the plain solver exactly
    const auto plain = solve_multi({{cell_position(1, {}), 1}, {cell_position(4, {}), 1}}, kArray);
    const auto detail = solve_multi_detailed({{cell_position(1, {}), 1}, {cell_position(4, {}), 1}}, kArray, 30);
    const auto again = backpropagate_phases({{cell_position(1, {}), 1}, {cell_position(4, {}), 1}},
                                            detail.focal_phases, kArray);
    CHECK(max_deviation_up_to_constant(plain.phases, again) < 1e-12);
}
