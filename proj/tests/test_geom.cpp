#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "visia/geom.hpp"

#include <random>

using namespace visia;
using geom::deg2rad;

namespace {

std::mt19937_64 rng(42);

double uniform(double lo, double hi) {
    const double u = double(rng() >> 11) * (1.0 / 9007199254740992.0);
    return lo + u * (hi - lo);
}

geom::CameraConfig random_config() {
    geom::CameraConfig q;
    q.p = {uniform(-5, 5), uniform(-5, 5), uniform(-5, 5)};
    q.theta = uniform(geom::kPitchMin, geom::kPitchMax);
    q.psi = uniform(-geom::kPi, geom::kPi);
    return q;
}

geom::FrustumParams random_params() {
    geom::FrustumParams p;
    p.alpha_h = deg2rad(uniform(30, 120));
    p.alpha_v = deg2rad(uniform(25, 100));
    p.r_max = uniform(1.0, 8.0);
    return p;
}

}  // namespace

TEST_CASE("make_frustum axis membership") {
    geom::CameraConfig q;  // origin, level, +x
    geom::FrustumParams p;
    p.alpha_h = deg2rad(90.0);
    p.alpha_v = deg2rad(90.0);
    p.r_max = 5.0;
    const auto hs = geom::make_frustum(q, p);

    CHECK(geom::point_in_frustum(hs, {1.0, 0.0, 0.0}));
    CHECK_FALSE(geom::point_in_frustum(hs, {-1.0, 0.0, 0.0}));
    CHECK_FALSE(geom::point_in_frustum(hs, {1.0, 1.01, 0.0}));  // beyond the 45 deg side plane
    CHECK(geom::point_in_frustum(hs, {1.0, 0.99, 0.0}));
}

TEST_CASE("far plane and apex conventions") {
    geom::CameraConfig q;
    geom::FrustumParams p;
    p.alpha_h = deg2rad(80.0);
    p.alpha_v = deg2rad(65.0);
    p.r_max = 5.0;
    const auto hs = geom::make_frustum(q, p);

    CHECK(geom::point_in_frustum(hs, {5.0 - 1e-9, 0.0, 0.0}));
    CHECK_FALSE(geom::point_in_frustum(hs, {5.0 + 1e-9, 0.0, 0.0}));
    CHECK_FALSE(geom::point_in_frustum(hs, q.p));  // apex itself is outside

    // Nudged along the viewing direction: inside; mirrored: outside.
    CHECK(geom::point_in_frustum(hs, q.p + 1e-3 * hs.dir));
    CHECK_FALSE(geom::point_in_frustum(hs, q.p - 1e-3 * hs.dir));
}

TEST_CASE("bearings basics") {
    geom::CameraConfig q;
    auto [bh, bv] = geom::bearings(q, {2.0, 0.0, 0.0});
    CHECK(bh == doctest::Approx(0.0));
    CHECK(bv == doctest::Approx(0.0));

    auto [bh2, bv2] = geom::bearings(q, {1.0, 1.0, 0.0});
    CHECK(bh2 == doctest::Approx(deg2rad(45.0)));
    CHECK(bv2 == doctest::Approx(0.0));

    auto [bh3, bv3] = geom::bearings(q, {1.0, 0.0, -1.0});
    CHECK(bv3 == doctest::Approx(deg2rad(-45.0)));
    CHECK(bh3 == doctest::Approx(0.0));

    CHECK_THROWS_AS((void)geom::bearings(q, q.p), std::invalid_argument);
}

TEST_CASE("bearing/half-space equivalence on random samples") {
    for (int k = 0; k < 200; ++k) {
        const auto q = random_config();
        const auto p = random_params();
        const auto hs = geom::make_frustum(q, p);
        const Eigen::Vector3d x{uniform(-10, 10), uniform(-10, 10), uniform(-10, 10)};
        if ((x - q.p).norm() < 1e-6) continue;
        const auto [bh, bv] = geom::bearings(q, x);
        const Eigen::Matrix3d rot = geom::camera_rotation(q.theta, q.psi);
        const double fwd = (rot.transpose() * (x - q.p)).x();
        const bool by_bearings = std::abs(bh) <= p.alpha_h / 2 && std::abs(bv) <= p.alpha_v / 2 &&
                                 fwd > 0.0 && fwd <= p.r_max;
        // Skip samples within float noise of a boundary.
        const double margin = std::min({p.alpha_h / 2 - std::abs(bh),
                                        p.alpha_v / 2 - std::abs(bv), p.r_max - fwd, fwd});
        if (std::abs(margin) < 1e-9) continue;
        CHECK(geom::point_in_frustum(hs, x) == by_bearings);
    }
}

TEST_CASE("mirror cone exclusion") {
    for (int k = 0; k < 100; ++k) {
        const auto q = random_config();
        const auto p = random_params();
        const auto hs = geom::make_frustum(q, p);
        const Eigen::Vector3d x{uniform(-10, 10), uniform(-10, 10), uniform(-10, 10)};
        const Eigen::Matrix3d rot = geom::camera_rotation(q.theta, q.psi);
        const double fwd = (rot.transpose() * (x - q.p)).x();
        if (fwd < -1e-9) CHECK_FALSE(geom::point_in_frustum(hs, x));
    }
}

TEST_CASE("interp_attitude endpoints and midpoint") {
    const std::pair<double, double> a{deg2rad(0.0), deg2rad(10.0)};
    const std::pair<double, double> b{deg2rad(20.0), deg2rad(30.0)};
    CHECK(geom::interp_attitude(a, b, 0.0) == a);
    const auto mid = geom::interp_attitude(a, b, 0.5);
    CHECK(mid.first == doctest::Approx(deg2rad(10.0)));
    CHECK(mid.second == doctest::Approx(deg2rad(20.0)));
    const auto end = geom::interp_attitude(a, b, 1.0);
    CHECK(end.first == doctest::Approx(b.first));
    CHECK(end.second == doctest::Approx(b.second));
}

TEST_CASE("yaw interpolation takes the short arc") {
    // Oracle: angle-difference arithmetic. 170 deg to -170 deg is a 20 deg arc
    // through 180.
    const auto r = geom::interp_attitude({0.0, deg2rad(170.0)}, {0.0, deg2rad(-170.0)}, 0.5);
    CHECK(r.second == doctest::Approx(deg2rad(180.0)));
    const double diff = geom::angle_diff(deg2rad(170.0), deg2rad(-170.0));
    CHECK(diff == doctest::Approx(deg2rad(20.0)));
}

TEST_CASE("interp_attitude identity property") {
    for (int k = 0; k < 50; ++k) {
        const std::pair<double, double> a{uniform(-1.0, 0.5), uniform(-3.1, 3.1)};
        const double rho = uniform(0.0, 1.0);
        const auto r = geom::interp_attitude(a, a, rho);
        CHECK(r.first == doctest::Approx(a.first));
        CHECK(r.second == doctest::Approx(a.second));
    }
}

TEST_CASE("shift_offsets equals rebuilding at the translated apex") {
    for (int k = 0; k < 100; ++k) {
        const auto q = random_config();
        const auto p = random_params();
        const double s = uniform(0.0, 5.0);
        const Eigen::Vector3d d = geom::view_direction(q.theta, q.psi);
        const auto shifted = geom::shift_offsets(geom::make_frustum(q, p), d, s);
        geom::CameraConfig q2 = q;
        q2.p = q.p + s * d;
        const auto rebuilt = geom::make_frustum(q2, p);
        for (int i = 0; i < 5; ++i) {
            CHECK(shifted.planes[i].h == doctest::Approx(rebuilt.planes[i].h).epsilon(1e-9));
        }
        // Membership agreement on sampled points.
        for (int j = 0; j < 20; ++j) {
            const Eigen::Vector3d x{uniform(-10, 10), uniform(-10, 10), uniform(-10, 10)};
            if (std::abs((x - q2.p).norm()) < 1e-6) continue;
            double worst = std::numeric_limits<double>::infinity();
            for (const auto& pl : rebuilt.planes) {
                worst = std::min(worst, std::abs(pl.n.dot(x) + pl.h));
            }
            if (worst < 1e-9) continue;  // on a plane: both conventions may differ in ulps
            CHECK(geom::point_in_frustum(shifted, x) == geom::point_in_frustum(rebuilt, x));
        }
    }
}

TEST_CASE("shift_offsets basics") {
    geom::CameraConfig q;
    geom::FrustumParams p;
    const auto hs = geom::make_frustum(q, p);
    const Eigen::Vector3d d = hs.dir;

    const auto same = geom::shift_offsets(hs, d, 0.0);
    for (int i = 0; i < 5; ++i) CHECK(same.planes[i].h == hs.planes[i].h);

    const auto moved = geom::shift_offsets(hs, d, 1.0);
    CHECK(moved.planes[4].h == doctest::Approx(hs.planes[4].h - 1.0));  // far normal equals d
}

TEST_CASE("normalize_angle range") {
    CHECK(geom::normalize_angle(geom::kPi) == doctest::Approx(geom::kPi));
    CHECK(geom::normalize_angle(-geom::kPi) == doctest::Approx(geom::kPi));
    CHECK(geom::normalize_angle(3 * geom::kPi) == doctest::Approx(geom::kPi));
    CHECK(geom::normalize_angle(0.0) == doctest::Approx(0.0));
    for (int k = 0; k < 100; ++k) {
        const double a = uniform(-20, 20);
        const double n = geom::normalize_angle(a);
        CHECK(n > -geom::kPi - 1e-12);
        CHECK(n <= geom::kPi + 1e-12);
        CHECK(std::abs(geom::normalize_angle(n - a)) < 1e-9);
    }
}
