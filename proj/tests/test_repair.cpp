#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "visia/oracle.hpp"
#include "visia/repair.hpp"

#include <random>

using namespace visia;
using geom::deg2rad;
using world::VoxelState;

namespace {

std::mt19937_64 rng(99);

double uniform(double lo, double hi) {
    const double u = double(rng() >> 11) * (1.0 / 9007199254740992.0);
    return lo + u * (hi - lo);
}

}  // namespace

TEST_CASE("build_template enumerations") {
    geom::FrustumParams p;
    p.alpha_h = deg2rad(90.0);
    p.alpha_v = deg2rad(90.0);
    p.r_max = 5.0;
    const auto tpl = repair::build_template(p, deg2rad(45.0), deg2rad(45.0));
    CHECK(tpl.dirs.size() == 9);  // {-45, 0, 45}^2, open bounds drop +-90

    const auto only_zero_row = repair::build_template(p, p.alpha_v, deg2rad(45.0));
    for (const auto& d : only_zero_row.dirs) CHECK(d.theta == 0.0);

    bool has_center = false;
    for (const auto& d : tpl.dirs) {
        CHECK(d.u.norm() == doctest::Approx(1.0));
        if (d.theta == 0.0 && d.psi == 0.0) has_center = true;
    }
    CHECK(has_center);

    CHECK_THROWS_AS((void)repair::build_template(p, 0.0, deg2rad(10.0)), std::invalid_argument);
}

TEST_CASE("anchor: geometric median") {
    const std::vector<Eigen::Vector3d> single{{1.0, 2.0, 3.0}};
    CHECK((repair::anchor(single) - single[0]).norm() < 1e-9);

    const std::vector<Eigen::Vector3d> square{
        {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    CHECK((repair::anchor(square) - Eigen::Vector3d(0.5, 0.5, 0.0)).norm() < 1e-6);

    // Dense grid-search oracle on a triangle.
    const std::vector<Eigen::Vector3d> tri{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    auto total_dist = [&](const Eigen::Vector3d& x) {
        double s = 0.0;
        for (const auto& p : tri) s += (x - p).norm();
        return s;
    };
    double best = std::numeric_limits<double>::infinity();
    for (double x = 0.0; x <= 1.0; x += 0.002) {
        for (double y = 0.0; y <= 1.0; y += 0.002) {
            best = std::min(best, total_dist({x, y, 0.0}));
        }
    }
    CHECK(total_dist(repair::anchor(tri)) <= best + 1e-4);

    CHECK_THROWS_AS((void)repair::anchor({}), std::invalid_argument);
}

TEST_CASE("instantiate_candidates geometry") {
    geom::FrustumParams p;
    p.r_max = 5.0;
    repair::DirectionTemplate tpl;
    tpl.dirs.push_back({0.0, 0.0, geom::view_direction(0.0, 0.0)});

    // Canonical viewpoint looking along +x: the (0,0) direction lands at
    // m + (r_max, 0, 0) looking back along -x.
    geom::CameraConfig vbar;  // yaw 0
    const Eigen::Vector3d m{1.0, 2.0, 1.0};
    const auto c = repair::instantiate_candidates(vbar, m, tpl, p);
    REQUIRE(c.size() == 1);
    CHECK((c[0].p - (m + Eigen::Vector3d(5.0, 0.0, 0.0))).norm() < 1e-9);
    CHECK(c[0].psi == doctest::Approx(geom::kPi));  // looking along -x at m
    CHECK(c[0].theta == doctest::Approx(0.0));

    // Rotation oracle: viewpoint looking along +y maps (0,0) to +y.
    geom::CameraConfig vy;
    vy.psi = deg2rad(90.0);
    const auto cy = repair::instantiate_candidates(vy, m, tpl, p);
    CHECK((cy[0].p - (m + Eigen::Vector3d(0.0, 5.0, 0.0))).norm() < 1e-9);

    // All candidates sit on the sphere of radius r_max and look at the anchor.
    geom::FrustumParams fov;
    fov.alpha_h = deg2rad(80.0);
    fov.alpha_v = deg2rad(65.0);
    fov.r_max = 5.0;
    const auto full = repair::build_template(fov, deg2rad(15.0), deg2rad(15.0));
    geom::CameraConfig vr;
    vr.theta = deg2rad(-20.0);
    vr.psi = deg2rad(37.0);
    for (const auto& cand : repair::instantiate_candidates(vr, m, full, fov)) {
        CHECK((cand.p - m).norm() == doctest::Approx(5.0));
        const Eigen::Vector3d look = geom::view_direction(cand.theta, cand.psi);
        const Eigen::Vector3d to_m = (m - cand.p).normalized();
        // Pitch clamping may bend the exact look-at; cross-check the yaw plane.
        CHECK(std::atan2(to_m.y(), to_m.x()) == doctest::Approx(cand.psi));
        if (cand.theta > geom::kPitchMin + 1e-9 && cand.theta < geom::kPitchMax - 1e-9) {
            CHECK(look.dot(to_m) == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("s_lower_bound against the 1 mm scan oracle") {
    int tested = 0;
    for (int k = 0; k < 60 && tested < 40; ++k) {
        geom::FrustumParams fp;
        fp.alpha_h = deg2rad(uniform(40, 110));
        fp.alpha_v = deg2rad(uniform(30, 90));
        fp.r_max = uniform(2.0, 8.0);
        geom::CameraConfig q;
        q.p = {uniform(-3, 3), uniform(-3, 3), uniform(-3, 3)};
        q.theta = uniform(-0.9, 0.45);
        q.psi = uniform(-3.1, 3.1);
        const auto hs = geom::make_frustum(q, fp);
        const Eigen::Matrix3d rot = geom::camera_rotation(q.theta, q.psi);
        Eigen::Vector3d dir_cam(1.0, std::tan(uniform(-0.4, 0.4) * fp.alpha_h),
                                std::tan(uniform(-0.4, 0.4) * fp.alpha_v));
        dir_cam.normalize();
        const Eigen::Vector3d o = q.p + uniform(0.3, 0.9) * fp.r_max * (rot * dir_cam);
        if (!geom::point_in_frustum(hs, o)) continue;
        ++tested;

        const Eigen::Vector3d d = geom::view_direction(q.theta, q.psi);
        const double d_min = uniform(0.05, 0.4);
        const double s_lb = repair::s_lower_bound(hs, d, std::vector{o}, d_min);
        const double s_scan = oracle::s_lb_by_scan(hs, d, o, d_min);
        CHECK(std::abs(s_lb - s_scan) <= 1e-3);

        // Expulsion bound: at s_lb the sample is out with margin; 1 mm earlier
        // it is not (when s_lb > 0).
        auto expelled = [&](double s) {
            for (const auto& pl : hs.planes) {
                if (pl.n.dot(o) + pl.h - s * pl.n.dot(d) >= d_min) return true;
            }
            return false;
        };
        CHECK(expelled(s_lb + 1e-9));  // boundary equality up to rounding
        if (s_lb > 1e-3) CHECK_FALSE(expelled(s_lb - 1e-3));
    }
    CHECK(tested >= 30);

    SUBCASE("empty set and infeasible sentinel") {
        geom::CameraConfig q;
        geom::FrustumParams fp;
        const auto hs = geom::make_frustum(q, fp);
        CHECK(repair::s_lower_bound(hs, hs.dir, {}, 0.2) == 0.0);

        // Hand-built axis-aligned planes whose normals all move with +d: no
        // plane can expel the sample.
        geom::HalfSpaceSet degenerate = hs;
        for (auto& pl : degenerate.planes) pl.n = Eigen::Vector3d(1.0, 0.0, 0.0);
        const Eigen::Vector3d o{0.5, 0.0, 0.0};
        CHECK(repair::s_lower_bound(degenerate, {1.0, 0.0, 0.0}, std::vector{o}, 0.2) ==
              repair::kInfeasibleShift);
    }
}

TEST_CASE("element_interval against a 1 mm scan") {
    for (int k = 0; k < 30; ++k) {
        geom::FrustumParams fp;
        fp.alpha_h = deg2rad(uniform(50, 100));
        fp.alpha_v = deg2rad(uniform(40, 80));
        fp.r_max = uniform(2.0, 6.0);
        geom::CameraConfig q;
        q.p = {uniform(-2, 2), uniform(-2, 2), uniform(-2, 2)};
        q.theta = uniform(-0.6, 0.3);
        q.psi = uniform(-3.1, 3.1);
        const auto hs = geom::make_frustum(q, fp);
        const Eigen::Vector3d d = geom::view_direction(q.theta, q.psi);
        const Eigen::Vector3d e = q.p + Eigen::Vector3d(uniform(-6, 6), uniform(-6, 6),
                                                        uniform(-6, 6));
        const auto iv = repair::element_interval(e, hs, d);

        auto inside_at = [&](double s) {
            for (const auto& pl : hs.planes) {
                if (pl.n.dot(e) + pl.h - s * pl.n.dot(d) > 0.0) return false;
            }
            return true;
        };
        for (double s = 0.0; s <= 8.0; s += 1e-3) {
            const bool in_iv = !iv.empty() && s >= iv.lo - 5e-4 && s <= iv.hi + 5e-4;
            const bool in_scan = inside_at(s);
            if (in_iv != in_scan) {
                // Allow half-step slack at the interval boundary.
                const bool near_edge = !iv.empty() && (std::abs(s - iv.lo) <= 2e-3 ||
                                                       std::abs(s - iv.hi) <= 2e-3);
                CHECK(near_edge);
            }
        }
    }

    SUBCASE("degenerate plane reduces to a sign test") {
        geom::CameraConfig q;
        geom::FrustumParams fp;
        const auto hs = geom::make_frustum(q, fp);
        // Direction orthogonal to the far-plane normal: the far constraint is
        // constant in s.
        const Eigen::Vector3d d{0.0, 1.0, 0.0};
        const Eigen::Vector3d inside{1.0, 0.0, 0.0};
        const auto iv = repair::element_interval(inside, hs, d);
        CHECK_FALSE(iv.empty());
        const Eigen::Vector3d beyond{20.0, 0.0, 0.0};  // violates the far plane forever
        CHECK(repair::element_interval(beyond, hs, d).empty());
    }
}

TEST_CASE("optimal_shift examples and sweep correctness") {
    using repair::BoundInterval;
    const std::vector<BoundInterval> ivs{{0, 0.0, 2.0}, {1, 1.0, 3.0}, {2, 2.5, 4.0}};
    const auto r = repair::optimal_shift(ivs, 0.0);
    CHECK(r.s_star == doctest::Approx(1.0));
    CHECK(r.count == 2);

    const std::vector<BoundInterval> single{{0, 5.0, 6.0}};
    const auto r2 = repair::optimal_shift(single, 0.0);
    CHECK(r2.s_star == doctest::Approx(5.0));
    CHECK(r2.count == 1);

    const auto r3 = repair::optimal_shift(ivs, 10.0);
    CHECK(r3.s_star == doctest::Approx(10.0));
    CHECK(r3.count == 0);

    // 1000 random interval sets against the endpoint-scan oracle.
    const auto suite = oracle::run_sweep_suite({12345, 1000, oracle::Inject::None});
    CHECK(suite.pass);
    CHECK(suite.cases == 1000);
}

TEST_CASE("angular_margins") {
    geom::CameraConfig q;
    geom::FrustumParams p;
    p.alpha_h = deg2rad(80.0);
    p.alpha_v = deg2rad(65.0);
    p.r_max = 10.0;
    const double eta_max = deg2rad(30.0);

    // Obstacle at beta_h = 50 deg: margin 10 deg.
    const Eigen::Vector3d o = q.p + 2.0 * geom::view_direction(0.0, deg2rad(50.0));
    const auto [eta_h, eta_v] = repair::angular_margins(q, std::vector{o}, p, eta_max);
    CHECK(eta_h == doctest::Approx(deg2rad(10.0)));

    // Inside the FoV: clamped to zero.
    const Eigen::Vector3d in = q.p + 2.0 * geom::view_direction(0.0, deg2rad(10.0));
    const auto [eta_h2, eta_v2] = repair::angular_margins(q, std::vector{in}, p, eta_max);
    CHECK(eta_h2 == 0.0);
    CHECK(eta_v2 == 0.0);

    // No obstacles: the search bound.
    const auto [eta_h3, eta_v3] = repair::angular_margins(q, {}, p, eta_max);
    CHECK(eta_h3 == eta_max);
    CHECK(eta_v3 == eta_max);
}

namespace {

// Wall fixture for the attitude/repair stages.
struct RepairFixture {
    world::VoxelGrid grid{{{0, 0, 0}, {8, 8.5, 3}}, 0.1};
    world::SurfaceModel surface;
    geom::FrustumParams params;
    PathNode vbar;

    RepairFixture() {
        for (int x = 20; x < 60; ++x) {
            for (int z = 4; z < 24; ++z) grid.set_state({x, 40, z}, VoxelState::Target);
        }
        surface = world::extract_surface(grid);
        params.alpha_h = deg2rad(80.0);
        params.alpha_v = deg2rad(65.0);
        params.r_max = 3.5;
        vbar.config = {{4.0, 1.5, 1.4}, 0.0, deg2rad(90.0)};
        vbar.kind = NodeKind::Viewpoint;
        const auto hs = geom::make_frustum(vbar.config, params);
        for (const auto& v : grid.voxel_indices_in_frustum(hs, world::Label::Target)) {
            const int eid = surface.element_at(grid, v);
            if (eid >= 0) vbar.intended.push_back(eid);
        }
    }
};

int coverage_count(const geom::CameraConfig& q, std::span<const int> ids,
                   const world::SurfaceModel& surface, const geom::FrustumParams& params) {
    const auto hs = geom::make_frustum(q, params);
    int c = 0;
    for (const int eid : ids) {
        if (geom::point_in_frustum(hs, surface.elements[eid].pos)) ++c;
    }
    return c;
}

}  // namespace

TEST_CASE("refine_attitude improves coverage within margins") {
    RepairFixture f;
    // Aim 6 degrees off the wall center; allow a 10 degree yaw margin.
    geom::CameraConfig q = f.vbar.config;
    q.psi = deg2rad(84.0);
    const auto s_vis = vis::visible_subset(q, f.vbar.intended, f.grid, f.surface);
    const int before = coverage_count(q, s_vis, f.surface, f.params);
    const auto [theta_r, psi_r] = repair::refine_attitude(
        q, {deg2rad(10.0), deg2rad(10.0)}, s_vis, f.grid, f.surface, f.params, 10);
    const int after = coverage_count({q.p, theta_r, psi_r}, s_vis, f.surface, f.params);
    CHECK(after >= before);
    CHECK_FALSE(vis::occ({q.p, theta_r, psi_r}, f.grid, f.params));
    CHECK(psi_r > q.psi);  // moved toward the wall center

    // Dense 0.5 deg grid-search oracle: returned coverage within one element.
    int grid_best = before;
    for (double dps = -10.0; dps <= 10.0; dps += 0.5) {
        for (double dth = -10.0; dth <= 10.0; dth += 0.5) {
            const geom::CameraConfig probe{q.p, q.theta + deg2rad(dth), q.psi + deg2rad(dps)};
            if (vis::occ(probe, f.grid, f.params)) continue;
            grid_best = std::max(grid_best, coverage_count(probe, s_vis, f.surface, f.params));
        }
    }
    CHECK(after >= grid_best - 1);

    // Zero margins: unchanged.
    const auto fixed = repair::refine_attitude(q, {0.0, 0.0}, s_vis, f.grid, f.surface,
                                               f.params, 10);
    CHECK(fixed.first == q.theta);
    CHECK(fixed.second == q.psi);

    // Already centered: no strict improvement possible, attitude unchanged.
    geom::CameraConfig centered = f.vbar.config;
    const auto s_vis_c = vis::visible_subset(centered, f.vbar.intended, f.grid, f.surface);
    const int base = coverage_count(centered, s_vis_c, f.surface, f.params);
    const auto kept = repair::refine_attitude(centered, {deg2rad(5.0), deg2rad(5.0)}, s_vis_c,
                                              f.grid, f.surface, f.params, 10);
    const int kept_count = coverage_count({centered.p, kept.first, kept.second}, s_vis_c,
                                          f.surface, f.params);
    CHECK(kept_count >= base);
}

TEST_CASE("refine_attitude never returns an occluded attitude") {
    RepairFixture f;
    auto grid = f.grid;
    // Obstacle just outside the FoV edge; margins shrink accordingly.
    geom::CameraConfig q = f.vbar.config;
    const Eigen::Vector3d o = q.p + 2.0 * geom::view_direction(0.0, q.psi + deg2rad(44.0));
    grid.set_state(grid.voxel_of(o), VoxelState::Obstacle);
    REQUIRE_FALSE(vis::occ(q, grid, f.params));

    const auto s_vis = vis::visible_subset(q, f.vbar.intended, grid, f.surface);
    const auto o_nb = grid.local_voxels(q.p, 3.0, 64);
    const auto etas = repair::angular_margins(q, o_nb, f.params, deg2rad(30.0));
    const auto [theta_r, psi_r] =
        repair::refine_attitude(q, etas, s_vis, grid, f.surface, f.params, 10);
    CHECK_FALSE(vis::occ({q.p, theta_r, psi_r}, grid, f.params));
}

TEST_CASE("repair_viewpoint produces certified candidates") {
    RepairFixture f;
    repair::RepairParams rp;
    rp.d_min = 0.2;
    const auto tpl = repair::build_template(f.params, deg2rad(15.0), deg2rad(15.0));

    SUBCASE("no obstacles: pool covers all of s_vis for some candidate") {
        const auto pool = repair::repair_viewpoint(f.vbar, 0, f.grid, f.surface, f.params, rp,
                                                   tpl);
        REQUIRE_FALSE(pool.empty());
        std::size_t best = 0;
        for (const auto& cand : pool) best = std::max(best, cand.covered.size());
        const auto s_vis_best = vis::visible_subset(f.vbar.config, f.vbar.intended, f.grid,
                                                    f.surface);
        CHECK(best == s_vis_best.size());
    }

    SUBCASE("occluder in front, free flank: candidates satisfy all invariants") {
        auto grid = f.grid;
        // A slab between the viewpoint and the wall.
        for (int x = 36; x < 44; ++x) {
            for (int z = 8; z < 20; ++z) grid.set_state({x, 30, z}, VoxelState::Obstacle);
        }
        const auto pool = repair::repair_viewpoint(f.vbar, 0, grid, f.surface, f.params, rp,
                                                   tpl);
        REQUIRE_FALSE(pool.empty());
        for (const auto& cand : pool) {
            // Independent invariant re-check.
            CHECK(cand.s_star >= cand.s_lb);
            CHECK(cand.s_lb >= 0.0);
            CHECK_FALSE(vis::occ(cand.config, grid, f.params));
            CHECK(grid.min_clearance(cand.config.p) >= rp.d_min);
            CHECK_FALSE(cand.covered.empty());
        }
    }

    SUBCASE("target fully enclosed: empty pool") {
        world::VoxelGrid grid({{0, 0, 0}, {4, 4, 4}}, 0.1);
        // Target blob at the center, tightly wrapped in obstacles.
        for (int x = 18; x < 22; ++x) {
            for (int y = 18; y < 22; ++y) {
                for (int z = 18; z < 22; ++z) grid.set_state({x, y, z}, VoxelState::Target);
            }
        }
        for (int x = 14; x < 26; ++x) {
            for (int y = 14; y < 26; ++y) {
                for (int z = 14; z < 26; ++z) {
                    const bool shell = x < 16 || x >= 24 || y < 16 || y >= 24 || z < 16 ||
                                       z >= 24;
                    if (shell) grid.set_state({x, y, z}, VoxelState::Obstacle);
                }
            }
        }
        const auto surface = world::extract_surface(grid);
        PathNode vbar;
        vbar.config = {{0.5, 2.0, 2.0}, 0.0, 0.0};
        vbar.kind = NodeKind::Viewpoint;
        for (std::size_t i = 0; i < surface.elements.size(); ++i) {
            vbar.intended.push_back(int(i));
        }
        geom::FrustumParams fp = f.params;
        fp.r_max = 1.5;
        const auto tpl2 = repair::build_template(fp, deg2rad(30.0), deg2rad(30.0));
        const auto pool = repair::repair_viewpoint(vbar, 0, grid, surface, fp, rp, tpl2);
        CHECK(pool.empty());
    }
}

TEST_CASE("select_replacement scoring") {
    RepairFixture f;
    repair::Candidate near, far;
    near.config = {{4.0, 2.0, 1.4}, 0.0, deg2rad(90.0)};
    far.config = {{4.0, 0.6, 1.4}, 0.0, deg2rad(90.0)};
    near.covered = far.covered = f.vbar.intended;

    // Equal coverage: smaller displacement wins under the lambda_d penalty.
    const std::vector<repair::Candidate> pool{far, near};
    const auto pick = repair::select_replacement(pool, f.vbar.intended, f.vbar.config.p,
                                                 f.grid, f.surface, f.params, 5.0);
    REQUIRE(pick.has_value());
    CHECK((pick->config.p - near.config.p).norm() < 1e-12);

    // Exhaustive scoring oracle over a random pool.
    std::vector<repair::Candidate> rnd_pool;
    for (int k = 0; k < 12; ++k) {
        repair::Candidate c;
        c.config = {{uniform(1.0, 7.0), uniform(0.5, 2.5), uniform(0.6, 2.2)}, 0.0,
                    deg2rad(90.0)};
        rnd_pool.push_back(c);
    }
    const double lambda_d = 5.0;
    const auto best = repair::select_replacement(rnd_pool, f.vbar.intended, f.vbar.config.p,
                                                 f.grid, f.surface, f.params, lambda_d);
    REQUIRE(best.has_value());
    auto score_of = [&](const repair::Candidate& c) {
        int covered = 0;
        for (const int eid : f.vbar.intended) {
            if (vis::element_visible(c.config, f.surface.elements[eid], f.grid, f.params)) {
                ++covered;
            }
        }
        return double(covered) / double(f.vbar.intended.size()) -
               lambda_d * (c.config.p - f.vbar.config.p).norm();
    };
    double max_score = -1e18;
    for (const auto& c : rnd_pool) max_score = std::max(max_score, score_of(c));
    CHECK(score_of(*best) == doctest::Approx(max_score));

    // Empty pool: no replacement.
    CHECK_FALSE(repair::select_replacement({}, f.vbar.intended, f.vbar.config.p, f.grid,
                                           f.surface, f.params, 5.0)
                    .has_value());
}

TEST_CASE("complete_coverage greedy loop") {
    RepairFixture f;
    std::vector<int> target_set = f.vbar.intended;

    SUBCASE("already covered: no additions") {
        vis::CoverageSet covered(f.surface.elements.size());
        covered.bits.set();
        const auto res = repair::complete_coverage({}, {f.vbar.config.p}, target_set, covered,
                                                   f.grid, f.surface, f.params, 5.0);
        CHECK(res.added.empty());
        CHECK(res.residual.empty());
    }

    SUBCASE("single helpful candidate is added once") {
        vis::CoverageSet covered(f.surface.elements.size());
        repair::Candidate c;
        c.config = f.vbar.config;
        const std::vector<repair::Candidate> pool{c};
        const auto res = repair::complete_coverage(pool, {}, target_set, covered, f.grid,
                                                   f.surface, f.params, 5.0);
        CHECK(res.added.size() == 1);
        // Everything this viewpoint sees is gone from the residual.
        const auto cov = vis::covered_elements(c.config, f.grid, f.surface, f.params);
        for (const int eid : res.residual) CHECK_FALSE(cov.bits.test(eid));
    }

    SUBCASE("greedy picks maximize the per-iteration score") {
        vis::CoverageSet covered(f.surface.elements.size());
        std::vector<repair::Candidate> pool;
        for (int k = 0; k < 8; ++k) {
            repair::Candidate c;
            c.config = {{uniform(1.5, 6.5), uniform(0.6, 2.2), uniform(0.6, 2.2)}, 0.0,
                        deg2rad(90.0)};
            pool.push_back(c);
        }
        const double lambda_d = 0.05;  // keep coverage dominant
        const auto res = repair::complete_coverage(pool, {f.vbar.config.p}, target_set,
                                                   covered, f.grid, f.surface, f.params,
                                                   lambda_d);

        // Replay the greedy loop with an exhaustive per-iteration oracle.
        boost::dynamic_bitset<> uncovered(f.surface.elements.size());
        for (const int eid : target_set) uncovered.set(eid);
        std::vector<Eigen::Vector3d> positions{f.vbar.config.p};
        std::vector<bool> used(pool.size(), false);
        for (const auto& added : res.added) {
            double best_score = -1e18;
            std::size_t prev_unc = uncovered.count();
            CHECK(prev_unc > 0);
            int best_idx = -1;
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (used[i]) continue;
                const auto cov = vis::covered_elements(pool[i].config, f.grid, f.surface,
                                                       f.params);
                const std::size_t gain = (cov.bits & uncovered).count();
                if (gain == 0) continue;
                double d_nn = 1e18;
                for (const auto& p : positions) {
                    d_nn = std::min(d_nn, (pool[i].config.p - p).norm());
                }
                const double score = double(gain) / double(prev_unc) - lambda_d * d_nn;
                if (score > best_score) {
                    best_score = score;
                    best_idx = int(i);
                }
            }
            REQUIRE(best_idx >= 0);
            CHECK((pool[best_idx].config.p - added.config.p).norm() < 1e-12);
            used[best_idx] = true;
            const auto cov = vis::covered_elements(pool[best_idx].config, f.grid, f.surface,
                                                   f.params);
            uncovered -= cov.bits;
            positions.push_back(pool[best_idx].config.p);
            // Monotone completion: the uncovered set strictly shrinks.
            CHECK(uncovered.count() < prev_unc);
        }
    }
}
