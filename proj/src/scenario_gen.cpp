#include "visia/scenario_gen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace visia::gen {

namespace {

void fill_box(world::VoxelGrid& grid, const world::Box& b, world::VoxelState state) {
    const Eigen::Vector3i lo = grid.voxel_of(b.min.cwiseMax(grid.bounds().min));
    Eigen::Vector3d hi_pt = b.max.cwiseMin(grid.bounds().max);
    hi_pt -= Eigen::Vector3d::Constant(grid.resolution() * 1e-6);
    const Eigen::Vector3i hi = grid.voxel_of(hi_pt);
    Eigen::Vector3i v;
    for (v.x() = lo.x(); v.x() <= hi.x(); ++v.x()) {
        for (v.y() = lo.y(); v.y() <= hi.y(); ++v.y()) {
            for (v.z() = lo.z(); v.z() <= hi.z(); ++v.z()) {
                if (!grid.index_in_bounds(v)) continue;
                const Eigen::Vector3d c = grid.center_of(v);
                bool inside = true;
                for (int k = 0; k < 3; ++k) {
                    if (c[k] < b.min[k] || c[k] > b.max[k]) inside = false;
                }
                if (inside) grid.set_state(v, state);
            }
        }
    }
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    // Fixed-width mapping keeps generated scenes stable across library builds.
    const double u = double(rng() >> 11) * (1.0 / 9007199254740992.0);
    return lo + u * (hi - lo);
}

}  // namespace

ScanPath make_boustrophedon_path(const Eigen::Vector3d& lane_origin, double length,
                                 double height, int cols, int rows, double psi_deg,
                                 double spacing) {
    ScanPath path;
    const double psi = geom::normalize_angle(geom::deg2rad(psi_deg));
    std::vector<geom::CameraConfig> vps;
    for (int r = 0; r < rows; ++r) {
        const double z = lane_origin.z() + (rows > 1 ? height * r / double(rows - 1) : 0.0);
        for (int c = 0; c < cols; ++c) {
            const int cc = (r % 2 == 0) ? c : cols - 1 - c;  // serpentine sweep
            const double x =
                lane_origin.x() + (cols > 1 ? length * cc / double(cols - 1) : 0.0);
            vps.push_back({Eigen::Vector3d(x, lane_origin.y(), z), 0.0, psi});
        }
    }
    for (std::size_t i = 0; i < vps.size(); ++i) {
        if (i > 0 && spacing > 0.0) {
            const Eigen::Vector3d a = vps[i - 1].p;
            const Eigen::Vector3d b = vps[i].p;
            const double dist = (b - a).norm();
            const int n_wp = static_cast<int>(std::floor(dist / spacing));
            for (int k = 1; k <= n_wp; ++k) {
                const double f = double(k) / double(n_wp + 1);
                PathNode wp;
                wp.config = {a + f * (b - a), 0.0, psi};
                wp.kind = NodeKind::Waypoint;
                path.nodes.push_back(wp);
            }
        }
        PathNode vp;
        vp.config = vps[i];
        vp.kind = NodeKind::Viewpoint;
        path.nodes.push_back(vp);
    }
    return path;
}

world::Scenario make_wall_occluder_scenario(const WallScenarioOptions& opt) {
    world::Scenario s;
    s.resolution = 0.1;
    s.seed = opt.seed;
    s.bounds.min = {0.0, -3.5, 0.0};
    s.bounds.max = {opt.wall_length + 2.0, 3.5, 3.0};

    const double wall_x0 = 1.0;
    const double wall_x1 = wall_x0 + opt.wall_length;
    const double wall_z0 = 0.2;
    const double wall_z1 = wall_z0 + opt.wall_height;
    s.target_boxes.push_back({{wall_x0, 0.0, wall_z0}, {wall_x1, 0.1, wall_z1}});

    s.camera.alpha_h = geom::deg2rad(80.0);
    s.camera.alpha_v = geom::deg2rad(65.0);
    s.camera.r_max = opt.r_max;
    s.limits.v_max = 1.0;
    s.limits.omega_max = geom::deg2rad(20.0);
    s.lidar_range = 15.0;

    // Viewpoint lane facing the wall from y = standoff, looking toward -y.
    const double margin = 1.2;
    s.nominal_path = make_boustrophedon_path(
        {wall_x0 + margin, opt.standoff, wall_z0 + 0.5}, opt.wall_length - 2.0 * margin,
        opt.wall_height - 1.0, 4, 2, -90.0, 0.4);
    // Takeoff and retreat waypoints pulled back from the wall keep the window
    // anchors away from the contaminated lane.
    PathNode takeoff;
    takeoff.config = s.nominal_path.nodes.front().config;
    takeoff.config.p.y() += 0.8;
    takeoff.config.psi = geom::deg2rad(90.0);  // faces open space, not the wall
    takeoff.kind = NodeKind::Waypoint;
    s.nominal_path.nodes.insert(s.nominal_path.nodes.begin(), takeoff);
    PathNode retreat;
    retreat.config = s.nominal_path.nodes.back().config;
    retreat.config.p.y() += 0.8;
    retreat.config.psi = geom::deg2rad(90.0);
    retreat.kind = NodeKind::Waypoint;
    s.nominal_path.nodes.push_back(retreat);

    std::mt19937_64 rng(opt.seed * 2654435761u + 1);
    const double slot = (wall_x1 - wall_x0) / std::max(1, opt.occluders);
    for (int i = 0; i < opt.occluders; ++i) {
        const double cx = wall_x0 + slot * (i + 0.5) + uniform(rng, -0.2, 0.2);
        const double cy = uniform(rng, 1.1, 1.5);
        const double cz = uniform(rng, 1.0, 1.6);
        world::ObstacleSet o;
        o.id = "occluder_" + std::to_string(i);
        o.boxes.push_back({{cx - 0.35, cy - 0.15, cz - 0.5}, {cx + 0.35, cy + 0.15, cz + 0.5}});
        o.trigger = opt.occluders_always_visible ? world::TriggerType::Always
                                                 : world::TriggerType::Distance;
        o.trigger_param = s.lidar_range;
        s.obstacles.push_back(std::move(o));
    }
    return s;
}

SegmentScene make_corridor_scene(std::uint64_t seed, int n_pairs) {
    SegmentScene scene{world::VoxelGrid({{0.0, 0.0, 0.0}, {20.0, 3.0, 3.0}}, 0.1),
                       {},
                       0.2,
                       {}};
    scene.camera.alpha_h = geom::deg2rad(60.0);
    scene.camera.alpha_v = geom::deg2rad(45.0);
    scene.camera.r_max = 2.5;

    // Corridor side walls are the scan target; fins are newly appeared clutter.
    fill_box(scene.grid, {{0.0, 0.0, 0.0}, {20.0, 0.1, 3.0}}, world::VoxelState::Target);
    fill_box(scene.grid, {{0.0, 2.9, 0.0}, {20.0, 3.0, 3.0}}, world::VoxelState::Target);

    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 3);
    for (int i = 0; i < 4; ++i) {
        const double x = 4.0 + 4.0 * i + uniform(rng, -0.6, 0.6);
        const bool from_left = (i % 2 == 0);
        if (from_left) {
            fill_box(scene.grid, {{x, 0.1, 0.0}, {x + 0.2, 1.7, 3.0}},
                     world::VoxelState::Obstacle);
        } else {
            fill_box(scene.grid, {{x, 1.3, 0.0}, {x + 0.2, 2.9, 3.0}},
                     world::VoxelState::Obstacle);
        }
    }

    for (int i = 0; i < n_pairs; ++i) {
        geom::CameraConfig a{{uniform(rng, 0.6, 1.8), uniform(rng, 1.0, 2.0),
                              uniform(rng, 1.0, 2.0)},
                             0.0,
                             0.0};
        geom::CameraConfig b{{uniform(rng, 18.2, 19.4), uniform(rng, 1.0, 2.0),
                              uniform(rng, 1.0, 2.0)},
                             0.0,
                             0.0};
        scene.pairs.emplace_back(a, b);
    }
    return scene;
}

SegmentScene make_forest_scene(std::uint64_t seed, int n_pairs) {
    SegmentScene scene{world::VoxelGrid({{0.0, 0.0, 0.0}, {15.0, 15.0, 2.1}}, 0.15),
                       {},
                       0.2,
                       {}};
    scene.camera.alpha_h = geom::deg2rad(60.0);
    scene.camera.alpha_v = geom::deg2rad(45.0);
    scene.camera.r_max = 2.5;

    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 7);
    std::vector<Eigen::Vector2d> centers;
    int attempts = 0;
    while (static_cast<int>(centers.size()) < 24 && attempts < 4000) {
        ++attempts;
        const Eigen::Vector2d c(uniform(rng, 2.0, 13.0), uniform(rng, 2.0, 13.0));
        bool ok = true;
        for (const auto& other : centers) {
            if ((c - other).norm() < 1.9) ok = false;
        }
        // Keep the start/goal corners open.
        if ((c - Eigen::Vector2d(1.2, 1.2)).norm() < 2.0) ok = false;
        if ((c - Eigen::Vector2d(13.8, 13.8)).norm() < 2.0) ok = false;
        if (ok) centers.push_back(c);
    }
    for (const auto& c : centers) {
        fill_box(scene.grid, {{c.x() - 0.15, c.y() - 0.15, 0.0}, {c.x() + 0.15, c.y() + 0.15, 2.1}},
                 world::VoxelState::Obstacle);
    }

    const double diag_yaw = geom::deg2rad(45.0);
    for (int i = 0; i < n_pairs; ++i) {
        geom::CameraConfig a{{uniform(rng, 0.8, 1.6), uniform(rng, 0.8, 1.6),
                              uniform(rng, 0.8, 1.4)},
                             0.0,
                             diag_yaw};
        geom::CameraConfig b{{uniform(rng, 13.4, 14.2), uniform(rng, 13.4, 14.2),
                              uniform(rng, 0.8, 1.4)},
                             0.0,
                             diag_yaw};
        scene.pairs.emplace_back(a, b);
    }
    return scene;
}

}  // namespace visia::gen
