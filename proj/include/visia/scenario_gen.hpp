// Procedural desk-scale scene builders: a free-standing wall scan scenario
// with hidden occluders, and corridor/pillar-field grids for segment-search
// evaluation. All generation is seeded and deterministic.
#pragma once

#include "visia/scenario.hpp"

#include <cstdint>
#include <vector>

namespace visia::gen {

struct WallScenarioOptions {
    std::uint64_t seed = 0;
    int occluders = 3;            // hidden boxes between the lane and the wall
    double wall_length = 8.0;     // meters along x
    double wall_height = 2.4;
    double standoff = 2.5;        // nominal viewpoint distance from the wall
    double r_max = 3.5;
    bool occluders_always_visible = false;
};

// Free-standing wall in the middle of the volume, a boustrophedon viewpoint
// lane facing it, and seeded occluder boxes dropped between lane and wall.
world::Scenario make_wall_occluder_scenario(const WallScenarioOptions& opt);

// Simple boustrophedon lawnmower lane over a vertical wall face: viewpoints on
// a row/column grid, densified with waypoints every `spacing` meters.
ScanPath make_boustrophedon_path(const Eigen::Vector3d& lane_origin, double length,
                                 double height, int cols, int rows, double psi_deg,
                                 double spacing);

struct SegmentScene {
    world::VoxelGrid grid;
    geom::FrustumParams camera;
    double d_min = 0.2;
    std::vector<std::pair<geom::CameraConfig, geom::CameraConfig>> pairs;
};

// 20 m corridor whose walls are target-labeled (interior scan setting) with
// obstacle fins jutting from the sides; seeded start/goal pairs down the axis.
SegmentScene make_corridor_scene(std::uint64_t seed, int n_pairs);

// Scattered-pillar field (obstacle pillars, no target) with seeded diagonal
// start/goal pairs.
SegmentScene make_forest_scene(std::uint64_t seed, int n_pairs);

}  // namespace visia::gen
