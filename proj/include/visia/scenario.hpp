// Scenario description, JSON (de)serialization and the closed-loop world it
// instantiates: online map, ground-truth map, target surface and reveal state.
#pragma once

#include "visia/geom.hpp"
#include "visia/path.hpp"
#include "visia/world.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace visia::world {

struct Box {
    Eigen::Vector3d min{0, 0, 0};
    Eigen::Vector3d max{0, 0, 0};
};

enum class TriggerType { Always, Distance };

struct ObstacleSet {
    std::string id;
    std::vector<Box> boxes;
    std::vector<Eigen::Vector3i> voxels;
    TriggerType trigger = TriggerType::Distance;
    double trigger_param = std::numeric_limits<double>::infinity();
};

struct KinematicLimits {
    double v_max = 1.0;                       // m/s
    double omega_max = geom::deg2rad(20.0);   // rad/s
};

struct Scenario {
    double resolution = 0.1;
    Aabb bounds;
    std::vector<Box> target_boxes;
    std::vector<Eigen::Vector3i> target_voxels;
    std::vector<ObstacleSet> obstacles;
    ScanPath nominal_path;  // intended subsets are filled by build_world
    geom::FrustumParams camera;
    KinematicLimits limits;
    double lidar_range = 15.0;
    std::uint64_t seed = 0;
};

// Load/validation failures carry the offending field path.
class ScenarioError : public std::runtime_error {
public:
    ScenarioError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& s, const std::filesystem::path& path);

// String-level entry points used by the CLI for dotted-key overrides.
Scenario scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const Scenario& s);

bool scenario_equal(const Scenario& a, const Scenario& b);

// Per-obstacle-set reveal bookkeeping (voxels reveal monotonically).
struct HiddenSet {
    std::string id;
    TriggerType trigger = TriggerType::Distance;
    double trigger_param = std::numeric_limits<double>::infinity();
    std::vector<Eigen::Vector3i> voxels;
    std::vector<bool> revealed;
    std::size_t revealed_count = 0;
};

struct World {
    VoxelGrid online;  // what the planner sees: target known a priori, obstacles revealed
    VoxelGrid truth;   // everything placed; used for metric evaluation only
    SurfaceModel surface;
    ScanPath nominal;  // nominal path with intended subsets attached
    std::vector<HiddenSet> hidden;
    double lidar_range = 15.0;
};

// Instantiates grids and surface, computes intended subsets on the target-only
// map, validates invariants (throws ScenarioError), applies always-on sets.
World build_world(const Scenario& s);

// Reveal every hidden obstacle voxel within lidar range (and the set's trigger
// distance) that has an unblocked straight line to the sensor. Visibility is
// evaluated against the grid state at call entry. Returns newly occupied count.
int reveal(World& w, const Eigen::Vector3d& sensor);

}  // namespace visia::world
