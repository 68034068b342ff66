// Voxel occupancy world with target/obstacle labeling, raycasting, clearance
// and frustum queries.
#pragma once

#include "visia/geom.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

namespace visia::world {

enum class VoxelState : std::uint8_t { Unknown = 0, Free = 1, Target = 2, Obstacle = 3 };

inline bool is_occupied(VoxelState s) {
    return s == VoxelState::Target || s == VoxelState::Obstacle;
}

// Which occupied labels act as blockers / query targets.
enum class Label : std::uint8_t { Target = 1, Obstacle = 2, Any = 3 };

inline bool label_matches(Label l, VoxelState s) {
    if (s == VoxelState::Target) return l == Label::Target || l == Label::Any;
    if (s == VoxelState::Obstacle) return l == Label::Obstacle || l == Label::Any;
    return false;
}

struct Aabb {
    Eigen::Vector3d min{0, 0, 0};
    Eigen::Vector3d max{0, 0, 0};
};

struct RayHit {
    bool blocked = false;
    Eigen::Vector3d hit_point{0, 0, 0};  // voxel center, valid iff blocked
    VoxelState hit_label = VoxelState::Unknown;
};

inline constexpr double kInfiniteClearance = std::numeric_limits<double>::infinity();

class VoxelGrid {
public:
    VoxelGrid() = default;
    VoxelGrid(const Aabb& bounds, double resolution);

    double resolution() const { return res_; }
    const Aabb& bounds() const { return bounds_; }
    const Eigen::Vector3i& dims() const { return dims_; }
    std::uint64_t version() const { return version_; }
    std::size_t occupied_count() const { return occupied_count_; }

    bool in_bounds(const Eigen::Vector3d& p) const;
    bool index_in_bounds(const Eigen::Vector3i& v) const;
    Eigen::Vector3i voxel_of(const Eigen::Vector3d& p) const;
    Eigen::Vector3d center_of(const Eigen::Vector3i& v) const;

    VoxelState state(const Eigen::Vector3i& v) const;
    VoxelState state_at(const Eigen::Vector3d& p) const;
    void set_state(const Eigen::Vector3i& v, VoxelState s);

    // First blocking voxel strictly between the endpoints. The voxel containing
    // `from` never blocks; the voxel containing `to` is skipped when it is
    // target-labeled (an element must not occlude itself).
    RayHit raycast(const Eigen::Vector3d& from, const Eigen::Vector3d& to,
                   Label blockers = Label::Any) const;

    // Distance to the nearest occupied voxel center minus half the voxel
    // diagonal, floored at 0. Infinite when nothing is occupied.
    double min_clearance(const Eigen::Vector3d& x) const;

    // Occupied voxel centers of the given label inside the frustum.
    std::vector<Eigen::Vector3d> voxels_in_frustum(const geom::HalfSpaceSet& hs, Label l) const;
    std::vector<Eigen::Vector3i> voxel_indices_in_frustum(const geom::HalfSpaceSet& hs,
                                                          Label l) const;
    bool any_in_frustum(const geom::HalfSpaceSet& hs, Label l) const;

    // Obstacle voxel centers within `radius` of `p`, nearest-first, at most `cap`.
    std::vector<Eigen::Vector3d> local_voxels(const Eigen::Vector3d& p, double radius,
                                              int cap = 64) const;

    void for_each_occupied(const std::function<void(const Eigen::Vector3i&, VoxelState)>& fn) const;

private:
    struct Index;  // lazy spatial acceleration, rebuilt on version change

    std::size_t linear(const Eigen::Vector3i& v) const {
        return static_cast<std::size_t>(v.x()) +
               static_cast<std::size_t>(dims_.x()) *
                   (static_cast<std::size_t>(v.y()) +
                    static_cast<std::size_t>(dims_.y()) * static_cast<std::size_t>(v.z()));
    }
    const Index& index() const;

    Aabb bounds_;
    double res_ = 0.1;
    Eigen::Vector3i dims_{0, 0, 0};
    std::vector<VoxelState> cells_;
    std::size_t occupied_count_ = 0;
    std::uint64_t version_ = 0;
    mutable std::shared_ptr<Index> index_;
    mutable std::uint64_t index_version_ = ~0ull;
};

struct SurfaceElement {
    Eigen::Vector3d pos;
    Eigen::Vector3d normal;
};

// Discretized target surface: the shell of target-labeled voxels.
struct SurfaceModel {
    std::vector<SurfaceElement> elements;
    double element_size = 0.1;
    std::vector<int> voxel_to_element;  // linear voxel index -> element id, -1 if none

    int element_at(const VoxelGrid& grid, const Eigen::Vector3i& v) const;
};

SurfaceModel extract_surface(const VoxelGrid& grid);

}  // namespace visia::world
