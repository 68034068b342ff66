// Visibility predicates: per-element visibility, FoV cleanliness (occ),
// viewpoint qualification, self-occlusion filtering and coverage accounting.
#pragma once

#include "visia/geom.hpp"
#include "visia/path.hpp"
#include "visia/world.hpp"

#include <boost/dynamic_bitset.hpp>

#include <span>
#include <vector>

namespace visia::vis {

using ElementId = int;

struct CoverageSet {
    boost::dynamic_bitset<> bits;

    explicit CoverageSet(std::size_t n = 0) : bits(n) {}
    int count() const { return static_cast<int>(bits.count()); }
    double ratio() const { return bits.empty() ? 0.0 : double(bits.count()) / double(bits.size()); }
    void merge(const CoverageSet& o) { bits |= o.bits; }
};

// Inside the frustum and the ray from the camera is unblocked (the element's
// own voxel never blocks).
bool element_visible(const geom::CameraConfig& q, const world::SurfaceElement& e,
                     const world::VoxelGrid& grid, const geom::FrustumParams& params);

// At least one obstacle-labeled voxel center inside the frustum. Target voxels
// never trigger occ.
bool occ(const geom::CameraConfig& q, const world::VoxelGrid& grid,
         const geom::FrustumParams& params);

struct Classification {
    std::vector<int> qualified;  // path node indices, in path order
    std::vector<int> invalid;
};

// Qualified <=> clearance >= d_min, occ-free, and every intended element
// ray-visible. Throws std::invalid_argument when a viewpoint has no intended
// subset attached.
Classification classify_viewpoints(const ScanPath& path, const world::VoxelGrid& grid,
                                   const world::SurfaceModel& surface,
                                   const geom::FrustumParams& params, double d_min);

// S_i^vis: intended elements whose ray from q is not blocked by target
// geometry. Obstacle blockage is handled separately by the shift bound.
std::vector<ElementId> visible_subset(const geom::CameraConfig& q,
                                      std::span<const ElementId> intended,
                                      const world::VoxelGrid& grid,
                                      const world::SurfaceModel& surface);

// Union of element_visible over the viewpoints, as a bitset over all elements.
CoverageSet coverage(std::span<const geom::CameraConfig> viewpoints,
                     const world::VoxelGrid& grid, const world::SurfaceModel& surface,
                     const geom::FrustumParams& params);

// Elements of the whole surface visible from one configuration; used by
// selection scoring and coverage completion.
CoverageSet covered_elements(const geom::CameraConfig& q, const world::VoxelGrid& grid,
                             const world::SurfaceModel& surface,
                             const geom::FrustumParams& params);

}  // namespace visia::vis
