#include "visia/vis.hpp"

#include <stdexcept>

namespace visia::vis {

bool element_visible(const geom::CameraConfig& q, const world::SurfaceElement& e,
                     const world::VoxelGrid& grid, const geom::FrustumParams& params) {
    const geom::HalfSpaceSet hs = geom::make_frustum(q, params);
    if (!geom::point_in_frustum(hs, e.pos)) return false;
    return !grid.raycast(q.p, e.pos, world::Label::Any).blocked;
}

bool occ(const geom::CameraConfig& q, const world::VoxelGrid& grid,
         const geom::FrustumParams& params) {
    const geom::HalfSpaceSet hs = geom::make_frustum(q, params);
    return grid.any_in_frustum(hs, world::Label::Obstacle);
}

Classification classify_viewpoints(const ScanPath& path, const world::VoxelGrid& grid,
                                   const world::SurfaceModel& surface,
                                   const geom::FrustumParams& params, double d_min) {
    Classification out;
    for (int i = 0; i < path.size(); ++i) {
        const PathNode& node = path.nodes[i];
        if (node.kind != NodeKind::Viewpoint) continue;
        if (node.intended.empty()) {
            throw std::invalid_argument("viewpoint " + std::to_string(i) +
                                        " has no intended subset");
        }
        bool ok = grid.min_clearance(node.config.p) >= d_min && !occ(node.config, grid, params);
        if (ok) {
            for (const ElementId eid : node.intended) {
                if (!element_visible(node.config, surface.elements[eid], grid, params)) {
                    ok = false;
                    break;
                }
            }
        }
        (ok ? out.qualified : out.invalid).push_back(i);
    }
    return out;
}

std::vector<ElementId> visible_subset(const geom::CameraConfig& q,
                                      std::span<const ElementId> intended,
                                      const world::VoxelGrid& grid,
                                      const world::SurfaceModel& surface) {
    std::vector<ElementId> out;
    out.reserve(intended.size());
    for (const ElementId eid : intended) {
        const auto hit = grid.raycast(q.p, surface.elements[eid].pos, world::Label::Target);
        if (!hit.blocked) out.push_back(eid);
    }
    return out;
}

CoverageSet covered_elements(const geom::CameraConfig& q, const world::VoxelGrid& grid,
                             const world::SurfaceModel& surface,
                             const geom::FrustumParams& params) {
    CoverageSet cov(surface.elements.size());
    const geom::HalfSpaceSet hs = geom::make_frustum(q, params);
    for (const auto& v : grid.voxel_indices_in_frustum(hs, world::Label::Target)) {
        const int eid = surface.element_at(grid, v);
        if (eid < 0) continue;
        if (!grid.raycast(q.p, surface.elements[eid].pos, world::Label::Any).blocked) {
            cov.bits.set(eid);
        }
    }
    return cov;
}

CoverageSet coverage(std::span<const geom::CameraConfig> viewpoints,
                     const world::VoxelGrid& grid, const world::SurfaceModel& surface,
                     const geom::FrustumParams& params) {
    CoverageSet cov(surface.elements.size());
    for (const auto& q : viewpoints) cov.merge(covered_elements(q, grid, surface, params));
    return cov;
}

}  // namespace visia::vis
