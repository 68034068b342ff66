#include "visia/world.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

namespace visia::world {

namespace {

using BPoint = bg::model::point<double, 3, bg::cs::cartesian>;

BPoint to_bpoint(const Eigen::Vector3d& v) { return BPoint(v.x(), v.y(), v.z()); }

constexpr int kBlockShift = 3;  // 8^3 voxels per block

std::uint64_t block_key(const Eigen::Vector3i& v) {
    const auto bx = static_cast<std::uint64_t>(v.x() >> kBlockShift) & 0x1fffff;
    const auto by = static_cast<std::uint64_t>(v.y() >> kBlockShift) & 0x1fffff;
    const auto bz = static_cast<std::uint64_t>(v.z() >> kBlockShift) & 0x1fffff;
    return (bx << 42) | (by << 21) | bz;
}

}  // namespace

struct VoxelGrid::Index {
    struct Block {
        Eigen::Vector3d lo{0, 0, 0};
        Eigen::Vector3d hi{0, 0, 0};
        std::vector<Eigen::Vector3i> voxels;
    };
    // Blocks of occupied voxels per label for frustum culling.
    std::unordered_map<std::uint64_t, Block> target_blocks;
    std::unordered_map<std::uint64_t, Block> obstacle_blocks;
    // Nearest-neighbor trees over voxel centers.
    bgi::rtree<BPoint, bgi::rstar<16>> occupied_tree;
    bgi::rtree<BPoint, bgi::rstar<16>> obstacle_tree;
};

VoxelGrid::VoxelGrid(const Aabb& bounds, double resolution) : bounds_(bounds), res_(resolution) {
    if (resolution <= 0.0) throw std::invalid_argument("resolution must be positive");
    for (int i = 0; i < 3; ++i) {
        const double extent = bounds.max[i] - bounds.min[i];
        if (extent <= 0.0) throw std::invalid_argument("bounds must have positive extent");
        dims_[i] = std::max<int>(1, static_cast<int>(std::llround(extent / resolution)));
        bounds_.max[i] = bounds_.min[i] + dims_[i] * resolution;  // snap to whole voxels
    }
    cells_.assign(static_cast<std::size_t>(dims_.x()) * dims_.y() * dims_.z(),
                  VoxelState::Unknown);
}

bool VoxelGrid::in_bounds(const Eigen::Vector3d& p) const {
    for (int i = 0; i < 3; ++i) {
        if (p[i] < bounds_.min[i] || p[i] >= bounds_.max[i]) return false;
    }
    return true;
}

bool VoxelGrid::index_in_bounds(const Eigen::Vector3i& v) const {
    for (int i = 0; i < 3; ++i) {
        if (v[i] < 0 || v[i] >= dims_[i]) return false;
    }
    return true;
}

Eigen::Vector3i VoxelGrid::voxel_of(const Eigen::Vector3d& p) const {
    Eigen::Vector3i v;
    for (int i = 0; i < 3; ++i) {
        v[i] = static_cast<int>(std::floor((p[i] - bounds_.min[i]) / res_));
    }
    return v;
}

Eigen::Vector3d VoxelGrid::center_of(const Eigen::Vector3i& v) const {
    return bounds_.min + (v.cast<double>() + Eigen::Vector3d::Constant(0.5)) * res_;
}

VoxelState VoxelGrid::state(const Eigen::Vector3i& v) const {
    if (!index_in_bounds(v)) return VoxelState::Unknown;
    return cells_[linear(v)];
}

VoxelState VoxelGrid::state_at(const Eigen::Vector3d& p) const { return state(voxel_of(p)); }

void VoxelGrid::set_state(const Eigen::Vector3i& v, VoxelState s) {
    if (!index_in_bounds(v)) throw std::out_of_range("voxel index out of bounds");
    VoxelState& cell = cells_[linear(v)];
    if (cell == s) return;
    if (is_occupied(cell)) --occupied_count_;
    if (is_occupied(s)) ++occupied_count_;
    cell = s;
    ++version_;
}

const VoxelGrid::Index& VoxelGrid::index() const {
    if (index_ && index_version_ == version_) return *index_;
    auto idx = std::make_shared<Index>();
    std::vector<BPoint> occ_pts;
    std::vector<BPoint> obs_pts;
    occ_pts.reserve(occupied_count_);
    Eigen::Vector3i v;
    for (v.z() = 0; v.z() < dims_.z(); ++v.z()) {
        for (v.y() = 0; v.y() < dims_.y(); ++v.y()) {
            for (v.x() = 0; v.x() < dims_.x(); ++v.x()) {
                const VoxelState s = cells_[linear(v)];
                if (!is_occupied(s)) continue;
                const Eigen::Vector3d c = center_of(v);
                occ_pts.push_back(to_bpoint(c));
                auto& blocks =
                    (s == VoxelState::Target) ? idx->target_blocks : idx->obstacle_blocks;
                auto& blk = blocks[block_key(v)];
                if (blk.voxels.empty()) {
                    blk.lo = c;
                    blk.hi = c;
                } else {
                    blk.lo = blk.lo.cwiseMin(c);
                    blk.hi = blk.hi.cwiseMax(c);
                }
                blk.voxels.push_back(v);
                if (s == VoxelState::Obstacle) obs_pts.push_back(to_bpoint(c));
            }
        }
    }
    idx->occupied_tree = bgi::rtree<BPoint, bgi::rstar<16>>(occ_pts.begin(), occ_pts.end());
    idx->obstacle_tree = bgi::rtree<BPoint, bgi::rstar<16>>(obs_pts.begin(), obs_pts.end());
    index_ = std::move(idx);
    index_version_ = version_;
    return *index_;
}

RayHit VoxelGrid::raycast(const Eigen::Vector3d& from, const Eigen::Vector3d& to,
                          Label blockers) const {
    RayHit hit;
    const Eigen::Vector3i start = voxel_of(from);
    const Eigen::Vector3i end = voxel_of(to);
    if (start == end) return hit;

    const Eigen::Vector3d d = to - from;
    Eigen::Vector3i v = start;
    Eigen::Vector3i step{0, 0, 0};
    Eigen::Vector3d t_max, t_delta;
    for (int i = 0; i < 3; ++i) {
        if (d[i] > 0.0) {
            step[i] = 1;
            const double boundary = bounds_.min[i] + (v[i] + 1) * res_;
            t_max[i] = (boundary - from[i]) / d[i];
            t_delta[i] = res_ / d[i];
        } else if (d[i] < 0.0) {
            step[i] = -1;
            const double boundary = bounds_.min[i] + v[i] * res_;
            t_max[i] = (boundary - from[i]) / d[i];
            t_delta[i] = -res_ / d[i];
        } else {
            t_max[i] = std::numeric_limits<double>::infinity();
            t_delta[i] = std::numeric_limits<double>::infinity();
        }
    }

    const bool skip_end_target = state(end) == VoxelState::Target;
    // Amanatides-Woo traversal; ties broken x, then y, then z.
    while (true) {
        int axis = 0;
        if (t_max[1] < t_max[axis]) axis = 1;
        if (t_max[2] < t_max[axis]) axis = 2;
        if (t_max[axis] > 1.0 && v != end) break;  // numeric guard: past the segment
        v[axis] += step[axis];
        t_max[axis] += t_delta[axis];
        if (!index_in_bounds(v)) break;
        if (v == end) {
            if (skip_end_target) break;
            const VoxelState s = cells_[linear(v)];
            if (label_matches(blockers, s)) {
                hit.blocked = true;
                hit.hit_point = center_of(v);
                hit.hit_label = s;
            }
            break;
        }
        const VoxelState s = cells_[linear(v)];
        if (label_matches(blockers, s)) {
            hit.blocked = true;
            hit.hit_point = center_of(v);
            hit.hit_label = s;
            break;
        }
    }
    return hit;
}

double VoxelGrid::min_clearance(const Eigen::Vector3d& x) const {
    if (occupied_count_ == 0) return kInfiniteClearance;
    const Index& idx = index();
    BPoint nearest;
    idx.occupied_tree.query(bgi::nearest(to_bpoint(x), 1), &nearest);
    const Eigen::Vector3d c(bg::get<0>(nearest), bg::get<1>(nearest), bg::get<2>(nearest));
    const double half_diag = 0.5 * res_ * std::sqrt(3.0);
    return std::max(0.0, (x - c).norm() - half_diag);
}

namespace {

// True when the whole box lies outside one of the frustum planes.
bool box_outside(const geom::HalfSpaceSet& hs, const Eigen::Vector3d& lo,
                 const Eigen::Vector3d& hi) {
    for (const auto& pl : hs.planes) {
        double m = pl.h;
        for (int i = 0; i < 3; ++i) {
            m += pl.n[i] * (pl.n[i] >= 0.0 ? lo[i] : hi[i]);
        }
        if (m > 0.0) return true;  // min over box of n.x + h is positive
    }
    return false;
}

}  // namespace

std::vector<Eigen::Vector3i> VoxelGrid::voxel_indices_in_frustum(const geom::HalfSpaceSet& hs,
                                                                 Label l) const {
    std::vector<Eigen::Vector3i> out;
    const Index& idx = index();
    const double half = 0.5 * res_;
    const Eigen::Vector3d pad = Eigen::Vector3d::Constant(half);
    auto scan = [&](const std::unordered_map<std::uint64_t, Index::Block>& blocks) {
        for (const auto& [key, blk] : blocks) {
            (void)key;
            if (box_outside(hs, blk.lo - pad, blk.hi + pad)) continue;
            for (const auto& v : blk.voxels) {
                if (geom::point_in_frustum(hs, center_of(v))) out.push_back(v);
            }
        }
    };
    if (l == Label::Target || l == Label::Any) scan(idx.target_blocks);
    if (l == Label::Obstacle || l == Label::Any) scan(idx.obstacle_blocks);
    std::sort(out.begin(), out.end(), [](const Eigen::Vector3i& a, const Eigen::Vector3i& b) {
        return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
    });
    return out;
}

std::vector<Eigen::Vector3d> VoxelGrid::voxels_in_frustum(const geom::HalfSpaceSet& hs,
                                                          Label l) const {
    std::vector<Eigen::Vector3d> out;
    for (const auto& v : voxel_indices_in_frustum(hs, l)) out.push_back(center_of(v));
    return out;
}

bool VoxelGrid::any_in_frustum(const geom::HalfSpaceSet& hs, Label l) const {
    const Index& idx = index();
    const double half = 0.5 * res_;
    const Eigen::Vector3d pad = Eigen::Vector3d::Constant(half);
    auto scan = [&](const std::unordered_map<std::uint64_t, Index::Block>& blocks) {
        for (const auto& [key, blk] : blocks) {
            (void)key;
            if (box_outside(hs, blk.lo - pad, blk.hi + pad)) continue;
            for (const auto& v : blk.voxels) {
                if (geom::point_in_frustum(hs, center_of(v))) return true;
            }
        }
        return false;
    };
    if ((l == Label::Target || l == Label::Any) && scan(idx.target_blocks)) return true;
    if ((l == Label::Obstacle || l == Label::Any) && scan(idx.obstacle_blocks)) return true;
    return false;
}

std::vector<Eigen::Vector3d> VoxelGrid::local_voxels(const Eigen::Vector3d& p, double radius,
                                                     int cap) const {
    std::vector<Eigen::Vector3d> out;
    if (radius <= 0.0 || cap <= 0) return out;
    const Index& idx = index();
    std::vector<BPoint> found;
    idx.obstacle_tree.query(bgi::nearest(to_bpoint(p), static_cast<unsigned>(cap)),
                            std::back_inserter(found));
    for (const auto& bp : found) {
        Eigen::Vector3d c(bg::get<0>(bp), bg::get<1>(bp), bg::get<2>(bp));
        if ((c - p).norm() <= radius) out.push_back(c);
    }
    std::sort(out.begin(), out.end(), [&](const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
        const double da = (a - p).squaredNorm();
        const double db = (b - p).squaredNorm();
        if (da != db) return da < db;
        return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
    });
    return out;
}

void VoxelGrid::for_each_occupied(
    const std::function<void(const Eigen::Vector3i&, VoxelState)>& fn) const {
    Eigen::Vector3i v;
    for (v.z() = 0; v.z() < dims_.z(); ++v.z()) {
        for (v.y() = 0; v.y() < dims_.y(); ++v.y()) {
            for (v.x() = 0; v.x() < dims_.x(); ++v.x()) {
                const VoxelState s = cells_[linear(v)];
                if (is_occupied(s)) fn(v, s);
            }
        }
    }
}

int SurfaceModel::element_at(const VoxelGrid& grid, const Eigen::Vector3i& v) const {
    if (!grid.index_in_bounds(v)) return -1;
    const std::size_t lin = static_cast<std::size_t>(v.x()) +
                            static_cast<std::size_t>(grid.dims().x()) *
                                (static_cast<std::size_t>(v.y()) +
                                 static_cast<std::size_t>(grid.dims().y()) *
                                     static_cast<std::size_t>(v.z()));
    if (lin >= voxel_to_element.size()) return -1;
    return voxel_to_element[lin];
}

SurfaceModel extract_surface(const VoxelGrid& grid) {
    SurfaceModel model;
    model.element_size = grid.resolution();
    model.voxel_to_element.assign(
        static_cast<std::size_t>(grid.dims().x()) * grid.dims().y() * grid.dims().z(), -1);

    static const std::array<Eigen::Vector3i, 6> faces = {
        Eigen::Vector3i{1, 0, 0},  Eigen::Vector3i{-1, 0, 0}, Eigen::Vector3i{0, 1, 0},
        Eigen::Vector3i{0, -1, 0}, Eigen::Vector3i{0, 0, 1},  Eigen::Vector3i{0, 0, -1}};

    Eigen::Vector3i v;
    for (v.z() = 0; v.z() < grid.dims().z(); ++v.z()) {
        for (v.y() = 0; v.y() < grid.dims().y(); ++v.y()) {
            for (v.x() = 0; v.x() < grid.dims().x(); ++v.x()) {
                if (grid.state(v) != VoxelState::Target) continue;
                Eigen::Vector3d n = Eigen::Vector3d::Zero();
                Eigen::Vector3d first_open = Eigen::Vector3d::Zero();
                bool shell = false;
                for (const auto& f : faces) {
                    const Eigen::Vector3i nb = v + f;
                    if (grid.state(nb) != VoxelState::Target) {
                        if (!shell) first_open = f.cast<double>();
                        shell = true;
                        n += f.cast<double>();
                    }
                }
                if (!shell) continue;  // interior voxels are never observable
                if (n.norm() < 1e-9) n = first_open;  // opposing open faces cancel
                n.normalize();
                const int id = static_cast<int>(model.elements.size());
                model.elements.push_back(SurfaceElement{grid.center_of(v), n});
                const std::size_t lin = static_cast<std::size_t>(v.x()) +
                                        static_cast<std::size_t>(grid.dims().x()) *
                                            (static_cast<std::size_t>(v.y()) +
                                             static_cast<std::size_t>(grid.dims().y()) *
                                                 static_cast<std::size_t>(v.z()));
                model.voxel_to_element[lin] = id;
            }
        }
    }
    return model;
}

}  // namespace visia::world
