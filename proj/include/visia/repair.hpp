// Level-I viewpoint repair: FoV-truncated spherical sampling, analytic shift
// refinement along the viewing ray, angular-margin attitude refinement, greedy
// replacement selection and coverage-equivalent set completion.
#pragma once

#include "visia/geom.hpp"
#include "visia/path.hpp"
#include "visia/vis.hpp"
#include "visia/world.hpp"

#include <optional>
#include <span>
#include <vector>

namespace visia::repair {

using vis::ElementId;

struct DirectionTemplate {
    struct Dir {
        double theta;
        double psi;
        Eigen::Vector3d u;  // unit ray in the canonical frame (forward +x)
    };
    std::vector<Dir> dirs;
    double dtheta = 0.0;
    double dpsi = 0.0;
};

// All grid offsets theta = n*dtheta in (-alpha_v, alpha_v), psi = m*dpsi in
// (-alpha_h, alpha_h), open bounds, (0, 0) included.
DirectionTemplate build_template(const geom::FrustumParams& params, double dtheta, double dpsi);

// Geometric median by Weiszfeld iteration from the centroid (50 iterations or
// step < 1e-6 m). Throws std::invalid_argument on an empty set.
Eigen::Vector3d anchor(std::span<const Eigen::Vector3d> points);

// Candidate positions on a sphere of radius r_max around the anchor, oriented
// by the invalid viewpoint's viewing direction; each candidate looks at the
// anchor with pitch clamped to gimbal limits.
std::vector<geom::CameraConfig> instantiate_candidates(const geom::CameraConfig& vbar,
                                                       const Eigen::Vector3d& anchor_point,
                                                       const DirectionTemplate& tpl,
                                                       const geom::FrustumParams& params);

inline constexpr double kInfeasibleShift = std::numeric_limits<double>::infinity();

// Minimum shift along d expelling every sample in o_in from the frustum with
// margin d_min: s_lb = max_o min_{m: n.d<0} (d_min - kappa_m(o)) / (-n.d).
// Returns kInfeasibleShift when some sample has no expelling plane.
double s_lower_bound(const geom::HalfSpaceSet& hs, const Eigen::Vector3d& d,
                     std::span<const Eigen::Vector3d> o_in, double d_min);

struct BoundInterval {
    ElementId id = -1;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool empty() const { return lo > hi; }
};

// 1D shift interval along d for which the element stays inside the frustum.
BoundInterval element_interval(const Eigen::Vector3d& e, const geom::HalfSpaceSet& hs,
                               const Eigen::Vector3d& d);

struct ShiftResult {
    double s_star = 0.0;
    int count = 0;
};

// Smallest s >= s_lb maximizing interval overlap, by an endpoint sweep.
ShiftResult optimal_shift(std::span<const BoundInterval> intervals, double s_lb);

// Admissible attitude margins before a nearby obstacle enters the FoV
// (Eq.-style: min over samples of |bearing| - half-angle, clamped to
// [0, eta_max]); (eta_max, eta_max) when no samples.
std::pair<double, double> angular_margins(const geom::CameraConfig& q,
                                          std::span<const Eigen::Vector3d> o_nb,
                                          const geom::FrustumParams& params, double eta_max);

struct RepairParams {
    double d_min = 0.2;
    double lambda_d = 5.0;
    double dtheta = geom::deg2rad(15.0);
    double dpsi = geom::deg2rad(15.0);
    double eta_max = geom::deg2rad(30.0);
    int n_bis = 10;
    double local_radius = 3.0;  // neighborhood for boundary obstacle samples
    bool clean_sensing = true;  // false reproduces the clearance-only baseline
};

// Coordinate-wise bisection (yaw then pitch, n_bis shrink steps each) that
// maximizes the count of s_vis elements inside the frustum, subject to
// occ = false, within [psi +- eta_h] x [theta +- eta_v]. Never returns an
// occluded attitude and never loses coverage relative to the input.
std::pair<double, double> refine_attitude(const geom::CameraConfig& q,
                                          std::pair<double, double> etas,
                                          std::span<const ElementId> s_vis,
                                          const world::VoxelGrid& grid,
                                          const world::SurfaceModel& surface,
                                          const geom::FrustumParams& params, int n_bis);

struct Candidate {
    geom::CameraConfig config;
    int source = -1;             // path node index of the invalid viewpoint
    double s_lb = 0.0;
    double s_star = 0.0;
    std::vector<ElementId> covered;  // s_vis elements inside the final frustum
};

// Steps (1)-(3) for one invalid viewpoint; the pool may legally be empty.
std::vector<Candidate> repair_viewpoint(const PathNode& vbar, int node_index,
                                        const world::VoxelGrid& grid,
                                        const world::SurfaceModel& surface,
                                        const geom::FrustumParams& fparams,
                                        const RepairParams& rparams,
                                        const DirectionTemplate& tpl);

// One replacement per pool: argmax |Cov(v) n S_i| / |S_i| - lambda_d * ||p - p_bar||,
// coverage counted with occlusion-free visibility. Ties break toward smaller
// displacement, then lexicographic position. nullopt for empty pools.
std::optional<Candidate> select_replacement(std::span<const Candidate> pool,
                                            std::span<const ElementId> intended,
                                            const Eigen::Vector3d& p_nominal,
                                            const world::VoxelGrid& grid,
                                            const world::SurfaceModel& surface,
                                            const geom::FrustumParams& fparams, double lambda_d);

struct CompletionResult {
    std::vector<Candidate> added;
    std::vector<ElementId> residual;  // still uncovered after completion
};

// Greedy auxiliary selection: argmax |Delta(v)|/|U| - lambda_d * d_nn(v, V_cur)
// while the uncovered set shrinks.
CompletionResult complete_coverage(std::span<const Candidate> pool_union,
                                   std::vector<Eigen::Vector3d> current_positions,
                                   std::span<const ElementId> target_set,
                                   const vis::CoverageSet& covered_now,
                                   const world::VoxelGrid& grid,
                                   const world::SurfaceModel& surface,
                                   const geom::FrustumParams& fparams, double lambda_d);

}  // namespace visia::repair
