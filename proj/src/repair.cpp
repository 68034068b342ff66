#include "visia/repair.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace visia::repair {

DirectionTemplate build_template(const geom::FrustumParams& params, double dtheta, double dpsi) {
    if (dtheta <= 0.0 || dtheta > params.alpha_v || dpsi <= 0.0 || dpsi > params.alpha_h) {
        throw std::invalid_argument("template steps must lie in (0, alpha]");
    }
    DirectionTemplate tpl;
    tpl.dtheta = dtheta;
    tpl.dpsi = dpsi;
    const int n_max = static_cast<int>(std::ceil(params.alpha_v / dtheta));
    const int m_max = static_cast<int>(std::ceil(params.alpha_h / dpsi));
    for (int n = -n_max; n <= n_max; ++n) {
        const double theta = n * dtheta;
        if (!(theta > -params.alpha_v && theta < params.alpha_v)) continue;
        for (int m = -m_max; m <= m_max; ++m) {
            const double psi = m * dpsi;
            if (!(psi > -params.alpha_h && psi < params.alpha_h)) continue;
            tpl.dirs.push_back({theta, psi, geom::view_direction(theta, psi)});
        }
    }
    return tpl;
}

Eigen::Vector3d anchor(std::span<const Eigen::Vector3d> points) {
    if (points.empty()) throw std::invalid_argument("anchor of an empty element set");
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
    for (const auto& p : points) x += p;
    x /= static_cast<double>(points.size());

    for (int iter = 0; iter < 50; ++iter) {
        Eigen::Vector3d num = Eigen::Vector3d::Zero();
        double den = 0.0;
        for (const auto& p : points) {
            double d = (x - p).norm();
            if (d < 1e-12) d = 1e-9;  // Weiszfeld degenerate step: nudge off the anchor
            const double w = 1.0 / d;
            num += w * p;
            den += w;
        }
        const Eigen::Vector3d next = num / den;
        const double step = (next - x).norm();
        x = next;
        if (step < 1e-6) break;
    }
    return x;
}

std::vector<geom::CameraConfig> instantiate_candidates(const geom::CameraConfig& vbar,
                                                       const Eigen::Vector3d& anchor_point,
                                                       const DirectionTemplate& tpl,
                                                       const geom::FrustumParams& params) {
    const Eigen::Matrix3d rot = geom::camera_rotation(vbar.theta, vbar.psi);
    std::vector<geom::CameraConfig> out;
    out.reserve(tpl.dirs.size());
    for (const auto& dir : tpl.dirs) {
        geom::CameraConfig c;
        c.p = anchor_point + params.r_max * (rot * dir.u);
        const Eigen::Vector3d look = (anchor_point - c.p).normalized();
        c.theta = geom::clamp_pitch(std::asin(std::clamp(look.z(), -1.0, 1.0)));
        c.psi = std::atan2(look.y(), look.x());
        out.push_back(c);
    }
    return out;
}

double s_lower_bound(const geom::HalfSpaceSet& hs, const Eigen::Vector3d& d,
                     std::span<const Eigen::Vector3d> o_in, double d_min) {
    double s_lb = 0.0;
    for (const auto& o : o_in) {
        double s_out = kInfeasibleShift;
        for (const auto& pl : hs.planes) {
            const double nd = pl.n.dot(d);
            if (nd >= 0.0) continue;  // this plane moves toward o, it cannot expel
            const double kappa = pl.n.dot(o) + pl.h;
            s_out = std::min(s_out, (d_min - kappa) / (-nd));
        }
        if (s_out == kInfeasibleShift) return kInfeasibleShift;
        s_lb = std::max(s_lb, s_out);
    }
    return std::max(0.0, s_lb);
}

BoundInterval element_interval(const Eigen::Vector3d& e, const geom::HalfSpaceSet& hs,
                               const Eigen::Vector3d& d) {
    BoundInterval iv;
    for (const auto& pl : hs.planes) {
        const double kappa = pl.n.dot(e) + pl.h;
        const double nd = pl.n.dot(d);
        if (nd > 0.0) {
            iv.lo = std::max(iv.lo, kappa / nd);  // constraint loosens as s grows
        } else if (nd < 0.0) {
            iv.hi = std::min(iv.hi, kappa / nd);
        } else if (kappa > 0.0) {
            iv.lo = 1.0;  // constant inequality violated: empty interval
            iv.hi = 0.0;
            return iv;
        }
    }
    return iv;
}

ShiftResult optimal_shift(std::span<const BoundInterval> intervals, double s_lb) {
    // Overlap of closed intervals is maximized at some clamped left endpoint.
    std::vector<double> starts;
    starts.push_back(s_lb);
    for (const auto& iv : intervals) {
        if (iv.empty() || iv.hi < s_lb) continue;
        starts.push_back(std::max(iv.lo, s_lb));
    }
    std::sort(starts.begin(), starts.end());
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());

    ShiftResult best{s_lb, 0};
    for (const double s : starts) {
        int c = 0;
        for (const auto& iv : intervals) {
            if (!iv.empty() && s >= iv.lo && s <= iv.hi) ++c;
        }
        if (c > best.count) best = {s, c};
    }
    return best;
}

std::pair<double, double> angular_margins(const geom::CameraConfig& q,
                                          std::span<const Eigen::Vector3d> o_nb,
                                          const geom::FrustumParams& params, double eta_max) {
    if (o_nb.empty()) return {eta_max, eta_max};
    double eta_h = std::numeric_limits<double>::infinity();
    double eta_v = std::numeric_limits<double>::infinity();
    for (const auto& o : o_nb) {
        const auto [bh, bv] = geom::bearings(q, o);
        eta_h = std::min(eta_h, std::abs(bh) - params.alpha_h * 0.5);
        eta_v = std::min(eta_v, std::abs(bv) - params.alpha_v * 0.5);
    }
    return {std::clamp(eta_h, 0.0, eta_max), std::clamp(eta_v, 0.0, eta_max)};
}

namespace {

int frustum_coverage_count(const geom::CameraConfig& q, std::span<const ElementId> s_vis,
                           const world::SurfaceModel& surface,
                           const geom::FrustumParams& params) {
    const geom::HalfSpaceSet hs = geom::make_frustum(q, params);
    int c = 0;
    for (const ElementId eid : s_vis) {
        if (geom::point_in_frustum(hs, surface.elements[eid].pos)) ++c;
    }
    return c;
}

}  // namespace

std::pair<double, double> refine_attitude(const geom::CameraConfig& q,
                                          std::pair<double, double> etas,
                                          std::span<const ElementId> s_vis,
                                          const world::VoxelGrid& grid,
                                          const world::SurfaceModel& surface,
                                          const geom::FrustumParams& params, int n_bis) {
    const auto [eta_h, eta_v] = etas;
    double best_theta = q.theta;
    double best_psi = q.psi;
    int best_count = frustum_coverage_count(q, s_vis, surface, params);

    // Feasible score of an attitude probe; occluded probes never win.
    auto probe = [&](double theta, double psi) -> int {
        theta = geom::clamp_pitch(theta);
        geom::CameraConfig c{q.p, theta, psi};
        if (vis::occ(c, grid, params)) return -1;
        return frustum_coverage_count(c, s_vis, surface, params);
    };
    // Interval-halving maximization along one axis; keeps the best strict
    // improvement seen, so coverage never regresses.
    auto search_axis = [&](double center, double eta, bool yaw_axis) {
        if (eta <= 0.0) return;
        double lo = center - eta;
        double hi = center + eta;
        for (int i = 0; i < n_bis; ++i) {
            const double m1 = lo + (hi - lo) / 3.0;
            const double m2 = hi - (hi - lo) / 3.0;
            const int c1 = yaw_axis ? probe(best_theta, m1) : probe(m1, best_psi);
            const int c2 = yaw_axis ? probe(best_theta, m2) : probe(m2, best_psi);
            if (c1 > best_count) {
                best_count = c1;
                (yaw_axis ? best_psi : best_theta) = yaw_axis ? m1 : geom::clamp_pitch(m1);
            }
            if (c2 > best_count) {
                best_count = c2;
                (yaw_axis ? best_psi : best_theta) = yaw_axis ? m2 : geom::clamp_pitch(m2);
            }
            if (c1 >= c2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
    };
    search_axis(q.psi, eta_h, true);
    search_axis(q.theta, eta_v, false);
    return {best_theta, best_psi};
}

namespace {

// Obstacle samples near the frustum boundary: within the sensing range and
// with a bearing inside half-angle + eta_max of a FoV edge.
std::vector<Eigen::Vector3d> boundary_samples(const geom::CameraConfig& q,
                                              const world::VoxelGrid& grid,
                                              const geom::FrustumParams& params,
                                              double eta_max, double radius, int cap) {
    std::vector<Eigen::Vector3d> out;
    for (const auto& o : grid.local_voxels(q.p, std::min(radius, params.r_max), cap)) {
        const auto [bh, bv] = geom::bearings(q, o);
        if (std::abs(bh) <= params.alpha_h * 0.5 + eta_max &&
            std::abs(bv) <= params.alpha_v * 0.5 + eta_max) {
            out.push_back(o);
        }
    }
    return out;
}

}  // namespace

std::vector<Candidate> repair_viewpoint(const PathNode& vbar, int node_index,
                                        const world::VoxelGrid& grid,
                                        const world::SurfaceModel& surface,
                                        const geom::FrustumParams& fparams,
                                        const RepairParams& rparams,
                                        const DirectionTemplate& tpl) {
    std::vector<Candidate> pool;
    if (vbar.intended.empty()) return pool;

    std::vector<Eigen::Vector3d> pts;
    pts.reserve(vbar.intended.size());
    for (const ElementId eid : vbar.intended) pts.push_back(surface.elements[eid].pos);
    const Eigen::Vector3d m = anchor(pts);

    const auto candidates = instantiate_candidates(vbar.config, m, tpl, fparams);
    for (const auto& init : candidates) {
        if (!grid.in_bounds(init.p)) continue;
        const Eigen::Vector3d d = geom::view_direction(init.theta, init.psi);

        const auto s_vis = vis::visible_subset(init, vbar.intended, grid, surface);
        if (s_vis.empty()) continue;

        const geom::HalfSpaceSet hs0 = geom::make_frustum(init, fparams);
        double s_lb = 0.0;
        if (rparams.clean_sensing) {
            const auto o_in = grid.voxels_in_frustum(hs0, world::Label::Obstacle);
            s_lb = s_lower_bound(hs0, d, o_in, rparams.d_min);
            if (s_lb == kInfeasibleShift) continue;
        }

        std::vector<BoundInterval> intervals;
        intervals.reserve(s_vis.size());
        for (const ElementId eid : s_vis) {
            BoundInterval iv = element_interval(surface.elements[eid].pos, hs0, d);
            iv.id = eid;
            intervals.push_back(iv);
        }
        const ShiftResult shift = optimal_shift(intervals, s_lb);
        if (shift.count == 0) continue;

        geom::CameraConfig refined{init.p + shift.s_star * d, init.theta, init.psi};
        if (!grid.in_bounds(refined.p)) continue;
        if (grid.min_clearance(refined.p) < rparams.d_min) continue;
        if (rparams.clean_sensing && vis::occ(refined, grid, fparams)) {
            continue;  // a sample outside the s=0 frustum slid in during the shift
        }

        if (rparams.clean_sensing) {
            const auto o_nb = boundary_samples(refined, grid, fparams, rparams.eta_max,
                                               rparams.local_radius, 256);
            const auto etas = angular_margins(refined, o_nb, fparams, rparams.eta_max);
            const auto [theta_r, psi_r] =
                refine_attitude(refined, etas, s_vis, grid, surface, fparams, rparams.n_bis);
            refined.theta = theta_r;
            refined.psi = psi_r;
        }

        Candidate cand;
        cand.config = refined;
        cand.source = node_index;
        cand.s_lb = s_lb;
        cand.s_star = shift.s_star;
        const geom::HalfSpaceSet hs_final = geom::make_frustum(refined, fparams);
        for (const ElementId eid : s_vis) {
            if (geom::point_in_frustum(hs_final, surface.elements[eid].pos)) {
                cand.covered.push_back(eid);
            }
        }
        if (cand.covered.empty()) continue;
        pool.push_back(std::move(cand));
    }
    return pool;
}

std::optional<Candidate> select_replacement(std::span<const Candidate> pool,
                                            std::span<const ElementId> intended,
                                            const Eigen::Vector3d& p_nominal,
                                            const world::VoxelGrid& grid,
                                            const world::SurfaceModel& surface,
                                            const geom::FrustumParams& fparams,
                                            double lambda_d) {
    if (pool.empty()) return std::nullopt;
    const Candidate* best = nullptr;
    double best_score = 0.0;
    double best_disp = 0.0;
    for (const auto& cand : pool) {
        int covered = 0;
        for (const ElementId eid : intended) {
            if (vis::element_visible(cand.config, surface.elements[eid], grid, fparams)) {
                ++covered;
            }
        }
        const double disp = (cand.config.p - p_nominal).norm();
        const double score =
            double(covered) / double(intended.size()) - lambda_d * disp;
        bool better = best == nullptr || score > best_score;
        if (best != nullptr && score == best_score) {
            if (disp < best_disp) {
                better = true;
            } else if (disp == best_disp) {
                const auto& a = cand.config.p;
                const auto& b = best->config.p;
                better = std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
            }
        }
        if (better) {
            best = &cand;
            best_score = score;
            best_disp = disp;
        }
    }
    return *best;
}

CompletionResult complete_coverage(std::span<const Candidate> pool_union,
                                   std::vector<Eigen::Vector3d> current_positions,
                                   std::span<const ElementId> target_set,
                                   const vis::CoverageSet& covered_now,
                                   const world::VoxelGrid& grid,
                                   const world::SurfaceModel& surface,
                                   const geom::FrustumParams& fparams, double lambda_d) {
    CompletionResult result;
    boost::dynamic_bitset<> uncovered(surface.elements.size());
    for (const ElementId eid : target_set) {
        if (!covered_now.bits.test(eid)) uncovered.set(eid);
    }
    if (uncovered.none() || pool_union.empty()) {
        for (std::size_t i = uncovered.find_first(); i != boost::dynamic_bitset<>::npos;
             i = uncovered.find_next(i)) {
            result.residual.push_back(static_cast<ElementId>(i));
        }
        return result;
    }

    // Full-coverage bitsets are fixed for the grid snapshot; compute once.
    std::vector<vis::CoverageSet> cov;
    cov.reserve(pool_union.size());
    for (const auto& cand : pool_union) {
        cov.push_back(vis::covered_elements(cand.config, grid, surface, fparams));
    }
    std::vector<bool> used(pool_union.size(), false);

    while (uncovered.any()) {
        int best = -1;
        double best_score = 0.0;
        std::size_t best_gain = 0;
        for (std::size_t i = 0; i < pool_union.size(); ++i) {
            if (used[i]) continue;
            const std::size_t gain = (cov[i].bits & uncovered).count();
            if (gain == 0) continue;
            double d_nn = std::numeric_limits<double>::infinity();
            for (const auto& p : current_positions) {
                d_nn = std::min(d_nn, (pool_union[i].config.p - p).norm());
            }
            if (!std::isfinite(d_nn)) d_nn = 0.0;
            const double score =
                double(gain) / double(uncovered.count()) - lambda_d * d_nn;
            if (best < 0 || score > best_score ||
                (score == best_score && gain > best_gain)) {
                best = static_cast<int>(i);
                best_score = score;
                best_gain = gain;
            }
        }
        if (best < 0) break;  // nothing left that helps
        used[best] = true;
        uncovered -= cov[best].bits;
        current_positions.push_back(pool_union[best].config.p);
        result.added.push_back(pool_union[best]);
    }

    for (std::size_t i = uncovered.find_first(); i != boost::dynamic_bitset<>::npos;
         i = uncovered.find_next(i)) {
        result.residual.push_back(static_cast<ElementId>(i));
    }
    return result;
}

}  // namespace visia::repair
