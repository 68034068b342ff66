#include "visia/phi_astar.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <unordered_set>
#include <stdexcept>

namespace visia::phiastar {

CacheKey cache_key(const geom::CameraConfig& q, const SearchParams& params) {
    return CacheKey{
        static_cast<std::int64_t>(std::floor(q.p.x() / params.delta_p)),
        static_cast<std::int64_t>(std::floor(q.p.y() / params.delta_p)),
        static_cast<std::int64_t>(std::floor(q.p.z() / params.delta_p)),
        static_cast<std::int64_t>(std::floor(q.theta / params.dtheta_cache)),
        static_cast<std::int64_t>(std::floor(q.psi / params.dpsi_cache)),
    };
}

std::pair<double, double> lift(const Eigen::Vector3d& p, const geom::CameraConfig& va,
                               const geom::CameraConfig& vb) {
    const double da = (p - va.p).norm();
    const double db = (p - vb.p).norm();
    if (da + db == 0.0) throw std::invalid_argument("degenerate lift");
    const double rho = da / (da + db);
    return geom::interp_attitude({va.theta, va.psi}, {vb.theta, vb.psi}, rho);
}

namespace {

// Pick the obstacle sample closest to its most-violated side plane (ties:
// nearest to the camera) and derive the correction direction from its bearings.
struct CorrectionHint {
    double sign_psi = 1.0;
    double sign_theta = 1.0;
    double need_psi = 0.0;    // rotation that pushes o* through its nearest h-plane
    double need_theta = 0.0;
};

std::optional<CorrectionHint> correction_hint(const geom::CameraConfig& q,
                                              const world::VoxelGrid& grid,
                                              const geom::FrustumParams& fparams,
                                              const SearchParams& params) {
    const geom::HalfSpaceSet hs = geom::make_frustum(q, fparams);
    const auto local = grid.local_voxels(q.p, params.local_radius, params.local_cap);
    const Eigen::Vector3d* o_star = nullptr;
    double best_slack = -std::numeric_limits<double>::infinity();
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& o : local) {
        if (!geom::point_in_frustum(hs, o)) continue;
        double slack = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < 4; ++i) {  // side planes only
            slack = std::max(slack, hs.planes[i].n.dot(o) + hs.planes[i].h);
        }
        const double dist = (o - q.p).norm();
        if (slack > best_slack || (slack == best_slack && dist < best_dist)) {
            best_slack = slack;
            best_dist = dist;
            o_star = &o;
        }
    }
    if (o_star == nullptr) return std::nullopt;
    const auto [bh, bv] = geom::bearings(q, *o_star);
    CorrectionHint hint;
    hint.sign_psi = bh >= 0.0 ? -1.0 : 1.0;  // rotate away from the sample
    hint.sign_theta = bv >= 0.0 ? -1.0 : 1.0;
    hint.need_psi = std::max(0.0, fparams.alpha_h * 0.5 - std::abs(bh));
    hint.need_theta = std::max(0.0, fparams.alpha_v * 0.5 - std::abs(bv));
    return hint;
}

}  // namespace

std::optional<std::pair<double, double>> attitude_correct(const geom::CameraConfig& q,
                                                          const world::VoxelGrid& grid,
                                                          const geom::FrustumParams& fparams,
                                                          const SearchParams& params) {
    if (!vis::occ(q, grid, fparams)) {
        throw std::logic_error("attitude_correct requires an occluded configuration");
    }
    const auto hint = correction_hint(q, grid, fparams, params);

    auto clean_at = [&](double dtheta, double dpsi) {
        const double theta = q.theta + dtheta;
        if (theta < geom::kPitchMin || theta > geom::kPitchMax) return false;
        return !vis::occ({q.p, theta, q.psi + dpsi}, grid, fparams);
    };
    // Smallest clean magnitude along one axis: bisection against a clean upper
    // bound, hinted sign first. Returns the signed correction or nothing.
    auto axis_correction = [&](bool yaw, double hint_sign) -> std::optional<double> {
        for (const double sign : {hint_sign, -hint_sign}) {
            auto ok = [&](double mag) {
                return yaw ? clean_at(0.0, sign * mag) : clean_at(sign * mag, 0.0);
            };
            if (!ok(params.corr_bound)) continue;
            double lo = 0.0;  // occluded (precondition)
            double hi = params.corr_bound;
            for (int i = 0; i < params.n_bis; ++i) {
                const double mid = 0.5 * (lo + hi);
                if (ok(mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return sign * hi;
        }
        return std::nullopt;
    };

    const double sp = hint ? hint->sign_psi : 1.0;
    const double st = hint ? hint->sign_theta : 1.0;
    const std::optional<double> dpsi = axis_correction(true, sp);    // yaw first
    const std::optional<double> dtheta = axis_correction(false, st);

    // Keep the cheaper axis under the |dtheta| + |dpsi| objective.
    if (dpsi && (!dtheta || std::abs(*dpsi) <= std::abs(*dtheta))) {
        return std::make_pair(q.theta, geom::normalize_angle(q.psi + *dpsi));
    }
    if (dtheta) {
        return std::make_pair(geom::clamp_pitch(q.theta + *dtheta), q.psi);
    }

    // Diagonal fallback: equal magnitudes on both axes.
    auto diag_ok = [&](double mag) { return clean_at(st * mag, sp * mag); };
    if (diag_ok(params.corr_bound)) {
        double lo = 0.0, hi = params.corr_bound;
        for (int i = 0; i < params.n_bis; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (diag_ok(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return std::make_pair(geom::clamp_pitch(q.theta + st * hi),
                              geom::normalize_angle(q.psi + sp * hi));
    }
    return std::nullopt;
}

Searcher::Searcher(SearchParams params, geom::FrustumParams fparams)
    : params_(params), fparams_(fparams) {}

void Searcher::clear_cache() {
    cache_.clear();
    session_grid_version_ = ~0ull;
}

namespace {

struct IVec3Hash {
    std::size_t operator()(const Eigen::Vector3i& v) const {
        std::uint64_t h = 1469598103934665603ull;
        for (int i = 0; i < 3; ++i) {
            h = (h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(v[i]))) *
                1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

struct IVec3Eq {
    bool operator()(const Eigen::Vector3i& a, const Eigen::Vector3i& b) const { return a == b; }
};

struct NodeRecord {
    double g = std::numeric_limits<double>::infinity();
    Eigen::Vector3i parent{0, 0, 0};
    bool has_parent = false;
    double theta = 0.0;
    double psi = 0.0;
    bool closed = false;
};

struct HeapItem {
    double f;
    std::uint64_t seq;  // FIFO tie-break keeps expansion order deterministic
    Eigen::Vector3i v;
    bool operator>(const HeapItem& o) const {
        if (f != o.f) return f > o.f;
        return seq > o.seq;
    }
};

Eigen::Vector3i snap_cell(const Eigen::Vector3d& p, double delta) {
    return {static_cast<int>(std::llround(p.x() / delta)),
            static_cast<int>(std::llround(p.y() / delta)),
            static_cast<int>(std::llround(p.z() / delta))};
}

Eigen::Vector3d cell_point(const Eigen::Vector3i& c, double delta) {
    return {c.x() * delta, c.y() * delta, c.z() * delta};
}

}  // namespace

namespace {

// Clearance-only flood fill between two lattice cells; used to attribute
// failures (Occluded when a safe path exists but visibility blocks it).
template <typename Stop>
bool clearance_reachable(const world::VoxelGrid& grid, const Eigen::Vector3i& cell_a,
                         const Eigen::Vector3i& cell_b, double delta, double d_min,
                         const Stop& out_of_budget) {
    std::unordered_set<Eigen::Vector3i, IVec3Hash, IVec3Eq> seen{cell_a};
    std::queue<Eigen::Vector3i> frontier;
    frontier.push(cell_a);
    while (!frontier.empty()) {
        if (out_of_budget()) return false;
        const Eigen::Vector3i c = frontier.front();
        frontier.pop();
        for (int dx = -1; dx <= 1; ++dx) {
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dz = -1; dz <= 1; ++dz) {
                    if (dx == 0 && dy == 0 && dz == 0) continue;
                    const Eigen::Vector3i nb = c + Eigen::Vector3i(dx, dy, dz);
                    if (seen.count(nb)) continue;
                    const Eigen::Vector3d np = cell_point(nb, delta);
                    if (!grid.in_bounds(np) || grid.min_clearance(np) < d_min) continue;
                    if (nb == cell_b) return true;
                    seen.insert(nb);
                    frontier.push(nb);
                }
            }
        }
    }
    return false;
}

}  // namespace

SearchResult Searcher::search(const geom::CameraConfig& va, const geom::CameraConfig& vb,
                              const world::VoxelGrid& grid) {
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    auto out_of_budget = [&] {
        return std::chrono::duration<double, std::milli>(Clock::now() - t0).count() >
               params_.budget_ms;
    };

    SearchResult res;

    // Snap the endpoints to the search lattice and record the residuals.
    const Eigen::Vector3i cell_a = snap_cell(va.p, params_.delta_p);
    const Eigen::Vector3i cell_b = snap_cell(vb.p, params_.delta_p);
    geom::CameraConfig a{cell_point(cell_a, params_.delta_p), va.theta, va.psi};
    geom::CameraConfig b{cell_point(cell_b, params_.delta_p), vb.theta, vb.psi};
    res.snap_residual_a = (a.p - va.p).norm();
    res.snap_residual_b = (b.p - vb.p).norm();

    // The cache is only valid for the same query on the same grid snapshot.
    if (session_grid_version_ != grid.version() || session_a_ != a.p || session_b_ != b.p ||
        session_clean_ != params_.clean_sensing) {
        cache_.clear();
        session_grid_version_ = grid.version();
        session_a_ = a.p;
        session_b_ = b.p;
        session_clean_ = params_.clean_sensing;
    }

    // Endpoint validation (contract: endpoints clean and clear).
    if (!grid.in_bounds(a.p) || !grid.in_bounds(b.p) ||
        grid.min_clearance(a.p) < params_.d_min || grid.min_clearance(b.p) < params_.d_min) {
        res.fail = FailReason::Unreachable;
        return res;
    }
    if (params_.clean_sensing) {
        res.stats.occ_evals += 2;
        if (vis::occ(a, grid, fparams_) || vis::occ(b, grid, fparams_)) {
            res.fail = clearance_reachable(grid, cell_a, cell_b, params_.delta_p,
                                           params_.d_min, out_of_budget)
                           ? FailReason::Occluded
                           : FailReason::Unreachable;
            return res;
        }
    }

    if (cell_a == cell_b) {
        res.ok = true;
        res.connector.configs = {a, b};
        res.connector.length = 0.0;
        return res;
    }

    std::unordered_map<Eigen::Vector3i, NodeRecord, IVec3Hash, IVec3Eq> nodes;
    std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<HeapItem>> open;
    std::uint64_t seq = 0;

    auto heuristic = [&](const Eigen::Vector3i& c) {
        return params_.lambda_heu * (cell_point(c, params_.delta_p) - b.p).norm();
    };

    NodeRecord& start = nodes[cell_a];
    start.g = 0.0;
    start.theta = a.theta;
    start.psi = a.psi;
    open.push({heuristic(cell_a), seq++, cell_a});

    // Evaluates clean sensing for the lifted configuration at a cell, with the
    // quantized-key cache in front. The key uses the exact integer cell so
    // neighboring lattice cells can never alias; the lifted attitude is a
    // function of the cell alone, so a hit is exact for this session.
    auto clean_test = [&](const Eigen::Vector3i& cell, const geom::CameraConfig& q)
        -> std::optional<std::pair<double, double>> {
        if (!params_.clean_sensing) return std::make_pair(q.theta, q.psi);
        const CacheKey key{
            cell.x(), cell.y(), cell.z(),
            static_cast<std::int64_t>(std::floor(q.theta / params_.dtheta_cache)),
            static_cast<std::int64_t>(std::floor(q.psi / params_.dpsi_cache))};
        if (params_.use_cache) {
            if (const auto it = cache_.find(key); it != cache_.end()) {
                ++res.stats.cache_hits;
                if (!it->second.clean) return std::nullopt;
                return std::make_pair(it->second.theta, it->second.psi);
            }
        }
        ++res.stats.cache_misses;
        ++res.stats.occ_evals;
        if (!vis::occ(q, grid, fparams_)) {
            if (params_.use_cache) cache_[key] = CacheEntry{true, q.theta, q.psi};
            return std::make_pair(q.theta, q.psi);
        }
        ++res.stats.corrections;
        const auto corrected = attitude_correct(q, grid, fparams_, params_);
        if (corrected) {
            if (params_.use_cache) cache_[key] = CacheEntry{true, corrected->first,
                                                            corrected->second};
            return corrected;
        }
        ++res.stats.correction_fails;
        if (params_.use_cache) cache_[key] = CacheEntry{false, 0.0, 0.0};
        return std::nullopt;
    };

    while (!open.empty()) {
        if (out_of_budget()) {
            res.fail = FailReason::Budget;
            return res;
        }
        const HeapItem item = open.top();
        open.pop();
        auto& rec = nodes[item.v];
        if (rec.closed) continue;  // stale heap entry
        rec.closed = true;
        ++res.stats.expansions;

        if (item.v == cell_b) {
            // Backtrack the 3D chain and attach the annotated attitudes.
            std::vector<geom::CameraConfig> chain;
            Eigen::Vector3i cur = item.v;
            while (true) {
                const NodeRecord& r = nodes[cur];
                chain.push_back({cell_point(cur, params_.delta_p), r.theta, r.psi});
                if (!r.has_parent) break;
                cur = r.parent;
            }
            std::reverse(chain.begin(), chain.end());
            res.ok = true;
            res.connector.configs = std::move(chain);
            double len = 0.0;
            for (std::size_t i = 0; i + 1 < res.connector.configs.size(); ++i) {
                len += (res.connector.configs[i + 1].p - res.connector.configs[i].p).norm();
            }
            res.connector.length = len;
            return res;
        }

        for (int dx = -1; dx <= 1; ++dx) {
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dz = -1; dz <= 1; ++dz) {
                    if (dx == 0 && dy == 0 && dz == 0) continue;
                    const Eigen::Vector3i nb = item.v + Eigen::Vector3i(dx, dy, dz);
                    const Eigen::Vector3d np = cell_point(nb, params_.delta_p);
                    if (!grid.in_bounds(np)) continue;
                    auto& nrec = nodes[nb];
                    if (nrec.closed) continue;
                    if (grid.min_clearance(np) < params_.d_min) continue;

                    const double g_c =
                        rec.g + params_.delta_p * std::sqrt(double(dx * dx + dy * dy + dz * dz));
                    if (g_c >= nrec.g) continue;

                    std::pair<double, double> att;
                    if (nb == cell_b) {
                        att = {b.theta, b.psi};  // goal keeps the viewpoint attitude
                    } else {
                        const auto lifted = lift(np, a, b);
                        const auto verdict =
                            clean_test(nb, {np, lifted.first, lifted.second});
                        if (!verdict) continue;
                        att = *verdict;
                    }
                    nrec.g = g_c;
                    nrec.parent = item.v;
                    nrec.has_parent = true;
                    nrec.theta = att.first;
                    nrec.psi = att.second;
                    open.push({g_c + heuristic(nb), seq++, nb});
                }
            }
        }
    }

    // Exhausted. When a clearance-only flood fill still reaches the goal,
    // visibility was the binding constraint.
    res.fail = params_.clean_sensing &&
                       clearance_reachable(grid, cell_a, cell_b, params_.delta_p,
                                           params_.d_min, out_of_budget)
                   ? FailReason::Occluded
                   : FailReason::Unreachable;
    return res;
}

}  // namespace visia::phiastar
