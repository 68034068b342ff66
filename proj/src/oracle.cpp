#include "visia/oracle.hpp"

#include "visia/sim.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <sstream>
#include <unordered_set>

namespace visia::oracle {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = double(rng() >> 11) * (1.0 / 9007199254740992.0);
    return lo + u * (hi - lo);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

}  // namespace

repair::ShiftResult sweep_by_scan(std::span<const repair::BoundInterval> intervals,
                                  double s_lb) {
    std::vector<double> candidates{s_lb};
    for (const auto& iv : intervals) {
        if (iv.empty()) continue;
        if (std::isfinite(iv.lo) && iv.lo >= s_lb) candidates.push_back(iv.lo);
        if (std::isfinite(iv.hi) && iv.hi >= s_lb) candidates.push_back(iv.hi);
    }
    std::sort(candidates.begin(), candidates.end());
    repair::ShiftResult best{s_lb, 0};
    for (const double s : candidates) {
        int c = 0;
        for (const auto& iv : intervals) {
            if (!iv.empty() && s >= iv.lo && s <= iv.hi) ++c;
        }
        if (c > best.count) best = {s, c};
    }
    return best;
}

double s_lb_by_scan(const geom::HalfSpaceSet& hs, const Eigen::Vector3d& d,
                    const Eigen::Vector3d& obstacle, double d_min, double step, double s_max) {
    for (double s = 0.0; s <= s_max; s += step) {
        bool expelled = false;
        for (const auto& pl : hs.planes) {
            const double kappa_s = pl.n.dot(obstacle) + pl.h - s * pl.n.dot(d);
            if (kappa_s >= d_min) expelled = true;
        }
        if (expelled) return s;
    }
    return std::numeric_limits<double>::infinity();
}

bool bfs5d_feasible(const geom::CameraConfig& va, const geom::CameraConfig& vb,
                    const world::VoxelGrid& grid, const geom::FrustumParams& fparams,
                    const phiastar::SearchParams& params) {
    auto cell_of = [&](const Eigen::Vector3d& p) {
        return Eigen::Vector3i(static_cast<int>(std::llround(p.x() / params.delta_p)),
                               static_cast<int>(std::llround(p.y() / params.delta_p)),
                               static_cast<int>(std::llround(p.z() / params.delta_p)));
    };
    auto point_of = [&](const Eigen::Vector3i& c) {
        return Eigen::Vector3d(c.x() * params.delta_p, c.y() * params.delta_p,
                               c.z() * params.delta_p);
    };
    const Eigen::Vector3i start = cell_of(va.p);
    const Eigen::Vector3i goal = cell_of(vb.p);
    const geom::CameraConfig a{point_of(start), va.theta, va.psi};
    const geom::CameraConfig b{point_of(goal), vb.theta, vb.psi};

    auto clear_ok = [&](const Eigen::Vector3d& p) {
        return grid.in_bounds(p) && grid.min_clearance(p) >= params.d_min;
    };
    if (!clear_ok(a.p) || !clear_ok(b.p)) return false;
    if (params.clean_sensing &&
        (vis::occ(a, grid, fparams) || vis::occ(b, grid, fparams))) {
        return false;
    }

    const int k_theta = static_cast<int>(std::floor(params.corr_bound / params.dtheta_cache));
    const int k_psi = static_cast<int>(std::floor(params.corr_bound / params.dpsi_cache));
    auto node_passable = [&](const Eigen::Vector3i& c) {
        const Eigen::Vector3d p = point_of(c);
        if (!clear_ok(p)) return false;
        if (!params.clean_sensing) return true;
        if (c == goal || c == start) return true;  // endpoints validated above
        const auto lifted = phiastar::lift(p, a, b);
        for (int i = -k_theta; i <= k_theta; ++i) {
            const double theta = lifted.first + i * params.dtheta_cache;
            if (theta < geom::kPitchMin || theta > geom::kPitchMax) continue;
            for (int j = -k_psi; j <= k_psi; ++j) {
                const double psi = lifted.second + j * params.dpsi_cache;
                if (!vis::occ({p, theta, psi}, grid, fparams)) return true;
            }
        }
        return false;
    };

    struct Hash {
        std::size_t operator()(const Eigen::Vector3i& v) const {
            return std::size_t(v.x() * 73856093) ^ std::size_t(v.y() * 19349663) ^
                   std::size_t(v.z() * 83492791);
        }
    };
    std::unordered_set<Eigen::Vector3i, Hash> seen;
    std::queue<Eigen::Vector3i> frontier;
    frontier.push(start);
    seen.insert(start);
    while (!frontier.empty()) {
        const Eigen::Vector3i c = frontier.front();
        frontier.pop();
        if (c == goal) return true;
        for (int dx = -1; dx <= 1; ++dx) {
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dz = -1; dz <= 1; ++dz) {
                    if (dx == 0 && dy == 0 && dz == 0) continue;
                    const Eigen::Vector3i nb = c + Eigen::Vector3i(dx, dy, dz);
                    if (seen.count(nb)) continue;
                    if (!node_passable(nb)) continue;
                    seen.insert(nb);
                    frontier.push(nb);
                }
            }
        }
    }
    return false;
}

std::optional<tour::TourSolution> sop_enumerate(const tour::TourProblem& problem) {
    const int n = static_cast<int>(problem.positions.size());
    std::vector<int> rest;
    for (int i = 0; i < n; ++i) {
        if (i == problem.start) continue;
        if (problem.terminal && i == *problem.terminal) continue;
        rest.push_back(i);
    }
    std::sort(rest.begin(), rest.end());
    std::optional<tour::TourSolution> best;
    do {
        std::vector<int> order;
        order.push_back(problem.start);
        order.insert(order.end(), rest.begin(), rest.end());
        if (problem.terminal) order.push_back(*problem.terminal);
        if (!tour::feasible(problem, order)) continue;
        const double c = tour::tour_cost(order, problem.positions);
        if (!best || c < best->total_cost) best = tour::TourSolution{order, c};
    } while (std::next_permutation(rest.begin(), rest.end()));
    return best;
}

double chamfer_by_double_loop(std::span<const Eigen::Vector3d> a,
                              std::span<const Eigen::Vector3d> b) {
    double sum_ab = 0.0;
    for (const auto& p : a) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& q : b) m = std::min(m, (p - q).norm());
        sum_ab += m;
    }
    double sum_ba = 0.0;
    for (const auto& q : b) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& p : a) m = std::min(m, (q - p).norm());
        sum_ba += m;
    }
    return sum_ab / double(a.size()) + sum_ba / double(b.size());
}

// ---- Suites ---------------------------------------------------------------

SuiteResult run_sweep_suite(const SuiteOptions& opt) {
    SuiteResult res{"sweep", true, 0, ""};
    const int n_cases = opt.n > 0 ? opt.n : 1000;
    std::mt19937_64 rng(opt.seed * 77ull + 11);
    for (int k = 0; k < n_cases; ++k) {
        const int n_iv = uniform_int(rng, 0, 12);
        std::vector<repair::BoundInterval> ivs;
        for (int i = 0; i < n_iv; ++i) {
            repair::BoundInterval iv;
            iv.id = i;
            const double a = uniform(rng, -2.0, 8.0);
            const double b = uniform(rng, -2.0, 8.0);
            iv.lo = std::min(a, b);
            iv.hi = std::max(a, b);
            if (rng() % 5 == 0) std::swap(iv.lo, iv.hi);  // keep some empty intervals
            ivs.push_back(iv);
        }
        const double s_lb = uniform(rng, 0.0, 4.0);
        repair::ShiftResult impl = repair::optimal_shift(ivs, s_lb);
        if (opt.inject == Inject::SweepOffByOne) impl.count += 1;
        const repair::ShiftResult ref = sweep_by_scan(ivs, s_lb);
        ++res.cases;
        if (impl.count != ref.count || std::abs(impl.s_star - ref.s_star) > 1e-12) {
            res.pass = false;
            std::ostringstream os;
            os << "case " << k << ": impl (s*=" << impl.s_star << ", count=" << impl.count
               << ") vs scan (s*=" << ref.s_star << ", count=" << ref.count << "); s_lb=" << s_lb
               << ", intervals:";
            for (const auto& iv : ivs) os << " [" << iv.lo << "," << iv.hi << "]";
            res.counterexample = os.str();
            break;
        }
    }
    return res;
}

SuiteResult run_slb_suite(const SuiteOptions& opt) {
    SuiteResult res{"slb", true, 0, ""};
    const int n_cases = opt.n > 0 ? opt.n : 200;
    std::mt19937_64 rng(opt.seed * 77ull + 23);
    const double step = 1e-3;
    for (int k = 0; k < n_cases; ++k) {
        geom::FrustumParams fp;
        fp.alpha_h = geom::deg2rad(uniform(rng, 40.0, 110.0));
        fp.alpha_v = geom::deg2rad(uniform(rng, 30.0, 90.0));
        fp.r_max = uniform(rng, 2.0, 8.0);
        geom::CameraConfig q;
        q.p = {uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0)};
        q.theta = uniform(rng, -0.9, 0.45);
        q.psi = uniform(rng, -geom::kPi, geom::kPi);
        const geom::HalfSpaceSet hs = geom::make_frustum(q, fp);
        // A sample strictly inside the frustum, through bearings.
        const double bh = uniform(rng, -0.45, 0.45) * fp.alpha_h;
        const double bv = uniform(rng, -0.45, 0.45) * fp.alpha_v;
        const double dist = uniform(rng, 0.3, 0.95) * fp.r_max;
        const Eigen::Matrix3d rot = geom::camera_rotation(q.theta, q.psi);
        Eigen::Vector3d dir_cam(1.0, std::tan(bh), std::tan(bv));
        dir_cam.normalize();
        const Eigen::Vector3d o = q.p + dist * (rot * dir_cam);
        if (!geom::point_in_frustum(hs, o)) continue;  // numerically on an edge: skip

        const Eigen::Vector3d d = geom::view_direction(q.theta, q.psi);
        const double d_min = uniform(rng, 0.05, 0.4);
        const std::vector<Eigen::Vector3d> o_in{o};
        const double impl = repair::s_lower_bound(hs, d, o_in, d_min);
        const double ref = s_lb_by_scan(hs, d, o, d_min, step);
        ++res.cases;
        if (!std::isfinite(impl) || std::abs(impl - ref) > step) {
            res.pass = false;
            std::ostringstream os;
            os << "case " << k << ": s_lb impl=" << impl << " scan=" << ref << " (step " << step
               << "), obstacle (" << o.transpose() << "), d_min=" << d_min;
            res.counterexample = os.str();
            break;
        }
    }
    return res;
}

SuiteResult run_phiastar_suite(const SuiteOptions& opt) {
    SuiteResult res{"phiastar", true, 0, ""};
    const int n_cases = opt.n > 0 ? opt.n : 50;
    std::mt19937_64 rng(opt.seed * 77ull + 31);
    for (int k = 0; k < n_cases; ++k) {
        world::VoxelGrid grid({{0.0, 0.0, 0.0}, {2.0, 2.0, 2.0}}, 0.1);
        const int n_boxes = uniform_int(rng, 1, 3);
        for (int i = 0; i < n_boxes; ++i) {
            const Eigen::Vector3d c(uniform(rng, 0.5, 1.5), uniform(rng, 0.5, 1.5),
                                    uniform(rng, 0.5, 1.5));
            const Eigen::Vector3d half(uniform(rng, 0.1, 0.3), uniform(rng, 0.1, 0.3),
                                       uniform(rng, 0.1, 0.3));
            const Eigen::Vector3i lo = grid.voxel_of((c - half).cwiseMax(grid.bounds().min));
            const Eigen::Vector3i hi = grid.voxel_of(
                (c + half).cwiseMin(grid.bounds().max - Eigen::Vector3d::Constant(1e-6)));
            Eigen::Vector3i v;
            for (v.x() = lo.x(); v.x() <= hi.x(); ++v.x()) {
                for (v.y() = lo.y(); v.y() <= hi.y(); ++v.y()) {
                    for (v.z() = lo.z(); v.z() <= hi.z(); ++v.z()) {
                        grid.set_state(v, world::VoxelState::Obstacle);
                    }
                }
            }
        }
        geom::FrustumParams fp;
        fp.alpha_h = geom::deg2rad(70.0);
        fp.alpha_v = geom::deg2rad(50.0);
        fp.r_max = 1.5;
        phiastar::SearchParams sp;
        sp.delta_p = 0.1;
        sp.d_min = 0.1;
        sp.budget_ms = 5000.0;
        sp.lambda_heu = 1.0;
        geom::CameraConfig va{{0.2, 0.2, 0.2}, 0.0, geom::deg2rad(45.0)};
        geom::CameraConfig vb{{1.8, 1.8, 1.8}, 0.0, geom::deg2rad(45.0)};

        phiastar::Searcher searcher(sp, fp);
        const auto result = searcher.search(va, vb, grid);
        const bool ref = bfs5d_feasible(va, vb, grid, fp, sp);
        ++res.cases;
        if (result.ok != ref) {
            res.pass = false;
            std::ostringstream os;
            os << "case " << k << ": searcher " << (result.ok ? "feasible" : "infeasible")
               << " vs bfs " << (ref ? "feasible" : "infeasible");
            res.counterexample = os.str();
            break;
        }
    }
    return res;
}

SuiteResult run_sop_suite(const SuiteOptions& opt) {
    SuiteResult res{"sop", true, 0, ""};
    const int n_cases = opt.n > 0 ? opt.n : 100;
    std::mt19937_64 rng(opt.seed * 77ull + 41);
    for (int k = 0; k < n_cases; ++k) {
        tour::TourProblem problem;
        const int n = uniform_int(rng, 2, 9);
        for (int i = 0; i < n; ++i) {
            problem.positions.emplace_back(uniform(rng, 0.0, 10.0), uniform(rng, 0.0, 10.0),
                                           uniform(rng, 0.0, 3.0));
        }
        problem.start = 0;
        const int n_anchor = uniform_int(rng, 0, std::max(0, n - 2));
        for (int i = 1; i <= n_anchor; ++i) problem.anchors.push_back(i);
        if (n >= 3 && rng() % 2 == 0) problem.terminal = n - 1;

        const tour::TourSolution sol = tour::reorder(problem);
        const auto ref = sop_enumerate(problem);
        ++res.cases;
        if (!tour::feasible(problem, sol.order)) {
            res.pass = false;
            res.counterexample = "case " + std::to_string(k) + ": infeasible heuristic order";
            break;
        }
        if (ref && sol.total_cost > ref->total_cost * 1.10 + 1e-9) {
            res.pass = false;
            std::ostringstream os;
            os << "case " << k << ": heuristic cost " << sol.total_cost << " exceeds optimum "
               << ref->total_cost << " by more than 10%";
            res.counterexample = os.str();
            break;
        }
    }
    return res;
}

SuiteResult run_chamfer_suite(const SuiteOptions& opt) {
    SuiteResult res{"chamfer", true, 0, ""};
    const int n_cases = opt.n > 0 ? opt.n : 100;
    std::mt19937_64 rng(opt.seed * 77ull + 53);
    for (int k = 0; k < n_cases; ++k) {
        std::vector<Eigen::Vector3d> a, b;
        const int na = uniform_int(rng, 1, 20);
        const int nb = uniform_int(rng, 1, 20);
        for (int i = 0; i < na; ++i) {
            a.emplace_back(uniform(rng, -5.0, 5.0), uniform(rng, -5.0, 5.0),
                           uniform(rng, -5.0, 5.0));
        }
        for (int i = 0; i < nb; ++i) {
            b.emplace_back(uniform(rng, -5.0, 5.0), uniform(rng, -5.0, 5.0),
                           uniform(rng, -5.0, 5.0));
        }
        const double impl = sim::chamfer(a, b);
        const double ref = chamfer_by_double_loop(a, b);
        ++res.cases;
        if (std::abs(impl - ref) > 1e-12) {
            res.pass = false;
            res.counterexample = "case " + std::to_string(k) + ": impl " + std::to_string(impl) +
                                 " vs double loop " + std::to_string(ref);
            break;
        }
    }
    return res;
}

std::vector<std::string> suite_names() {
    return {"sweep", "slb", "phiastar", "sop", "chamfer"};
}

SuiteResult run_suite(const std::string& name, const SuiteOptions& opt) {
    if (name == "sweep") return run_sweep_suite(opt);
    if (name == "slb") return run_slb_suite(opt);
    if (name == "phiastar") return run_phiastar_suite(opt);
    if (name == "sop") return run_sop_suite(opt);
    if (name == "chamfer") return run_chamfer_suite(opt);
    SuiteResult res{name, false, 0, "unknown suite '" + name + "'"};
    return res;
}

}  // namespace visia::oracle
