#include "visia/replan.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>

namespace visia::replan {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

bool configs_equal(const geom::CameraConfig& a, const geom::CameraConfig& b) {
    return a.p == b.p && a.theta == b.theta && a.psi == b.psi;
}

}  // namespace

ReplanWindow extract_window(const ScanPath& path, int exec_idx, double horizon) {
    ReplanWindow w;
    w.i_s = std::clamp(exec_idx, 0, std::max(0, path.size() - 1));
    w.i_e = w.i_s;
    double cum = 0.0;
    while (w.i_e < path.size() - 1 && cum < horizon) {
        cum += (path.nodes[w.i_e + 1].config.p - path.nodes[w.i_e].config.p).norm();
        ++w.i_e;
    }
    return w;
}

ScanPath splice(const ScanPath& path, const ReplanWindow& window, const ScanPath& repaired) {
    if (repaired.empty()) throw std::invalid_argument("splice: empty repaired segment");
    if (!configs_equal(repaired.nodes.front().config, path.nodes[window.i_s].config) ||
        !configs_equal(repaired.nodes.back().config, path.nodes[window.i_e].config)) {
        throw std::invalid_argument("splice: repaired endpoints do not match the window");
    }
    ScanPath out;
    out.nodes.reserve(path.nodes.size() + repaired.nodes.size());
    for (int i = 0; i < window.i_s; ++i) out.nodes.push_back(path.nodes[i]);
    for (const auto& n : repaired.nodes) out.nodes.push_back(n);
    for (int i = window.i_e + 1; i < path.size(); ++i) out.nodes.push_back(path.nodes[i]);
    return out;
}

TimedTrajectory time_parameterize(const ScanPath& path, double v_max, double omega_max) {
    if (v_max <= 0.0 || omega_max <= 0.0) {
        throw std::invalid_argument("kinematic limits must be positive");
    }
    TimedTrajectory tt;
    for (const auto& node : path.nodes) {
        if (!tt.configs.empty() && configs_equal(tt.configs.back(), node.config)) continue;
        tt.configs.push_back(node.config);
    }
    for (std::size_t i = 0; i + 1 < tt.configs.size(); ++i) {
        const auto& a = tt.configs[i];
        const auto& b = tt.configs[i + 1];
        const double dt = std::max({(b.p - a.p).norm() / v_max,
                                    std::abs(b.theta - a.theta) / omega_max,
                                    std::abs(geom::angle_diff(a.psi, b.psi)) / omega_max});
        tt.durations.push_back(dt);
        tt.total += dt;
    }
    return tt;
}

Replanner::Replanner(ReplanParams params, geom::FrustumParams fparams)
    : params_(std::move(params)), fparams_(fparams), searcher_(params_.search, fparams) {
    params_.repair.d_min = params_.d_min;
    params_.repair.lambda_d = params_.lambda_d;
    params_.repair.clean_sensing = params_.clean_sensing;
    params_.search.d_min = params_.d_min;
    params_.search.clean_sensing = params_.clean_sensing;
    searcher_ = phiastar::Searcher(params_.search, fparams);
}

bool Replanner::node_valid_anchor(const PathNode& node, const world::VoxelGrid& grid,
                                  const world::SurfaceModel& surface) const {
    if (!grid.in_bounds(node.config.p)) return false;
    if (grid.min_clearance(node.config.p) < params_.d_min) return false;
    if (!params_.clean_sensing) return true;
    if (vis::occ(node.config, grid, fparams_)) return false;
    if (node.kind == NodeKind::Viewpoint) {
        for (const int eid : node.intended) {
            if (!vis::element_visible(node.config, surface.elements[eid], grid, fparams_)) {
                return false;
            }
        }
    }
    return true;
}

Trigger Replanner::should_replan(const ScanPath& path, int exec_idx,
                                 const world::VoxelGrid& grid,
                                 const world::SurfaceModel& surface, double now_s) {
    if (!synced_) {
        last_replan_s_ = now_s;
        last_grid_version_ = grid.version();
        synced_ = true;
    }
    const ReplanWindow w = extract_window(path, exec_idx, params_.horizon);
    for (int i = w.i_s; i <= w.i_e; ++i) {
        const PathNode& node = path.nodes[i];
        if (!grid.in_bounds(node.config.p) ||
            grid.min_clearance(node.config.p) < params_.d_min) {
            return {TriggerReason::Clearance, i};
        }
        if (!params_.clean_sensing) continue;
        if (vis::occ(node.config, grid, fparams_)) return {TriggerReason::Occlusion, i};
        if (node.kind == NodeKind::Viewpoint) {
            for (const int eid : node.intended) {
                if (!vis::element_visible(node.config, surface.elements[eid], grid, fparams_)) {
                    return {TriggerReason::Occlusion, i};
                }
            }
        }
    }
    if (now_s - last_replan_s_ >= params_.refresh_interval_s &&
        grid.version() != last_grid_version_) {
        return {TriggerReason::Periodic, exec_idx};
    }
    return {};
}

std::pair<ScanPath, ReplanReport> Replanner::replan_window(const ScanPath& path,
                                                           ReplanWindow& window,
                                                           const world::VoxelGrid& grid,
                                                           const world::SurfaceModel& surface) {
    const auto t0 = Clock::now();
    ReplanReport report;
    report.triggered = true;

    auto subpath_of = [&](const ReplanWindow& w) {
        ScanPath sp;
        for (int i = w.i_s; i <= w.i_e; ++i) sp.nodes.push_back(path.nodes[i]);
        return sp;
    };
    auto finish = [&](ScanPath sp) {
        report.i_s = window.i_s;
        report.i_e = window.i_e;
        report.total_ms = ms_since(t0);
        return std::make_pair(std::move(sp), report);
    };

    // Grow the window until both endpoints are valid anchors.
    while (window.i_s > 0 && !node_valid_anchor(path.nodes[window.i_s], grid, surface)) {
        --window.i_s;
    }
    while (window.i_e < path.size() - 1 &&
           !node_valid_anchor(path.nodes[window.i_e], grid, surface)) {
        ++window.i_e;
    }
    if (!node_valid_anchor(path.nodes[window.i_s], grid, surface) ||
        !node_valid_anchor(path.nodes[window.i_e], grid, surface)) {
        report.degraded = true;  // no valid anchor exists along the path
        return finish(subpath_of(window));
    }

    const ScanPath sub = subpath_of(window);
    const int n_sub = sub.size();

    // Mode-aware validity scan. Qualified viewpoints become precedence anchors.
    std::vector<int> qualified;  // subpath indices, excluding the boundary nodes
    std::vector<int> invalid;
    bool any_violation = false;
    for (int i = 0; i < n_sub; ++i) {
        const PathNode& node = sub.nodes[i];
        const bool valid = node_valid_anchor(node, grid, surface);
        if (!valid) any_violation = true;
        if (node.kind != NodeKind::Viewpoint) continue;
        if (i == 0 || i == n_sub - 1) continue;  // boundary anchors stay in place
        (valid ? qualified : invalid).push_back(i);
    }
    report.invalid_count = static_cast<int>(invalid.size());

    if (!any_violation) {
        report.identity = true;
        return finish(sub);
    }
    if (ms_since(t0) >= params_.budget_ms) {
        report.degraded = true;  // nothing fits in the budget: best-so-far is the input
        return finish(sub);
    }

    // Window-intended element set, for coverage accounting.
    std::set<int> s_window_set;
    for (int i = 0; i < n_sub; ++i) {
        if (sub.nodes[i].kind != NodeKind::Viewpoint) continue;
        s_window_set.insert(sub.nodes[i].intended.begin(), sub.nodes[i].intended.end());
    }
    const std::vector<int> s_window(s_window_set.begin(), s_window_set.end());
    report.window_intended = static_cast<int>(s_window.size());

    {
        std::vector<geom::CameraConfig> nominal_vps;
        for (int i = 0; i < n_sub; ++i) {
            if (sub.nodes[i].kind == NodeKind::Viewpoint) nominal_vps.push_back(sub.nodes[i].config);
        }
        const auto cov = vis::coverage(nominal_vps, grid, surface, fparams_);
        int c = 0;
        for (const int eid : s_window) c += cov.bits.test(eid) ? 1 : 0;
        report.nominal_achievable = c;
    }

    if (!tpl_ || tpl_fparams_.alpha_h != fparams_.alpha_h ||
        tpl_fparams_.alpha_v != fparams_.alpha_v || tpl_fparams_.r_max != fparams_.r_max) {
        tpl_ = repair::build_template(fparams_, params_.repair.dtheta, params_.repair.dpsi);
        tpl_fparams_ = fparams_;
    }

    // Stage 1: per-viewpoint repair pools, then replacement selection and
    // coverage completion, under the repair share of the budget.
    const double repair_deadline = params_.budget_ms * params_.frac_repair;
    std::vector<std::vector<repair::Candidate>> pools;
    std::vector<int> pooled_invalid;  // subpath indices with a computed pool
    for (const int i : invalid) {
        if (ms_since(t0) >= repair_deadline) {
            report.partial_repair = true;
            break;
        }
        pools.push_back(repair::repair_viewpoint(sub.nodes[i], window.i_s + i, grid, surface,
                                                 fparams_, params_.repair, *tpl_));
        pooled_invalid.push_back(i);
    }

    struct NewViewpoint {
        geom::CameraConfig config;
        std::vector<int> intended;
    };
    std::vector<NewViewpoint> replacements;
    std::vector<repair::Candidate> pool_union;
    for (std::size_t k = 0; k < pools.size(); ++k) {
        const int i = pooled_invalid[k];
        for (const auto& c : pools[k]) pool_union.push_back(c);
        const auto pick = repair::select_replacement(pools[k], sub.nodes[i].intended,
                                                     sub.nodes[i].config.p, grid, surface,
                                                     fparams_, params_.lambda_d);
        if (!pick) {
            ++report.unrepaired_count;
            continue;
        }
        NewViewpoint nv;
        nv.config = pick->config;
        for (const int eid : sub.nodes[i].intended) {
            if (vis::element_visible(pick->config, surface.elements[eid], grid, fparams_)) {
                nv.intended.push_back(eid);
            }
        }
        report.displacements.push_back((pick->config.p - sub.nodes[i].config.p).norm());
        replacements.push_back(std::move(nv));
    }
    report.unrepaired_count += static_cast<int>(invalid.size() - pooled_invalid.size());
    report.replacement_count = static_cast<int>(replacements.size());

    // Coverage completion over the window-intended set.
    std::vector<geom::CameraConfig> v_cur;
    v_cur.push_back(sub.nodes.front().config);
    if (n_sub > 1) v_cur.push_back(sub.nodes.back().config);
    for (const int i : qualified) v_cur.push_back(sub.nodes[i].config);
    for (const auto& r : replacements) v_cur.push_back(r.config);

    std::vector<NewViewpoint> completions;
    {
        const auto covered_now = vis::coverage(v_cur, grid, surface, fparams_);
        std::vector<Eigen::Vector3d> positions;
        for (const auto& q : v_cur) positions.push_back(q.p);
        auto completion = repair::complete_coverage(pool_union, positions, s_window, covered_now,
                                                    grid, surface, fparams_, params_.lambda_d);
        for (const auto& cand : completion.added) {
            NewViewpoint nv;
            nv.config = cand.config;
            const auto cov = vis::covered_elements(cand.config, grid, surface, fparams_);
            for (const int eid : s_window) {
                if (cov.bits.test(eid)) nv.intended.push_back(eid);
            }
            completions.push_back(std::move(nv));
        }
        report.completion_count = static_cast<int>(completions.size());
        report.residual = std::move(completion.residual);
    }
    report.repair_ms = ms_since(t0);

    // Stage 2: intent-consistent reordering. Boundary nodes are the fixed
    // start/terminal; qualified viewpoints keep their relative order.
    tour::TourProblem problem;
    problem.positions.push_back(sub.nodes.front().config.p);
    problem.start = 0;
    std::vector<int> tour_to_sub;  // tour id -> subpath index (or -1 for new nodes)
    tour_to_sub.push_back(0);
    std::vector<const NewViewpoint*> tour_new(1, nullptr);
    for (const int i : qualified) {
        problem.anchors.push_back(static_cast<int>(problem.positions.size()));
        problem.positions.push_back(sub.nodes[i].config.p);
        tour_to_sub.push_back(i);
        tour_new.push_back(nullptr);
    }
    for (const auto& bucket : {&replacements, &completions}) {
        for (const auto& nv : *bucket) {
            problem.positions.push_back(nv.config.p);
            tour_to_sub.push_back(-1);
            tour_new.push_back(&nv);
        }
    }
    if (n_sub > 1) {
        problem.terminal = static_cast<int>(problem.positions.size());
        problem.positions.push_back(sub.nodes.back().config.p);
        tour_to_sub.push_back(n_sub - 1);
        tour_new.push_back(nullptr);
    }
    const tour::TourSolution solution = tour::reorder(problem);
    report.order_ms = ms_since(t0) - report.repair_ms;

    // Stage 3: clean-sensing connectors between consecutive tour nodes.
    auto config_of = [&](int id) -> geom::CameraConfig {
        if (tour_to_sub[id] >= 0) return sub.nodes[tour_to_sub[id]].config;
        return tour_new[id]->config;
    };
    auto node_of = [&](int id) -> PathNode {
        if (tour_to_sub[id] >= 0) return sub.nodes[tour_to_sub[id]];
        PathNode n;
        n.config = tour_new[id]->config;
        n.kind = NodeKind::Viewpoint;
        n.intended = tour_new[id]->intended;
        return n;
    };

    ScanPath repaired;
    repaired.nodes.push_back(sub.nodes.front());
    const int pairs = static_cast<int>(solution.order.size()) - 1;
    for (int k = 0; k < pairs; ++k) {
        const geom::CameraConfig va = config_of(solution.order[k]);
        const geom::CameraConfig vb = config_of(solution.order[k + 1]);
        const double remaining = params_.budget_ms - ms_since(t0);
        bool dirty = false;
        std::vector<geom::CameraConfig> interior;
        if (remaining <= 0.0) {
            report.partial_connect = true;
            dirty = true;  // straight edge, never validated
        } else {
            searcher_.set_budget_ms(std::max(1.0, remaining / (pairs - k)));
            auto result = searcher_.search(va, vb, grid);
            if (!result.ok && params_.clean_sensing) {
                searcher_.set_clean_sensing(false);
                result = searcher_.search(va, vb, grid);
                searcher_.set_clean_sensing(true);
                dirty = true;
            }
            if (result.ok) {
                for (std::size_t i = 1; i + 1 < result.connector.configs.size(); ++i) {
                    interior.push_back(result.connector.configs[i]);
                }
            } else {
                dirty = true;  // straight fallback edge
            }
        }
        if (dirty) ++report.dirty_connectors;
        for (const auto& c : interior) {
            PathNode wp;
            wp.config = c;
            wp.kind = NodeKind::Waypoint;
            repaired.nodes.push_back(wp);
        }
        repaired.nodes.push_back(node_of(solution.order[k + 1]));
    }
    report.connect_ms = ms_since(t0) - report.repair_ms - report.order_ms;

    {
        std::vector<geom::CameraConfig> final_vps;
        for (const auto& n : repaired.nodes) {
            if (n.kind == NodeKind::Viewpoint) final_vps.push_back(n.config);
        }
        const auto cov = vis::coverage(final_vps, grid, surface, fparams_);
        int c = 0;
        for (const int eid : s_window) c += cov.bits.test(eid) ? 1 : 0;
        report.repaired_achievable = c;
    }

    if (report.dirty_connectors > 0) report.degraded = true;
    if (report.unrepaired_count > 0 && !report.residual.empty()) report.degraded = true;

    return finish(std::move(repaired));
}

std::pair<ScanPath, ReplanReport> Replanner::replan(const ScanPath& path, int exec_idx,
                                                    const world::VoxelGrid& grid,
                                                    const world::SurfaceModel& surface,
                                                    double now_s) {
    ReplanWindow window = extract_window(path, exec_idx, params_.horizon);
    auto [repaired, report] = replan_window(path, window, grid, surface);
    ScanPath updated = splice(path, window, repaired);
    last_replan_s_ = now_s;
    last_grid_version_ = grid.version();
    synced_ = true;
    return {std::move(updated), std::move(report)};
}

}  // namespace visia::replan
