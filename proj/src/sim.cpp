#include "visia/sim.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace visia::sim {

using nlohmann::json;

double vae(double cr_pct, double or_pct, double ft_s) {
    return cr_pct * (100.0 - or_pct) / ft_s;
}

double chamfer(std::span<const Eigen::Vector3d> a, std::span<const Eigen::Vector3d> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("chamfer of an empty set");
    auto one_way = [](std::span<const Eigen::Vector3d> from, std::span<const Eigen::Vector3d> to) {
        double sum = 0.0;
        for (const auto& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to) best = std::min(best, (p - q).norm());
            sum += best;
        }
        return sum / static_cast<double>(from.size());
    };
    return one_way(a, b) + one_way(b, a);
}

namespace {

// Synchronized constant-rate interpolation along one edge: every axis finishes
// at the edge duration given by the slowest axis.
geom::CameraConfig edge_lerp(const geom::CameraConfig& a, const geom::CameraConfig& b,
                             double tau) {
    geom::CameraConfig c;
    c.p = a.p + tau * (b.p - a.p);
    const auto att = geom::interp_attitude({a.theta, a.psi}, {b.theta, b.psi}, tau);
    c.theta = att.first;
    c.psi = att.second;
    return c;
}

double edge_duration(const geom::CameraConfig& a, const geom::CameraConfig& b,
                     const world::KinematicLimits& limits) {
    return std::max({(b.p - a.p).norm() / limits.v_max,
                     std::abs(b.theta - a.theta) / limits.omega_max,
                     std::abs(geom::angle_diff(a.psi, b.psi)) / limits.omega_max});
}

}  // namespace

RunResult run(const world::Scenario& scenario, const RunParams& params, Mode mode) {
    RunResult result;
    world::World w = world::build_world(scenario);
    result.nominal = w.nominal;

    replan::ReplanParams planner_params = params.planner;
    planner_params.clean_sensing = (mode == Mode::VisibilityAware);
    replan::Replanner replanner(planner_params, scenario.camera);

    const replan::TimedTrajectory nominal_tt =
        replan::time_parameterize(w.nominal, scenario.limits.v_max, scenario.limits.omega_max);
    const double watchdog_s = std::max(1.0, params.watchdog_factor * nominal_tt.total);

    ScanPath path = w.nominal;
    geom::CameraConfig cfg = path.nodes.front().config;
    int next_node = 1;
    double edge_tau = 0.0;
    double edge_total = path.size() > 1
                            ? edge_duration(cfg, path.nodes[next_node].config, scenario.limits)
                            : 0.0;
    geom::CameraConfig edge_from = cfg;

    RunReport& report = result.report;
    report.mode = mode_name(mode);
    report.seed = scenario.seed;
    report.surface_elements = static_cast<int>(w.surface.elements.size());
    report.first_seen_s.assign(w.surface.elements.size(), -1.0);

    boost::dynamic_bitset<> covered(w.surface.elements.size());
    std::uint64_t version_at_check = ~0ull;
    std::uint64_t version_at_replan = w.online.version();
    double last_replan_t = 0.0;

    double t = 0.0;
    int step = 0;
    bool done = path.size() <= 1;

    world::reveal(w, cfg.p);

    auto sample_frame = [&](double now) {
        Frame f;
        f.t = now;
        f.config = cfg;
        f.occluded = vis::occ(cfg, w.truth, scenario.camera);
        const geom::HalfSpaceSet hs = geom::make_frustum(cfg, scenario.camera);
        for (const auto& v : w.truth.voxel_indices_in_frustum(hs, world::Label::Target)) {
            const int eid = w.surface.element_at(w.truth, v);
            if (eid < 0 || covered.test(eid)) continue;
            if (!w.truth.raycast(cfg.p, w.surface.elements[eid].pos, world::Label::Any).blocked) {
                covered.set(eid);
                report.first_seen_s[eid] = now;
                f.newly_covered.push_back(eid);
            }
        }
        if (f.occluded) ++report.occluded_frames;
        ++report.total_frames;
        result.frames.push_back(std::move(f));
    };

    sample_frame(0.0);

    while (!done) {
        if (t > watchdog_s) {
            report.status = RunStatus::Timeout;
            break;
        }
        // Advance one frame interval along the current path.
        double dt_left = params.frame_dt;
        while (dt_left > 0.0 && next_node < path.size()) {
            const double remaining = (1.0 - edge_tau) * edge_total;
            if (edge_total <= 0.0 || remaining <= dt_left) {
                dt_left -= std::max(0.0, remaining);
                cfg = path.nodes[next_node].config;
                ++next_node;
                if (next_node < path.size()) {
                    edge_from = cfg;
                    edge_tau = 0.0;
                    edge_total =
                        edge_duration(cfg, path.nodes[next_node].config, scenario.limits);
                }
            } else {
                edge_tau += dt_left / edge_total;
                cfg = edge_lerp(edge_from, path.nodes[next_node].config, edge_tau);
                dt_left = 0.0;
            }
        }
        t = (step + 1) * params.frame_dt;
        ++step;
        if (next_node >= path.size()) done = true;

        world::reveal(w, cfg.p);

        // The map only grows, so an all-clear verdict stays valid until the
        // grid version moves; the periodic refresh re-checks once the interval
        // elapses after an unhandled change.
        const bool map_moved = w.online.version() != version_at_check;
        const bool periodic_due = w.online.version() != version_at_replan &&
                                  (t - last_replan_t) >= planner_params.refresh_interval_s;
        if (!done && (map_moved || periodic_due)) {
            version_at_check = w.online.version();
            const int exec_idx = std::min(next_node, path.size() - 1);
            const replan::Trigger trig =
                replanner.should_replan(path, exec_idx, w.online, w.surface, t);
            if (trig) {
                replan::ReplanWindow window =
                    replan::extract_window(path, exec_idx, planner_params.horizon);
                auto [repaired, rep] = replanner.replan_window(path, window, w.online, w.surface);
                path = replan::splice(path, window, repaired);
                // Retarget the current edge toward the window entry.
                next_node = std::min(window.i_s, path.size() - 1);
                edge_from = cfg;
                edge_tau = 0.0;
                edge_total = edge_duration(cfg, path.nodes[next_node].config, scenario.limits);
                if (edge_total <= 0.0) {
                    // Already at the entry: head for the following node.
                    cfg = path.nodes[next_node].config;
                    ++next_node;
                    if (next_node < path.size()) {
                        edge_from = cfg;
                        edge_total = edge_duration(cfg, path.nodes[next_node].config,
                                                   scenario.limits);
                    } else {
                        done = true;
                    }
                }
                version_at_replan = w.online.version();
                version_at_check = w.online.version();
                last_replan_t = t;

                ReplanEvent ev;
                ev.t = t;
                ev.reason = trig.reason;
                ev.i_s = window.i_s;
                ev.i_e = window.i_e;
                ev.degraded = rep.degraded;
                ev.identity = rep.identity;
                ev.replacements = rep.replacement_count;
                ev.completions = rep.completion_count;
                ev.residual = static_cast<int>(rep.residual.size());
                for (const double d : rep.displacements) ev.j_dev += d;
                ev.cl_ms = rep.total_ms;
                if (rep.degraded) {
                    report.status = RunStatus::Degraded;
                    for (const int eid : rep.residual) {
                        if (std::find(report.residual_elements.begin(),
                                      report.residual_elements.end(),
                                      eid) == report.residual_elements.end()) {
                            report.residual_elements.push_back(eid);
                        }
                    }
                }
                result.events.push_back(ev);
            }
        }

        sample_frame(t);
    }

    result.executed = path;
    report.ft_s = t;
    report.covered_elements = static_cast<int>(covered.count());
    report.cr_pct = report.surface_elements > 0
                        ? 100.0 * covered.count() / double(report.surface_elements)
                        : 0.0;
    report.or_pct = report.total_frames > 0
                        ? 100.0 * report.occluded_frames / double(report.total_frames)
                        : 0.0;
    report.vae = report.ft_s > 0.0 ? vae(report.cr_pct, report.or_pct, report.ft_s) : 0.0;
    report.replan_events = static_cast<int>(result.events.size());
    std::sort(report.residual_elements.begin(), report.residual_elements.end());

    std::vector<Eigen::Vector3d> final_vps, nominal_vps;
    for (const auto& n : path.nodes) {
        if (n.kind == NodeKind::Viewpoint) final_vps.push_back(n.config.p);
    }
    for (const auto& n : w.nominal.nodes) {
        if (n.kind == NodeKind::Viewpoint) nominal_vps.push_back(n.config.p);
    }
    if (!final_vps.empty() && !nominal_vps.empty()) {
        report.d_set_m = chamfer(final_vps, nominal_vps);
    }
    for (const auto& ev : result.events) report.j_dev_m += ev.j_dev;
    if (!result.events.empty()) {
        double sum = 0.0;
        for (const auto& ev : result.events) {
            sum += ev.cl_ms;
            report.cl_max_ms = std::max(report.cl_max_ms, ev.cl_ms);
        }
        report.cl_mean_ms = sum / double(result.events.size());
    }
    return result;
}

std::string report_to_json(const RunReport& report, bool include_timing) {
    json j;
    j["mode"] = report.mode;
    j["seed"] = report.seed;
    j["status"] = report.status == RunStatus::Ok
                      ? "ok"
                      : (report.status == RunStatus::Degraded ? "degraded" : "timeout");
    j["ft_s"] = report.ft_s;
    j["cr_pct"] = report.cr_pct;
    j["or_pct"] = report.or_pct;
    j["vae"] = report.vae;
    j["d_set_m"] = report.d_set_m;
    j["j_dev_m"] = report.j_dev_m;
    j["total_frames"] = report.total_frames;
    j["occluded_frames"] = report.occluded_frames;
    j["covered_elements"] = report.covered_elements;
    j["surface_elements"] = report.surface_elements;
    j["replan_events"] = report.replan_events;
    j["residual_elements"] = report.residual_elements;
    j["first_seen_s"] = report.first_seen_s;
    if (include_timing) {
        j["timing"] = {{"cl_mean_ms", report.cl_mean_ms}, {"cl_max_ms", report.cl_max_ms}};
    }
    return j.dump(2);
}

std::string frame_to_jsonl(const Frame& f) {
    json j;
    j["type"] = "frame";
    j["t"] = f.t;
    j["p"] = {f.config.p.x(), f.config.p.y(), f.config.p.z()};
    j["theta"] = f.config.theta;
    j["psi"] = f.config.psi;
    j["occluded"] = f.occluded;
    j["new_elements"] = f.newly_covered;
    return j.dump();
}

std::string event_to_jsonl(const ReplanEvent& e) {
    json j;
    j["type"] = "replan";
    j["t"] = e.t;
    const char* reason = "none";
    switch (e.reason) {
        case replan::TriggerReason::Clearance: reason = "clearance"; break;
        case replan::TriggerReason::Occlusion: reason = "occlusion"; break;
        case replan::TriggerReason::Periodic: reason = "periodic"; break;
        default: break;
    }
    j["reason"] = reason;
    j["i_s"] = e.i_s;
    j["i_e"] = e.i_e;
    j["degraded"] = e.degraded;
    j["identity"] = e.identity;
    j["replacements"] = e.replacements;
    j["completions"] = e.completions;
    j["residual"] = e.residual;
    j["j_dev"] = e.j_dev;
    j["cl_ms"] = e.cl_ms;
    return j.dump();
}

}  // namespace visia::sim
