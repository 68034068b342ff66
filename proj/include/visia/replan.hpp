// Plug-in replanning layer: trigger detection, receding-horizon window
// extraction, Level-I repair + Level-II connection under a time budget, and
// splice back into the ongoing path.
#pragma once

#include "visia/geom.hpp"
#include "visia/path.hpp"
#include "visia/phi_astar.hpp"
#include "visia/repair.hpp"
#include "visia/tour.hpp"
#include "visia/vis.hpp"
#include "visia/world.hpp"

#include <optional>
#include <vector>

namespace visia::replan {

struct ReplanParams {
    double d_min = 0.2;
    double lambda_d = 5.0;
    double horizon = 10.0;            // receding-horizon arc length (m)
    double budget_ms = 50.0;          // per replanning call
    double refresh_interval_s = 1.0;  // periodic resync with the evolving map
    bool clean_sensing = true;        // false: clearance-only baseline
    repair::RepairParams repair;
    phiastar::SearchParams search;

    // Budget split across stages; later stages absorb slack from earlier ones.
    double frac_repair = 0.4;
    double frac_order = 0.1;
};

enum class TriggerReason { None, Clearance, Occlusion, Periodic };

struct Trigger {
    TriggerReason reason = TriggerReason::None;
    int node_index = -1;

    explicit operator bool() const { return reason != TriggerReason::None; }
};

struct ReplanWindow {
    int i_s = 0;
    int i_e = 0;
};

// i_s = exec_idx; i_e = smallest index whose cumulative arc length reaches H,
// clamped at the path end.
ReplanWindow extract_window(const ScanPath& path, int exec_idx, double horizon);

struct ReplanReport {
    bool triggered = false;
    int i_s = 0;  // final window after anchor growth
    int i_e = 0;
    bool degraded = false;
    bool identity = false;  // nothing wrong inside the window
    int invalid_count = 0;
    int unrepaired_count = 0;
    int replacement_count = 0;
    int completion_count = 0;
    std::vector<int> residual;             // window-intended elements left uncovered
    std::vector<double> displacements;     // per accepted replacement
    int dirty_connectors = 0;              // clearance-only fallbacks
    int window_intended = 0;
    int nominal_achievable = 0;   // window coverage of the nominal nodes, current map
    int repaired_achievable = 0;  // window coverage of the repaired nodes, current map
    bool partial_repair = false;  // repair stage hit its deadline
    bool partial_connect = false;
    double repair_ms = 0.0;
    double order_ms = 0.0;
    double connect_ms = 0.0;
    double total_ms = 0.0;
};

// P_update = prefix [0, i_s) + repaired + suffix (i_e, end]. Throws when the
// repaired endpoints do not match the window boundary configurations.
ScanPath splice(const ScanPath& path, const ReplanWindow& window, const ScanPath& repaired);

struct TimedTrajectory {
    std::vector<geom::CameraConfig> configs;  // consecutive duplicates dropped
    std::vector<double> durations;            // per edge, seconds
    double total = 0.0;
};

// Kinematic time parameterization: per-edge duration is the slowest axis,
// max(|dp|/v_max, |dtheta|/omega_max, |dpsi|/omega_max).
TimedTrajectory time_parameterize(const ScanPath& path, double v_max, double omega_max);

class Replanner {
public:
    Replanner(ReplanParams params, geom::FrustumParams fparams);

    // Scans the window ahead of exec_idx and reports the first violation, or
    // `periodic` when the refresh interval elapsed and the map has changed.
    Trigger should_replan(const ScanPath& path, int exec_idx, const world::VoxelGrid& grid,
                          const world::SurfaceModel& surface, double now_s);

    // Repairs the given window on the grid snapshot; returns the repaired
    // sub-path (window-local) plus a report. Grows the window in place until
    // both endpoints are valid anchors.
    std::pair<ScanPath, ReplanReport> replan_window(const ScanPath& path, ReplanWindow& window,
                                                    const world::VoxelGrid& grid,
                                                    const world::SurfaceModel& surface);

    // Plug-in entry point: extract window, repair, splice. Also resets the
    // refresh bookkeeping.
    std::pair<ScanPath, ReplanReport> replan(const ScanPath& path, int exec_idx,
                                             const world::VoxelGrid& grid,
                                             const world::SurfaceModel& surface, double now_s);

    const ReplanParams& params() const { return params_; }
    ReplanParams& params() { return params_; }

private:
    bool node_valid_anchor(const PathNode& node, const world::VoxelGrid& grid,
                           const world::SurfaceModel& surface) const;

    ReplanParams params_;
    geom::FrustumParams fparams_;
    phiastar::Searcher searcher_;
    std::optional<repair::DirectionTemplate> tpl_;
    geom::FrustumParams tpl_fparams_;
    bool synced_ = false;
    double last_replan_s_ = 0.0;
    std::uint64_t last_grid_version_ = 0;
};

}  // namespace visia::replan
