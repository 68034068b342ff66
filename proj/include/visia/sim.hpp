// Deterministic closed-loop scenario execution (reveal -> trigger -> replan ->
// advance) and metric computation.
#pragma once

#include "visia/replan.hpp"
#include "visia/scenario.hpp"

#include <string>
#include <vector>

namespace visia::sim {

enum class Mode { VisibilityAware, ClearanceOnly };

inline const char* mode_name(Mode m) {
    return m == Mode::VisibilityAware ? "visibility-aware" : "clearance-only";
}

enum class RunStatus { Ok, Degraded, Timeout };

struct Frame {
    double t = 0.0;
    geom::CameraConfig config;
    bool occluded = false;               // occ against the ground-truth map
    std::vector<int> newly_covered;      // element ids first seen this frame
};

struct ReplanEvent {
    double t = 0.0;
    replan::TriggerReason reason = replan::TriggerReason::None;
    int i_s = 0;
    int i_e = 0;
    bool degraded = false;
    bool identity = false;
    int replacements = 0;
    int completions = 0;
    int residual = 0;
    double j_dev = 0.0;   // sum of replacement displacements in this event
    double cl_ms = 0.0;   // wall-clock latency (excluded from determinism checks)
};

struct RunReport {
    std::string mode;
    std::uint64_t seed = 0;
    RunStatus status = RunStatus::Ok;
    double ft_s = 0.0;
    double cr_pct = 0.0;
    double or_pct = 0.0;
    double vae = 0.0;
    double d_set_m = 0.0;
    double j_dev_m = 0.0;
    int total_frames = 0;
    int occluded_frames = 0;
    int covered_elements = 0;
    int surface_elements = 0;
    int replan_events = 0;
    std::vector<int> residual_elements;   // union over degraded events
    std::vector<double> first_seen_s;     // per element, -1 when never seen
    // Wall-clock fields live apart so reports stay byte-comparable.
    double cl_mean_ms = 0.0;
    double cl_max_ms = 0.0;
};

struct RunResult {
    RunReport report;
    std::vector<Frame> frames;
    std::vector<ReplanEvent> events;
    ScanPath executed;   // final path after all splices
    ScanPath nominal;    // with intended subsets attached
};

struct RunParams {
    replan::ReplanParams planner;
    double frame_dt = 0.1;       // 10 Hz frames and integration steps
    double watchdog_factor = 10.0;
};

// VaE identity used throughout: CR * (100 - OR) / FT, CR and OR in percent.
double vae(double cr_pct, double or_pct, double ft_s);

// Symmetric mean nearest-neighbor distance. Throws on an empty set.
double chamfer(std::span<const Eigen::Vector3d> a, std::span<const Eigen::Vector3d> b);

RunResult run(const world::Scenario& scenario, const RunParams& params, Mode mode);

// Report serialization; `include_timing` adds the wall-clock section.
std::string report_to_json(const RunReport& report, bool include_timing = true);
std::string frame_to_jsonl(const Frame& f);
std::string event_to_jsonl(const ReplanEvent& e);

}  // namespace visia::sim
