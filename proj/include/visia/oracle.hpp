// Independent brute-force references for the core optimizers, runnable as
// cross-check suites. These deliberately avoid the implementation code paths
// they validate.
#pragma once

#include "visia/geom.hpp"
#include "visia/phi_astar.hpp"
#include "visia/repair.hpp"
#include "visia/tour.hpp"
#include "visia/world.hpp"

#include <optional>
#include <string>
#include <vector>

namespace visia::oracle {

// Max-overlap by direct evaluation at every interval endpoint.
repair::ShiftResult sweep_by_scan(std::span<const repair::BoundInterval> intervals, double s_lb);

// Smallest expelling shift by a fixed-step scan (1 mm by default).
double s_lb_by_scan(const geom::HalfSpaceSet& hs, const Eigen::Vector3d& d,
                    const Eigen::Vector3d& obstacle, double d_min, double step = 1e-3,
                    double s_max = 40.0);

// Reachability by breadth-first search over position cells, trying every
// quantized attitude offset within the correction bound at each cell.
bool bfs5d_feasible(const geom::CameraConfig& va, const geom::CameraConfig& vb,
                    const world::VoxelGrid& grid, const geom::FrustumParams& fparams,
                    const phiastar::SearchParams& params);

// Exact precedence-constrained optimum by full permutation enumeration.
std::optional<tour::TourSolution> sop_enumerate(const tour::TourProblem& problem);

// Chamfer by the O(|A||B|) double loop.
double chamfer_by_double_loop(std::span<const Eigen::Vector3d> a,
                              std::span<const Eigen::Vector3d> b);

// ---- Cross-check suites -------------------------------------------------

enum class Inject { None, SweepOffByOne };

struct SuiteResult {
    std::string name;
    bool pass = true;
    int cases = 0;
    std::string counterexample;  // first mismatch, human-readable
};

struct SuiteOptions {
    std::uint64_t seed = 0;
    int n = 0;  // 0: suite default size
    Inject inject = Inject::None;
};

SuiteResult run_sweep_suite(const SuiteOptions& opt);      // vs optimal_shift
SuiteResult run_slb_suite(const SuiteOptions& opt);        // vs s_lower_bound
SuiteResult run_phiastar_suite(const SuiteOptions& opt);   // vs Searcher feasibility
SuiteResult run_sop_suite(const SuiteOptions& opt);        // vs tour::reorder
SuiteResult run_chamfer_suite(const SuiteOptions& opt);    // vs sim::chamfer

std::vector<std::string> suite_names();
SuiteResult run_suite(const std::string& name, const SuiteOptions& opt);

}  // namespace visia::oracle
