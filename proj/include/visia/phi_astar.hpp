// Clean-sensing segment search: weighted A* over 3D positions with 5-DoF
// lifting, occlusion-aware attitude correction and a quantized visibility
// cache.
#pragma once

#include "visia/geom.hpp"
#include "visia/vis.hpp"
#include "visia/world.hpp"

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

namespace visia::phiastar {

struct SearchParams {
    double delta_p = 0.1;        // grid step
    double lambda_heu = 10.0;    // heuristic weight
    double d_min = 0.2;          // clearance
    double budget_ms = 50.0;     // wall-clock budget
    int n_bis = 10;              // bisection iteration limit
    double dtheta_cache = geom::deg2rad(5.0);  // cache quantization
    double dpsi_cache = geom::deg2rad(5.0);
    double corr_bound = geom::deg2rad(30.0);   // per-axis attitude correction bound
    double local_radius = 3.0;   // local voxel query radius
    int local_cap = 64;
    bool clean_sensing = true;   // false: clearance-only baseline (conventional A*)
    bool use_cache = true;       // false: evaluate every clean test from scratch
};

struct CacheKey {
    std::int64_t x, y, z, t, s;
    bool operator==(const CacheKey&) const = default;
};

struct CacheKeyHash {
    std::size_t operator()(const CacheKey& k) const {
        std::uint64_t h = 1469598103934665603ull;
        for (const std::int64_t v : {k.x, k.y, k.z, k.t, k.s}) {
            h = (h ^ static_cast<std::uint64_t>(v)) * 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

// tau(q) = (floor(p/delta_p), floor(theta/dtheta), floor(psi/dpsi)).
CacheKey cache_key(const geom::CameraConfig& q, const SearchParams& params);

// Interpolated attitude for a position between the endpoint viewpoints:
// rho = |p - p_a| / (|p - p_a| + |p - p_b|). Throws on a fully degenerate lift.
std::pair<double, double> lift(const Eigen::Vector3d& p, const geom::CameraConfig& va,
                               const geom::CameraConfig& vb);

// Minimum-perturbation pitch/yaw adjustment that empties the frustum of
// obstacle samples (occ = false), bisected per axis (yaw first) within
// +-corr_bound. Throws std::logic_error when called with occ already false.
std::optional<std::pair<double, double>> attitude_correct(const geom::CameraConfig& q,
                                                          const world::VoxelGrid& grid,
                                                          const geom::FrustumParams& fparams,
                                                          const SearchParams& params);

enum class FailReason { None, Unreachable, Occluded, Budget };

struct SearchStats {
    std::int64_t expansions = 0;
    std::int64_t occ_evals = 0;
    std::int64_t cache_hits = 0;
    std::int64_t cache_misses = 0;
    std::int64_t corrections = 0;
    std::int64_t correction_fails = 0;
};

struct Connector {
    std::vector<geom::CameraConfig> configs;
    double length = 0.0;
};

struct SearchResult {
    bool ok = false;
    FailReason fail = FailReason::None;
    Connector connector;
    SearchStats stats;
    double snap_residual_a = 0.0;  // distance from the given endpoints to the grid
    double snap_residual_b = 0.0;
};

// One search session. The visibility cache persists across calls as long as
// the endpoints, parameters and grid snapshot version stay the same, so
// repeating an identical query runs warm.
class Searcher {
public:
    Searcher(SearchParams params, geom::FrustumParams fparams);

    SearchResult search(const geom::CameraConfig& va, const geom::CameraConfig& vb,
                        const world::VoxelGrid& grid);

    void clear_cache();
    const SearchParams& params() const { return params_; }
    void set_budget_ms(double ms) { params_.budget_ms = ms; }
    void set_clean_sensing(bool on) { params_.clean_sensing = on; }

private:
    struct CacheEntry {
        bool clean = false;
        double theta = 0.0;  // attitude that passed (possibly corrected)
        double psi = 0.0;
    };

    SearchParams params_;
    geom::FrustumParams fparams_;
    std::unordered_map<CacheKey, CacheEntry, CacheKeyHash> cache_;
    std::uint64_t session_grid_version_ = ~0ull;
    Eigen::Vector3d session_a_{0, 0, 0}, session_b_{0, 0, 0};
    bool session_clean_ = true;
};

}  // namespace visia::phiastar
