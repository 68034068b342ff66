// Camera frustum half-space algebra, bearings and attitude interpolation.
// Shared geometric kernel for all visibility math.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <utility>

namespace visia::geom {

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg2rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

// Gimbal pitch range of the platform camera.
inline constexpr double kPitchMin = -80.0 * kPi / 180.0;
inline constexpr double kPitchMax = 30.0 * kPi / 180.0;

// Wrap an angle into (-pi, pi].
double normalize_angle(double a);

// Shortest signed arc from `a` to `b`, in (-pi, pi].
double angle_diff(double a, double b);

double clamp_pitch(double theta);

// 5-DoF camera configuration: position, pitch (elevation toward +z), yaw (azimuth).
struct CameraConfig {
    Eigen::Vector3d p{0.0, 0.0, 0.0};
    double theta = 0.0;
    double psi = 0.0;
};

struct FrustumParams {
    double alpha_h = deg2rad(80.0);  // horizontal FoV, full angle
    double alpha_v = deg2rad(65.0);  // vertical FoV, full angle
    double r_max = 7.0;              // sensing range

    bool valid() const {
        return alpha_h > 0.0 && alpha_h < kPi && alpha_v > 0.0 && alpha_v < kPi && r_max > 0.0;
    }
};

// Unit viewing direction for (pitch, yaw): [cos(theta)cos(psi), cos(theta)sin(psi), sin(theta)].
Eigen::Vector3d view_direction(double theta, double psi);

// World-from-camera rotation. Camera axes: x forward, y left, z up.
Eigen::Matrix3d camera_rotation(double theta, double psi);

enum class PlaneId : int { Left = 0, Right = 1, Up = 2, Down = 3, Far = 4 };

struct HalfSpace {
    Eigen::Vector3d n;  // unit outward normal
    double h;           // inside <=> n.dot(x) + h <= 0
};

// Five-plane frustum {Left, Right, Up, Down, Far}. The four side planes pass
// through the apex; their sign convention excludes the mirror cone behind it.
struct HalfSpaceSet {
    std::array<HalfSpace, 5> planes;
    Eigen::Vector3d apex;
    Eigen::Vector3d dir;  // viewing direction (equals the Far plane normal)
};

HalfSpaceSet make_frustum(const CameraConfig& config, const FrustumParams& params);

// Boundary points count as inside; the apex itself is defined outside.
bool point_in_frustum(const HalfSpaceSet& hs, const Eigen::Vector3d& x);

// Horizontal/vertical bearings of `x` in the camera frame: (atan2(y, x'), atan2(z, x')).
// Throws std::invalid_argument("degenerate bearing") when x coincides with the apex.
std::pair<double, double> bearings(const CameraConfig& config, const Eigen::Vector3d& x);

// Componentwise blend of (theta, psi); yaw along the shorter arc, normalized.
std::pair<double, double> interp_attitude(std::pair<double, double> a,
                                          std::pair<double, double> b, double rho);

// Translate the frustum by s along unit direction d without rebuilding:
// h_m^s = h_m - s * (n_m . d). Equals make_frustum at apex + s*d.
HalfSpaceSet shift_offsets(const HalfSpaceSet& hs, const Eigen::Vector3d& d, double s);

}  // namespace visia::geom
