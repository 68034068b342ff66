#include "visia/geom.hpp"

#include <algorithm>
#include <stdexcept>

namespace visia::geom {

double normalize_angle(double a) {
    double r = std::fmod(a + kPi, 2.0 * kPi);
    if (r <= 0.0) r += 2.0 * kPi;
    return r - kPi;
}

double angle_diff(double a, double b) { return normalize_angle(b - a); }

double clamp_pitch(double theta) { return std::clamp(theta, kPitchMin, kPitchMax); }

Eigen::Vector3d view_direction(double theta, double psi) {
    const double ct = std::cos(theta);
    return {ct * std::cos(psi), ct * std::sin(psi), std::sin(theta)};
}

Eigen::Matrix3d camera_rotation(double theta, double psi) {
    // R = Rz(psi) * Ry(-theta); maps +x to view_direction(theta, psi).
    Eigen::Matrix3d r;
    r = Eigen::AngleAxisd(psi, Eigen::Vector3d::UnitZ()) *
        Eigen::AngleAxisd(-theta, Eigen::Vector3d::UnitY());
    return r;
}

HalfSpaceSet make_frustum(const CameraConfig& config, const FrustumParams& params) {
    const Eigen::Matrix3d r = camera_rotation(config.theta, config.psi);
    const Eigen::Vector3d fwd = r.col(0);

    const double sh = std::sin(params.alpha_h * 0.5);
    const double ch = std::cos(params.alpha_h * 0.5);
    const double sv = std::sin(params.alpha_v * 0.5);
    const double cv = std::cos(params.alpha_v * 0.5);

    // Outward normals in the camera frame (x forward, y left, z up).
    const std::array<Eigen::Vector3d, 5> cam_normals = {
        Eigen::Vector3d{-sh, ch, 0.0},   // Left   (bounds +y side)
        Eigen::Vector3d{-sh, -ch, 0.0},  // Right
        Eigen::Vector3d{-sv, 0.0, cv},   // Up
        Eigen::Vector3d{-sv, 0.0, -cv},  // Down
        Eigen::Vector3d{1.0, 0.0, 0.0},  // Far
    };

    HalfSpaceSet hs;
    hs.apex = config.p;
    hs.dir = fwd;
    for (int i = 0; i < 5; ++i) {
        const Eigen::Vector3d n = r * cam_normals[i];
        double h = -n.dot(config.p);
        if (static_cast<PlaneId>(i) == PlaneId::Far) h -= params.r_max;
        hs.planes[i] = HalfSpace{n, h};
    }
    return hs;
}

bool point_in_frustum(const HalfSpaceSet& hs, const Eigen::Vector3d& x) {
    if ((x - hs.apex).squaredNorm() == 0.0) return false;  // apex is outside by convention
    for (const auto& pl : hs.planes) {
        if (pl.n.dot(x) + pl.h > 0.0) return false;
    }
    return true;
}

std::pair<double, double> bearings(const CameraConfig& config, const Eigen::Vector3d& x) {
    const Eigen::Vector3d rel = x - config.p;
    if (rel.squaredNorm() == 0.0) throw std::invalid_argument("degenerate bearing");
    const Eigen::Matrix3d r = camera_rotation(config.theta, config.psi);
    const Eigen::Vector3d c = r.transpose() * rel;
    return {std::atan2(c.y(), c.x()), std::atan2(c.z(), c.x())};
}

std::pair<double, double> interp_attitude(std::pair<double, double> a,
                                          std::pair<double, double> b, double rho) {
    if (rho == 0.0) return a;
    if (rho == 1.0) return {b.first, normalize_angle(b.second)};
    const double theta = (1.0 - rho) * a.first + rho * b.first;
    const double psi = normalize_angle(a.second + rho * angle_diff(a.second, b.second));
    return {theta, psi};
}

HalfSpaceSet shift_offsets(const HalfSpaceSet& hs, const Eigen::Vector3d& d, double s) {
    HalfSpaceSet out = hs;
    out.apex = hs.apex + s * d;
    for (auto& pl : out.planes) pl.h -= s * pl.n.dot(d);
    return out;
}

}  // namespace visia::geom
