// Planar geometry primitives shared by every module.

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sctnav {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

[[nodiscard]] constexpr double deg_to_rad(double deg) noexcept { return deg * kPi / 180.0; }
[[nodiscard]] constexpr double rad_to_deg(double rad) noexcept { return rad * 180.0 / kPi; }

/// Wraps an angle into (-pi, pi]. Throws std::invalid_argument on NaN/inf.
[[nodiscard]] inline double normalize_angle(double theta) {
    if (!std::isfinite(theta)) {
        throw std::invalid_argument("normalize_angle: non-finite angle");
    }
    double r = std::remainder(theta, kTwoPi);
    if (r <= -kPi) {
        r += kTwoPi;
    }
    if (r > kPi) {
        r -= kTwoPi;
    }
    return r;
}

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

[[nodiscard]] inline double distance(const Point2& a, const Point2& b) noexcept {
    return std::hypot(b.x - a.x, b.y - a.y);
}

/// Planar pose. Heading is counterclockwise from +x, kept in (-pi, pi].
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    Pose() = default;
    Pose(double x_, double y_, double theta_) : x(x_), y(y_), theta(normalize_angle(theta_)) {}

    [[nodiscard]] Point2 position() const noexcept { return {x, y}; }

    friend bool operator==(const Pose&, const Pose&) = default;
};

/// Signed angle from the pose heading to the direction of `target`.
[[nodiscard]] inline double bearing_to(const Pose& from, const Point2& target) {
    return normalize_angle(std::atan2(target.y - from.y, target.x - from.x) - from.theta);
}

}  // namespace sctnav
