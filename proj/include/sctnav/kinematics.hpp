// Unicycle-cart motion primitives: pivots, constant-curvature arcs and
// straights, chained into time-parameterized motion plans.

#pragma once

#include <cmath>
#include <cstddef>
#include <type_traits>
#include <variant>
#include <vector>

#include "sctnav/errors.hpp"
#include "sctnav/geometry.hpp"

namespace sctnav {

/// Velocity caps of the cart. Both must be strictly positive.
struct DynamicsLimits {
    double v_max = 0.25;               // m/s
    double w_max = deg_to_rad(10.0);   // rad/s

    [[nodiscard]] static DynamicsLimits simulation() { return {0.25, deg_to_rad(10.0)}; }
    [[nodiscard]] static DynamicsLimits real_robot() { return {0.25, deg_to_rad(30.0)}; }

    /// Smallest arc radius that can be driven at full linear speed.
    [[nodiscard]] double min_turn_radius() const noexcept { return v_max / w_max; }

    void validate() const {
        if (!(v_max > 0.0) || !(w_max > 0.0) || !std::isfinite(v_max) || !std::isfinite(w_max)) {
            throw InvalidInput("DynamicsLimits: v_max and w_max must be finite and > 0");
        }
    }

    friend bool operator==(const DynamicsLimits&, const DynamicsLimits&) = default;
};

/// Below this bearing an arc is treated as a straight line.
inline constexpr double kStraightTolerance = 1e-4;

struct Pivot {
    double delta_theta = 0.0;  // signed, rad
};

/// Circular arc driven at v_max. Positive radius turns left (CCW); the
/// central angle carries the same sign as the radius.
struct Arc {
    double radius = 0.0;
    double central_angle = 0.0;
};

struct Straight {
    double distance = 0.0;
};

using SegmentShape = std::variant<Pivot, Arc, Straight>;

/// One primitive of a plan, with its duration and travelled length under
/// the limits it was built for.
struct MotionSegment {
    SegmentShape shape;
    double duration = 0.0;
    double length = 0.0;

    [[nodiscard]] static MotionSegment make(const SegmentShape& shape, const DynamicsLimits& limits) {
        MotionSegment seg{shape, 0.0, 0.0};
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Pivot>) {
                    seg.length = 0.0;
                    seg.duration = std::abs(s.delta_theta) / limits.w_max;
                } else if constexpr (std::is_same_v<T, Arc>) {
                    seg.length = std::abs(s.radius * s.central_angle);
                    seg.duration = seg.length / limits.v_max;
                } else {
                    if (s.distance < 0.0) {
                        throw InvalidInput("Straight segment with negative distance");
                    }
                    seg.length = s.distance;
                    seg.duration = s.distance / limits.v_max;
                }
            },
            shape);
        return seg;
    }

    [[nodiscard]] bool is_pivot() const noexcept { return std::holds_alternative<Pivot>(shape); }
    [[nodiscard]] bool is_arc() const noexcept { return std::holds_alternative<Arc>(shape); }
    [[nodiscard]] bool is_straight() const noexcept { return std::holds_alternative<Straight>(shape); }
};

/// Pose reached after executing `fraction` in [0, 1] of the segment from `from`.
[[nodiscard]] inline Pose advance(const Pose& from, const SegmentShape& shape, double fraction) {
    return std::visit(
        [&](const auto& s) -> Pose {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Pivot>) {
                return {from.x, from.y, from.theta + fraction * s.delta_theta};
            } else if constexpr (std::is_same_v<T, Arc>) {
                // chord form: stable for very large radii
                const double phi = fraction * s.central_angle;
                const double chord = 2.0 * s.radius * std::sin(0.5 * phi);
                const double dir = from.theta + 0.5 * phi;
                return {from.x + chord * std::cos(dir), from.y + chord * std::sin(dir), from.theta + phi};
            } else {
                const double dist = fraction * s.distance;
                return {from.x + dist * std::cos(from.theta), from.y + dist * std::sin(from.theta), from.theta};
            }
        },
        shape);
}

/// |v_max / R| <= w_max, i.e. the arc can be driven at full linear speed.
[[nodiscard]] inline bool arc_feasible(const Arc& arc, const DynamicsLimits& limits) noexcept {
    return limits.v_max <= (limits.w_max + 1e-12) * std::abs(arc.radius);
}

/// An ordered chain of segments starting at `start`.
class MotionPlan {
  public:
    MotionPlan() = default;
    explicit MotionPlan(const Pose& start) : start_(start), end_(start) {}

    void push_back(const MotionSegment& seg) {
        end_ = advance(end_, seg.shape, 1.0);
        segments_.push_back(seg);
        total_time_ += seg.duration;
        total_length_ += seg.length;
    }

    /// Appends `other`, whose start must coincide with this plan's end.
    void append(const MotionPlan& other, double tolerance = 1e-6) {
        if (distance(end_.position(), other.start().position()) > tolerance) {
            throw InvalidInput("MotionPlan::append: plans are not contiguous");
        }
        for (const auto& seg : other.segments_) {
            push_back(seg);
        }
    }

    [[nodiscard]] const Pose& start() const noexcept { return start_; }
    [[nodiscard]] const Pose& end_pose() const noexcept { return end_; }
    [[nodiscard]] const std::vector<MotionSegment>& segments() const noexcept { return segments_; }
    [[nodiscard]] double total_time() const noexcept { return total_time_; }
    [[nodiscard]] double total_length() const noexcept { return total_length_; }
    [[nodiscard]] bool empty() const noexcept { return segments_.empty(); }

    /// Pose at time t, clamped to [0, total_time].
    [[nodiscard]] Pose pose_at_time(double t) const {
        Pose pose = start_;
        for (const auto& seg : segments_) {
            if (t <= seg.duration) {
                const double f = seg.duration > 0.0 ? std::max(0.0, t) / seg.duration : 1.0;
                return advance(pose, seg.shape, f);
            }
            t -= seg.duration;
            pose = advance(pose, seg.shape, 1.0);
        }
        return pose;
    }

    /// Poses spaced at most `spacing` metres of travel apart, both plan
    /// endpoints included. Pivots contribute their start position only.
    [[nodiscard]] std::vector<Pose> sample_by_length(double spacing) const {
        std::vector<Pose> out{start_};
        Pose pose = start_;
        for (const auto& seg : segments_) {
            if (seg.length > 0.0) {
                const auto n = static_cast<std::size_t>(std::ceil(seg.length / spacing));
                for (std::size_t k = 1; k <= n; ++k) {
                    out.push_back(advance(pose, seg.shape, static_cast<double>(k) / static_cast<double>(n)));
                }
            }
            pose = advance(pose, seg.shape, 1.0);
        }
        if (out.size() == 1 || !(out.back() == pose)) {
            out.push_back(pose);
        }
        return out;
    }

  private:
    Pose start_{};
    Pose end_{};
    std::vector<MotionSegment> segments_;
    double total_time_ = 0.0;
    double total_length_ = 0.0;
};

/// The circular arc tangent to `source`'s heading that passes through
/// `target`, or a Straight when the target lies on the heading ray. Does
/// not check angular-rate feasibility.
[[nodiscard]] inline SegmentShape arc_between(const Pose& source, const Point2& target) {
    const double d = distance(source.position(), target);
    if (!(d > 0.0)) {
        throw InvalidInput("arc_between: target coincides with source");
    }
    const double alpha = bearing_to(source, target);
    if (std::abs(alpha) < kStraightTolerance) {
        return Straight{d};
    }
    return Arc{d / (2.0 * std::sin(alpha)), 2.0 * alpha};
}

/// Halt-and-turn plan: pivot to face the target, then drive straight.
[[nodiscard]] inline MotionPlan point_turn_fastest(const Pose& source, const Point2& target,
                                                   const DynamicsLimits& limits) {
    const double d = distance(source.position(), target);
    if (!(d > 0.0)) {
        throw InvalidInput("point_turn_fastest: target coincides with source");
    }
    MotionPlan plan(source);
    const double alpha = bearing_to(source, target);
    if (alpha != 0.0) {
        plan.push_back(MotionSegment::make(Pivot{alpha}, limits));
    }
    plan.push_back(MotionSegment::make(Straight{d}, limits));
    return plan;
}

}  // namespace sctnav
