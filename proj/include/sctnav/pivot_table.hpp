// Free-space fastest paths for the unicycle cart: an optional in-place
// pivot followed by a single full-speed arc. The pivot amount comes from a
// brute-force lookup table over (relative bearing, distance).

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "sctnav/errors.hpp"
#include "sctnav/geometry.hpp"
#include "sctnav/kinematics.hpp"

namespace sctnav {

struct PivotTableShape {
    std::size_t bearing_bins = 360;
    std::size_t distance_bins = 64;
    double min_distance = 0.05;
    double max_distance = 10.0;
    std::size_t pivot_candidates = 2000;

    friend bool operator==(const PivotTableShape&, const PivotTableShape&) = default;
};

namespace detail {

/// Time to drive the arc that starts with residual bearing `beta` and ends
/// `d` metres away, or +inf if that arc exceeds the angular-rate limit.
[[nodiscard]] inline double residual_arc_time(double beta, double d, const DynamicsLimits& limits) {
    const double a = std::abs(beta);
    if (a < kStraightTolerance) {
        return d / limits.v_max;
    }
    const double s = std::sin(a);
    if (s < 1e-12) {
        return std::numeric_limits<double>::infinity();
    }
    if (2.0 * limits.v_max * s > (limits.w_max + 1e-12) * d) {
        return std::numeric_limits<double>::infinity();
    }
    return d * a / (s * limits.v_max);
}

}  // namespace detail

/// Optimal pre-arc pivot as a function of |bearing| and distance.
///
/// Bearing rows are centred at i * pi / (bearing_bins - 1), so row 0 is
/// exactly straight ahead and the last row exactly behind. Negative bearings
/// mirror the positive half. Distance columns are geometrically spaced over
/// [min_distance, max_distance]; queries outside the range clamp to the edge
/// column. Lookups use the nearest bin.
class PivotTable {
  public:
    PivotTable(DynamicsLimits limits, PivotTableShape shape, std::vector<double> entries)
        : limits_(limits), shape_(shape), entries_(std::move(entries)) {
        limits_.validate();
        validate_shape(shape_);
        if (entries_.size() != shape_.bearing_bins * shape_.distance_bins) {
            throw InvalidInput("PivotTable: entry count does not match bin counts");
        }
    }

    /// Brute-force sweep of pivot candidates for every bin centre.
    [[nodiscard]] static PivotTable build(const DynamicsLimits& limits, const PivotTableShape& shape = {}) {
        limits.validate();
        validate_shape(shape);
        std::vector<double> entries(shape.bearing_bins * shape.distance_bins, 0.0);
        for (std::size_t i = 0; i < shape.bearing_bins; ++i) {
            const double alpha = bearing_center(shape, i);
            for (std::size_t j = 0; j < shape.distance_bins; ++j) {
                entries[i * shape.distance_bins + j] =
                    optimal_pivot(alpha, distance_center(shape, j), limits, shape.pivot_candidates);
            }
        }
        return PivotTable(limits, shape, std::move(entries));
    }

    /// argmin over phi in [0, alpha] of phi / w_max + arc time of the residual.
    [[nodiscard]] static double optimal_pivot(double alpha, double d, const DynamicsLimits& limits,
                                              std::size_t candidates) {
        assert(alpha >= 0.0 && candidates >= 2);
        double best_phi = alpha;
        double best_time = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < candidates; ++k) {
            const double phi = alpha * static_cast<double>(k) / static_cast<double>(candidates - 1);
            const double t = phi / limits.w_max + detail::residual_arc_time(alpha - phi, d, limits);
            if (t < best_time) {
                best_time = t;
                best_phi = phi;
            }
        }
        assert(std::isfinite(best_time));
        return best_phi;
    }

    [[nodiscard]] static double bearing_center(const PivotTableShape& shape, std::size_t i) {
        return kPi * static_cast<double>(i) / static_cast<double>(shape.bearing_bins - 1);
    }

    [[nodiscard]] static double distance_center(const PivotTableShape& shape, std::size_t j) {
        const double ratio = shape.max_distance / shape.min_distance;
        return shape.min_distance *
               std::pow(ratio, static_cast<double>(j) / static_cast<double>(shape.distance_bins - 1));
    }

    [[nodiscard]] std::size_t bearing_index(double bearing) const {
        const double step = kPi / static_cast<double>(shape_.bearing_bins - 1);
        const auto i = static_cast<std::size_t>(std::lround(std::abs(normalize_angle(bearing)) / step));
        return std::min(i, shape_.bearing_bins - 1);
    }

    [[nodiscard]] std::size_t distance_index(double d) const {
        const double clamped = std::clamp(d, shape_.min_distance, shape_.max_distance);
        const double u = std::log(clamped / shape_.min_distance) / std::log(shape_.max_distance / shape_.min_distance);
        const auto j = static_cast<std::size_t>(std::lround(u * static_cast<double>(shape_.distance_bins - 1)));
        return std::min(j, shape_.distance_bins - 1);
    }

    /// Unsigned table entry for row i (|bearing|) and column j.
    [[nodiscard]] double entry(std::size_t i, std::size_t j) const { return entries_.at(i * shape_.distance_bins + j); }

    /// Signed pivot for a signed bearing, with the sign of the bearing.
    [[nodiscard]] double lookup(double bearing, double d) const {
        const double magnitude = entry(bearing_index(bearing), distance_index(d));
        return bearing < 0.0 ? -magnitude : magnitude;
    }

    [[nodiscard]] const DynamicsLimits& limits() const noexcept { return limits_; }
    [[nodiscard]] const PivotTableShape& shape() const noexcept { return shape_; }
    [[nodiscard]] const std::vector<double>& entries() const noexcept { return entries_; }

    // Binary cache: "PVT1", v_max, w_max, bearing_bins, distance_bins,
    // min_distance, max_distance, pivot_candidates, then row-major entries.
    // All fields little-endian 64-bit.

    [[nodiscard]] std::string serialize() const {
        std::string out = "PVT1";
        put_f64(out, limits_.v_max);
        put_f64(out, limits_.w_max);
        put_u64(out, shape_.bearing_bins);
        put_u64(out, shape_.distance_bins);
        put_f64(out, shape_.min_distance);
        put_f64(out, shape_.max_distance);
        put_u64(out, shape_.pivot_candidates);
        for (double e : entries_) {
            put_f64(out, e);
        }
        return out;
    }

    [[nodiscard]] static PivotTable deserialize(const std::string& bytes) {
        if (bytes.size() < 4 || bytes.compare(0, 4, "PVT1") != 0) {
            throw InvalidInput("pivot table: bad magic");
        }
        std::size_t pos = 4;
        DynamicsLimits limits;
        PivotTableShape shape;
        limits.v_max = get_f64(bytes, pos);
        limits.w_max = get_f64(bytes, pos);
        shape.bearing_bins = get_u64(bytes, pos);
        shape.distance_bins = get_u64(bytes, pos);
        shape.min_distance = get_f64(bytes, pos);
        shape.max_distance = get_f64(bytes, pos);
        shape.pivot_candidates = get_u64(bytes, pos);
        validate_shape(shape);
        const std::size_t count = shape.bearing_bins * shape.distance_bins;
        if (bytes.size() != pos + 8 * count) {
            throw InvalidInput("pivot table: truncated or oversized entry block");
        }
        std::vector<double> entries(count);
        for (auto& e : entries) {
            e = get_f64(bytes, pos);
        }
        return PivotTable(limits, shape, std::move(entries));
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw InvalidInput("pivot table: cannot write " + path);
        }
        const std::string bytes = serialize();
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }

    /// Loads the cached table at `path` if it matches `limits` and `shape`;
    /// otherwise rebuilds it and rewrites the cache.
    [[nodiscard]] static PivotTable load_or_build(const std::string& path, const DynamicsLimits& limits,
                                                  const PivotTableShape& shape = {}) {
        if (std::ifstream in(path, std::ios::binary); in) {
            const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            try {
                PivotTable cached = deserialize(bytes);
                if (cached.limits() == limits && cached.shape() == shape) {
                    return cached;
                }
            } catch (const InvalidInput&) {
                // stale or corrupt; rebuild below
            }
        }
        PivotTable table = build(limits, shape);
        table.save(path);
        return table;
    }

  private:
    static void validate_shape(const PivotTableShape& shape) {
        if (shape.bearing_bins < 2 || shape.distance_bins < 2 || shape.pivot_candidates < 2) {
            throw InvalidInput("PivotTable: need at least 2 bins and 2 pivot candidates");
        }
        if (!(shape.min_distance > 0.0) || !(shape.max_distance > shape.min_distance)) {
            throw InvalidInput("PivotTable: distance range must satisfy 0 < min < max");
        }
    }

    static void put_u64(std::string& out, std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
        }
    }
    static void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

    static std::uint64_t get_u64(const std::string& in, std::size_t& pos) {
        if (pos + 8 > in.size()) {
            throw InvalidInput("pivot table: truncated header");
        }
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
        }
        pos += 8;
        return v;
    }
    static double get_f64(const std::string& in, std::size_t& pos) { return std::bit_cast<double>(get_u64(in, pos)); }

    DynamicsLimits limits_;
    PivotTableShape shape_;
    std::vector<double> entries_;
};

/// Pivot-then-arc plan from a pose to a location, at most two segments.
[[nodiscard]] inline MotionPlan fastest_free_path(const Pose& source, const Point2& target,
                                                  const DynamicsLimits& limits, const PivotTable& table) {
    if (!(table.limits() == limits)) {
        throw InvalidInput("fastest_free_path: pivot table built for different limits");
    }
    const double d = distance(source.position(), target);
    if (!(d > 1e-9)) {
        throw InvalidInput("fastest_free_path: target coincides with source");
    }
    const double alpha = bearing_to(source, target);
    double phi = table.lookup(alpha, d);
    if (std::abs(phi) > std::abs(alpha)) {
        phi = alpha;
    }
    double beta = alpha - phi;

    // The nearest bin may leave a residual arc that is too tight for this
    // exact (bearing, distance); pivot just enough to make it drivable.
    if (!std::isfinite(detail::residual_arc_time(beta, d, limits))) {
        const double k = limits.w_max * d / (2.0 * limits.v_max);
        const double max_beta = k >= 1.0 ? kPi / 2.0 : std::asin(k) * (1.0 - 1e-12);
        beta = std::copysign(std::min(std::abs(beta), max_beta), alpha);
        phi = alpha - beta;
    }
    // When the optimum is the tightest drivable arc, the bin centre's pivot
    // is off by the bin width; compare against the exact tightest arc and
    // the full pivot for this distance.
    {
        auto time_of = [&](double b) {
            return std::abs(alpha - b) / limits.w_max + detail::residual_arc_time(b, d, limits);
        };
        const double k = limits.w_max * d / (2.0 * limits.v_max);
        double best = time_of(beta);
        if (k < 1.0 && std::asin(k) < std::abs(alpha)) {
            const double tight = std::copysign(std::asin(k) * (1.0 - 1e-12), alpha);
            if (time_of(tight) < best) {
                best = time_of(tight);
                beta = tight;
            }
        }
        if (time_of(0.0) < best) {
            beta = 0.0;
        }
        phi = alpha - beta;
    }
    // Fold a near-zero residual into the pivot so the plan ends on target.
    if (std::abs(beta) < kStraightTolerance) {
        phi = alpha;
        beta = 0.0;
    }

    MotionPlan plan(source);
    if (phi != 0.0) {
        plan.push_back(MotionSegment::make(Pivot{phi}, limits));
    }
    if (beta == 0.0) {
        plan.push_back(MotionSegment::make(Straight{d}, limits));
    } else {
        plan.push_back(MotionSegment::make(Arc{d / (2.0 * std::sin(beta)), 2.0 * beta}, limits));
    }
    return plan;
}

/// Free-space plan to the target position plus a terminal pivot onto the
/// target heading. Overestimates the true pose-to-pose optimum.
[[nodiscard]] inline MotionPlan pose_to_pose_plan(const Pose& source, const Pose& target,
                                                  const DynamicsLimits& limits, const PivotTable& table) {
    MotionPlan plan = fastest_free_path(source, target.position(), limits, table);
    const double turn = normalize_angle(target.theta - plan.end_pose().theta);
    if (turn != 0.0) {
        plan.push_back(MotionSegment::make(Pivot{turn}, limits));
    }
    return plan;
}

[[nodiscard]] inline double pose_to_pose_time(const Pose& source, const Pose& target, const DynamicsLimits& limits,
                                              const PivotTable& table) {
    return pose_to_pose_plan(source, target, limits, table).total_time();
}

}  // namespace sctnav
