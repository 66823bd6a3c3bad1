// Uniform bucket grid over a bounded rectangle for radius and nearest
// queries on a growing point set.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "sctnav/geometry.hpp"

namespace sctnav {

class SpatialHash {
  public:
    SpatialHash(Point2 lower, Point2 upper, double bucket_size)
        : lower_(lower), bucket_(bucket_size) {
        cols_ = std::max(1, static_cast<int>(std::ceil((upper.x - lower.x) / bucket_)));
        rows_ = std::max(1, static_cast<int>(std::ceil((upper.y - lower.y) / bucket_)));
        buckets_.resize(static_cast<std::size_t>(cols_) * static_cast<std::size_t>(rows_));
    }

    void insert(std::size_t id, const Point2& p) {
        if (points_.size() <= id) {
            points_.resize(id + 1);
        }
        points_[id] = p;
        buckets_[bucket_of(col(p.x), row(p.y))].push_back(id);
    }

    /// Ids within `radius` of p (inclusive), in ascending id order.
    [[nodiscard]] std::vector<std::size_t> within(const Point2& p, double radius) const {
        std::vector<std::size_t> out;
        const int c0 = col(p.x - radius);
        const int c1 = col(p.x + radius);
        const int r0 = row(p.y - radius);
        const int r1 = row(p.y + radius);
        for (int r = r0; r <= r1; ++r) {
            for (int c = c0; c <= c1; ++c) {
                for (std::size_t id : buckets_[bucket_of(c, r)]) {
                    if (distance(points_[id], p) <= radius) {
                        out.push_back(id);
                    }
                }
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Closest id to p; lowest id on ties. Empty set gives nullopt.
    [[nodiscard]] std::optional<std::size_t> nearest(const Point2& p) const {
        std::optional<std::size_t> best;
        double best_d = std::numeric_limits<double>::infinity();
        const int pc = col(p.x);
        const int pr = row(p.y);
        const int max_ring = std::max(cols_, rows_);
        for (int ring = 0; ring <= max_ring; ++ring) {
            // every point outside the searched square is at least this far
            if (best && best_d < ring_clearance(p, pc, pr, ring)) {
                break;
            }
            for (int r = pr - ring; r <= pr + ring; ++r) {
                for (int c = pc - ring; c <= pc + ring; ++c) {
                    if (std::max(std::abs(r - pr), std::abs(c - pc)) != ring) {
                        continue;
                    }
                    if (r < 0 || c < 0 || r >= rows_ || c >= cols_) {
                        continue;
                    }
                    for (std::size_t id : buckets_[bucket_of(c, r)]) {
                        const double d = distance(points_[id], p);
                        if (d < best_d || (d == best_d && best && id < *best)) {
                            best_d = d;
                            best = id;
                        }
                    }
                }
            }
        }
        return best;
    }

  private:
    [[nodiscard]] int col(double x) const {
        return std::clamp(static_cast<int>(std::floor((x - lower_.x) / bucket_)), 0, cols_ - 1);
    }
    [[nodiscard]] int row(double y) const {
        return std::clamp(static_cast<int>(std::floor((y - lower_.y) / bucket_)), 0, rows_ - 1);
    }
    [[nodiscard]] std::size_t bucket_of(int c, int r) const {
        return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
    }
    /// Distance from p to the boundary of the (2*ring-1)-wide bucket square
    /// around its own bucket, i.e. a lower bound for anything in ring >= `ring`.
    [[nodiscard]] double ring_clearance(const Point2& p, int pc, int pr, int ring) const {
        if (ring == 0) {
            return 0.0;
        }
        const double left = p.x - (lower_.x + (pc - ring + 1) * bucket_);
        const double right = (lower_.x + (pc + ring) * bucket_) - p.x;
        const double down = p.y - (lower_.y + (pr - ring + 1) * bucket_);
        const double up = (lower_.y + (pr + ring) * bucket_) - p.y;
        return std::max(0.0, std::min({left, right, down, up}));
    }

    Point2 lower_;
    double bucket_;
    int cols_ = 1;
    int rows_ = 1;
    std::vector<std::vector<std::size_t>> buckets_;
    std::vector<Point2> points_;
};

}  // namespace sctnav
