// RRT*-Unicycle: an RRT* over poses whose edge cost is the free-space
// fastest-path time of the unicycle cart, plus a vanilla Euclidean RRT* for
// shortest-path references.

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "sctnav/errors.hpp"
#include "sctnav/geometry.hpp"
#include "sctnav/kinematics.hpp"
#include "sctnav/pivot_table.hpp"
#include "sctnav/spatial_hash.hpp"
#include "sctnav/worldmap.hpp"

namespace sctnav {

/// Edge check spacing inside the planner. Checked sample sets nest under
/// halving, so a tree clean at 1 mm stays clean at any coarser re-check.
inline constexpr double kPlannerSampleSpacing = 0.001;

struct RrtParams {
    std::size_t iterations = 5000;
    double exploration_prob = 0.2;
    double step_radius = 0.75;
    double neighbor_radius = 1.0;
    double goal_radius = 0.5;
    double bias_sigma = 0.5;
    std::uint64_t seed = 0;
    double sample_spacing = kPlannerSampleSpacing;  // collision check spacing along edges
    double waypoint_spacing = 0.25;                 // best-path bias points
    std::size_t resample_budget = 100;

    void validate() const {
        if (!(exploration_prob >= 0.0 && exploration_prob <= 1.0)) {
            throw InvalidInput("RrtParams: exploration_prob must be in [0, 1]");
        }
        if (!(step_radius > 0.0) || !(neighbor_radius > 0.0) || !(goal_radius > 0.0) || !(bias_sigma > 0.0) ||
            !(sample_spacing > 0.0) || !(waypoint_spacing > 0.0)) {
            throw InvalidInput("RrtParams: radii, sigma and spacings must be > 0");
        }
        if (resample_budget == 0) {
            throw InvalidInput("RrtParams: resample_budget must be >= 1");
        }
    }
};

struct RrtNode {
    Pose pose;
    std::optional<std::size_t> parent;
    MotionPlan edge;  // from the parent's pose; empty for the root
    double cost = 0.0;
    std::vector<std::size_t> children;
};

struct ParentChoice {
    std::size_t parent;
    double theta;
    MotionPlan edge;
};

/// Which branch of the sampler produced a candidate.
enum class SampleSource : std::uint8_t { FreeSpace, NearShortestPath, NearFastestPath };

struct CandidateSample {
    Point2 point;
    SampleSource source;
};

/// Tree of reachable poses rooted at the start pose. Node costs are the
/// accumulated edge times from the root.
class RrtTree {
  public:
    RrtTree(const Pose& start, const Point2& goal, const OccupancyGrid& grid, double bucket_size)
        : start_(start),
          goal_(goal),
          hash_(grid.origin(), {grid.origin().x + grid.width_m(), grid.origin().y + grid.height_m()}, bucket_size) {
        nodes_.push_back(RrtNode{start, std::nullopt, MotionPlan(start), 0.0, {}});
        hash_.insert(0, start.position());
    }

    [[nodiscard]] const std::vector<RrtNode>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const RrtNode& node(std::size_t id) const { return nodes_.at(id); }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    [[nodiscard]] const Pose& start() const noexcept { return start_; }
    [[nodiscard]] const Point2& goal() const noexcept { return goal_; }

    [[nodiscard]] std::vector<std::size_t> within(const Point2& p, double radius) const { return hash_.within(p, radius); }
    [[nodiscard]] std::size_t nearest(const Point2& p) const { return *hash_.nearest(p); }

    std::size_t add(std::size_t parent, MotionPlan edge) {
        const std::size_t id = nodes_.size();
        const double cost = nodes_.at(parent).cost + edge.total_time();
        const Pose pose = edge.end_pose();
        nodes_.push_back(RrtNode{pose, parent, std::move(edge), cost, {}});
        nodes_[parent].children.push_back(id);
        hash_.insert(id, pose.position());
        return id;
    }

    /// Moves `id` under `parent` and recomputes the costs of its subtree.
    void reparent(std::size_t id, std::size_t parent, MotionPlan edge) {
        RrtNode& n = nodes_.at(id);
        assert(n.parent.has_value());
        auto& siblings = nodes_[*n.parent].children;
        siblings.erase(std::find(siblings.begin(), siblings.end(), id));
        n.parent = parent;
        n.edge = std::move(edge);
        nodes_[parent].children.push_back(id);
        refresh_costs(id);
    }

    /// Worst absolute difference between each stored cost and the sum of
    /// edge times along its root path; also checks parent links.
    [[nodiscard]] double cost_inconsistency() const {
        double worst = 0.0;
        for (std::size_t id = 0; id < nodes_.size(); ++id) {
            double sum = 0.0;
            std::size_t cur = id;
            std::size_t hops = 0;
            while (nodes_[cur].parent) {
                sum += nodes_[cur].edge.total_time();
                cur = *nodes_[cur].parent;
                if (++hops > nodes_.size()) {
                    return std::numeric_limits<double>::infinity();  // cycle
                }
            }
            if (cur != 0) {
                return std::numeric_limits<double>::infinity();
            }
            worst = std::max(worst, std::abs(sum - nodes_[id].cost));
        }
        return worst;
    }

    /// Root-to-node chain of edges as one plan.
    [[nodiscard]] MotionPlan path_to(std::size_t id) const {
        std::vector<std::size_t> chain;
        for (std::size_t cur = id; nodes_.at(cur).parent; cur = *nodes_[cur].parent) {
            chain.push_back(cur);
        }
        MotionPlan plan(start_);
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
            plan.append(nodes_[*it].edge);
        }
        return plan;
    }

    /// True if `a` lies on the root path of `b` (a node is its own ancestor).
    [[nodiscard]] bool is_ancestor(std::size_t a, std::size_t b) const {
        for (std::size_t cur = b;; cur = *nodes_.at(cur).parent) {
            if (cur == a) {
                return true;
            }
            if (!nodes_.at(cur).parent) {
                return false;
            }
        }
    }

  private:
    void refresh_costs(std::size_t id) {
        std::vector<std::size_t> stack{id};
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            RrtNode& n = nodes_[cur];
            n.cost = nodes_[*n.parent].cost + n.edge.total_time();
            stack.insert(stack.end(), n.children.begin(), n.children.end());
        }
    }

    Pose start_;
    Point2 goal_;
    SpatialHash hash_;
    std::vector<RrtNode> nodes_;
};

/// Lowest-cost collision-free parent for a candidate at p among nodes
/// within the neighbour radius (or the single nearest node if none is in
/// range). Ties go to the lower node id.
[[nodiscard]] inline std::optional<ParentChoice> pick_parent(const RrtTree& tree, const OccupancyGrid& grid,
                                                             const DynamicsLimits& limits, const PivotTable& table,
                                                             const RrtParams& params, const Point2& p) {
    std::vector<std::size_t> near = tree.within(p, params.neighbor_radius);
    if (near.empty()) {
        near.push_back(tree.nearest(p));
    }
    struct Option {
        double cost;
        std::size_t id;
        MotionPlan edge;
    };
    std::vector<Option> options;
    options.reserve(near.size());
    for (std::size_t id : near) {
        const RrtNode& n = tree.node(id);
        if (distance(n.pose.position(), p) <= 1e-9) {
            continue;
        }
        MotionPlan edge = fastest_free_path(n.pose, p, limits, table);
        options.push_back({n.cost + edge.total_time(), id, std::move(edge)});
    }
    std::sort(options.begin(), options.end(), [](const Option& a, const Option& b) {
        return a.cost != b.cost ? a.cost < b.cost : a.id < b.id;
    });
    // cheapest first, so the first collision-free option wins
    for (auto& o : options) {
        if (!plan_collides(o.edge, grid, params.sample_spacing)) {
            const double theta = o.edge.end_pose().theta;
            return ParentChoice{o.id, theta, std::move(o.edge)};
        }
    }
    return std::nullopt;
}

/// Re-parents neighbours of `id` that become cheaper through it. Returns
/// the number of re-parented nodes.
inline std::size_t rewire(RrtTree& tree, const OccupancyGrid& grid, const DynamicsLimits& limits,
                          const PivotTable& table, const RrtParams& params, std::size_t id) {
    const Pose fresh_pose = tree.node(id).pose;
    std::size_t changed = 0;
    for (std::size_t nb : tree.within(fresh_pose.position(), params.neighbor_radius)) {
        if (nb == id || nb == 0) {
            continue;
        }
        const Pose nb_pose = tree.node(nb).pose;
        if (distance(fresh_pose.position(), nb_pose.position()) <= 1e-9) {
            continue;
        }
        MotionPlan edge = pose_to_pose_plan(fresh_pose, nb_pose, limits, table);
        const double candidate = tree.node(id).cost + edge.total_time();
        if (!(candidate < tree.node(nb).cost - 1e-12)) {
            continue;
        }
        if (plan_collides(edge, grid, params.sample_spacing)) {
            continue;
        }
        // re-parenting an ancestor of id under id would close a cycle
        if (tree.is_ancestor(nb, id)) {
            continue;
        }
        tree.reparent(nb, id, std::move(edge));
        ++changed;
    }
    return changed;
}

/// Incremental RRT*-Unicycle planner. One instance plans one query; call
/// `iterate()` repeatedly or `run()` for the configured iteration count.
class RrtUnicyclePlanner {
  public:
    RrtUnicyclePlanner(const OccupancyGrid& grid, const DynamicsLimits& limits, const PivotTable& table,
                       const RrtParams& params, const Pose& start, const Point2& goal)
        : grid_(&grid),
          limits_(limits),
          table_(&table),
          params_(params),
          rng_(params.seed),
          tree_(start, goal, grid, params.neighbor_radius) {
        params_.validate();
        limits_.validate();
        if (!(table.limits() == limits)) {
            throw InvalidInput("RrtUnicyclePlanner: pivot table built for different limits");
        }
        if (!grid.is_free(start.x, start.y) || !grid.is_free(goal)) {
            throw InvalidInput("RrtUnicyclePlanner: start or goal is not free");
        }
        shortest_ = astar_shortest(grid, start.position(), goal).polyline;
        consider_goal_leg(0);
    }

    [[nodiscard]] const RrtTree& tree() const noexcept { return tree_; }
    [[nodiscard]] const RrtParams& params() const noexcept { return params_; }
    [[nodiscard]] const Polyline& shortest_path() const noexcept { return shortest_; }
    [[nodiscard]] std::optional<double> best_goal_time() const noexcept { return best_time_; }
    [[nodiscard]] bool path_to_goal_found() const noexcept { return best_time_.has_value(); }
    [[nodiscard]] std::size_t iterations_done() const noexcept { return iterations_; }

    /// Draws the next candidate location, or nullopt if the resample budget
    /// ran out.
    std::optional<CandidateSample> sample_candidate() {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t attempt = 0; attempt < params_.resample_budget; ++attempt) {
            const double e = unit(rng_);
            if (e < params_.exploration_prob || !path_to_goal_found()) {
                std::optional<Point2> p;
                SampleSource source{};
                if (e < params_.exploration_prob) {
                    p = sample_free(*grid_, rng_);
                    source = SampleSource::FreeSpace;
                } else {
                    p = sample_near(shortest_.vertices);
                    source = SampleSource::NearShortestPath;
                }
                if (!p) {
                    continue;
                }
                const Point2 projected = project(*p);
                if (!grid_->is_free(projected)) {
                    continue;
                }
                return CandidateSample{projected, source};
            }
            if (auto p = sample_near(waypoints_)) {
                return CandidateSample{*p, SampleSource::NearFastestPath};
            }
        }
        return std::nullopt;
    }

    /// Pulls p onto the step-radius circle around its nearest node when it
    /// is farther than the step radius from every node.
    [[nodiscard]] Point2 project(const Point2& p) const {
        const Pose& near = tree_.node(tree_.nearest(p)).pose;
        const double d = distance(near.position(), p);
        if (d <= params_.step_radius) {
            return p;
        }
        const double f = params_.step_radius / d;
        return {near.x + f * (p.x - near.x), near.y + f * (p.y - near.y)};
    }

    [[nodiscard]] std::optional<ParentChoice> pick_parent(const Point2& p) const {
        return sctnav::pick_parent(tree_, *grid_, limits_, *table_, params_, p);
    }

    std::size_t rewire(std::size_t id) { return sctnav::rewire(tree_, *grid_, limits_, *table_, params_, id); }

    /// Cheapest root-to-goal plan through any node within the goal radius.
    [[nodiscard]] std::optional<MotionPlan> extract_best() const {
        const auto best = best_candidate();
        if (!best) {
            return std::nullopt;
        }
        MotionPlan plan = tree_.path_to(best->node);
        if (!best->leg.empty()) {
            plan.append(best->leg);
        }
        return plan;
    }

    /// One sample / connect / insert / rewire round. Returns the new node id.
    std::optional<std::size_t> iterate() {
        ++iterations_;
        const auto sample = sample_candidate();
        if (!sample) {
            return std::nullopt;
        }
        auto choice = pick_parent(sample->point);
        if (!choice) {
            return std::nullopt;
        }
        const std::size_t id = tree_.add(choice->parent, std::move(choice->edge));
        rewire(id);
        consider_goal_leg(id);
        refresh_best();
        return id;
    }

    void run() {
        while (iterations_ < params_.iterations) {
            iterate();
        }
    }

  private:
    struct GoalLeg {
        std::size_t node;
        MotionPlan leg;
    };

    struct BestCandidate {
        std::size_t node;
        const MotionPlan& leg;
    };

    /// Gaussian perturbation around a uniformly chosen anchor, rejection-
    /// sampled into free space.
    std::optional<Point2> sample_near(const std::vector<Point2>& anchors) {
        if (anchors.empty()) {
            return std::nullopt;
        }
        std::uniform_int_distribution<std::size_t> pick(0, anchors.size() - 1);
        std::normal_distribution<double> noise(0.0, params_.bias_sigma);
        for (std::size_t attempt = 0; attempt < params_.resample_budget; ++attempt) {
            const Point2& a = anchors[pick(rng_)];
            const Point2 p{a.x + noise(rng_), a.y + noise(rng_)};
            if (grid_->is_free(p)) {
                return p;
            }
        }
        return std::nullopt;
    }

    void consider_goal_leg(std::size_t id) {
        const Pose& pose = tree_.node(id).pose;
        const double d = distance(pose.position(), tree_.goal());
        if (d > params_.goal_radius) {
            return;
        }
        MotionPlan leg(pose);
        if (d > 1e-9) {
            leg = fastest_free_path(pose, tree_.goal(), limits_, *table_);
            if (plan_collides(leg, *grid_, params_.sample_spacing)) {
                return;
            }
        }
        goal_legs_.push_back({id, std::move(leg)});
        refresh_best();
    }

    [[nodiscard]] std::optional<BestCandidate> best_candidate() const {
        const GoalLeg* best = nullptr;
        double best_time = std::numeric_limits<double>::infinity();
        for (const auto& g : goal_legs_) {
            const double t = tree_.node(g.node).cost + g.leg.total_time();
            if (t < best_time) {
                best_time = t;
                best = &g;
            }
        }
        if (!best) {
            return std::nullopt;
        }
        return BestCandidate{best->node, best->leg};
    }

    void refresh_best() {
        const auto best = best_candidate();
        if (!best) {
            return;
        }
        const double t = tree_.node(best->node).cost + best->leg.total_time();
        if (best_time_ && t >= *best_time_) {
            return;
        }
        best_time_ = t;
        waypoints_.clear();
        if (auto plan = extract_best()) {
            for (const Pose& p : plan->sample_by_length(params_.waypoint_spacing)) {
                waypoints_.push_back(p.position());
            }
        }
    }

    const OccupancyGrid* grid_;
    DynamicsLimits limits_;
    const PivotTable* table_;
    RrtParams params_;
    std::mt19937_64 rng_;
    RrtTree tree_;
    Polyline shortest_;
    std::vector<GoalLeg> goal_legs_;
    std::optional<double> best_time_;
    std::vector<Point2> waypoints_;
    std::size_t iterations_ = 0;
};

/// Runs RRT*-Unicycle for params.iterations rounds and returns the fastest
/// plan found. Throws NoPath if the goal is unreachable.
[[nodiscard]] inline MotionPlan plan_fastest(const Pose& start, const Point2& goal, const OccupancyGrid& grid,
                                             const DynamicsLimits& limits, const PivotTable& table,
                                             const RrtParams& params) {
    RrtUnicyclePlanner planner(grid, limits, table, params, start, goal);
    planner.run();
    auto plan = planner.extract_best();
    if (!plan) {
        throw NoPath("plan_fastest: no path to goal after " + std::to_string(params.iterations) + " iterations");
    }
    return *plan;
}

/// Vanilla RRT* minimising Euclidean length with straight-line steering.
/// Samples are goal-biased 5% of the time.
[[nodiscard]] inline Polyline plan_shortest_rrt(const OccupancyGrid& grid, const Point2& start, const Point2& goal,
                                                const RrtParams& params) {
    params.validate();
    if (!grid.is_free(start) || !grid.is_free(goal)) {
        throw InvalidInput("plan_shortest_rrt: start or goal is not free");
    }
    struct Node {
        Point2 p;
        std::size_t parent;
        double cost;
        std::vector<std::size_t> children;
    };
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::vector<Node> nodes{{start, kNone, 0.0, {}}};
    SpatialHash hash(grid.origin(), {grid.origin().x + grid.width_m(), grid.origin().y + grid.height_m()},
                     params.neighbor_radius);
    hash.insert(0, start);
    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double spacing = params.sample_spacing;

    auto refresh = [&](std::size_t root) {
        std::vector<std::size_t> stack{root};
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            Node& n = nodes[cur];
            n.cost = nodes[n.parent].cost + distance(nodes[n.parent].p, n.p);
            stack.insert(stack.end(), n.children.begin(), n.children.end());
        }
    };

    for (std::size_t it = 0; it < params.iterations; ++it) {
        Point2 target = unit(rng) < 0.05 ? goal : sample_free(grid, rng);
        const std::size_t nearest = *hash.nearest(target);
        const double d = distance(nodes[nearest].p, target);
        if (d <= 1e-9) {
            continue;
        }
        if (d > params.step_radius) {
            const double f = params.step_radius / d;
            target = {nodes[nearest].p.x + f * (target.x - nodes[nearest].p.x),
                      nodes[nearest].p.y + f * (target.y - nodes[nearest].p.y)};
        }
        if (!grid.is_free(target)) {
            continue;
        }
        std::vector<std::size_t> near = hash.within(target, params.neighbor_radius);
        if (near.empty()) {
            near.push_back(nearest);
        }
        std::size_t parent = kNone;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t id : near) {
            const double c = nodes[id].cost + distance(nodes[id].p, target);
            if (c < best && distance(nodes[id].p, target) > 1e-9 &&
                !segment_collides(grid, nodes[id].p, target, spacing)) {
                best = c;
                parent = id;
            }
        }
        if (parent == kNone) {
            continue;
        }
        const std::size_t id = nodes.size();
        nodes.push_back({target, parent, best, {}});
        nodes[parent].children.push_back(id);
        hash.insert(id, target);
        for (std::size_t nb : near) {
            if (nb == parent || nb == 0) {
                continue;
            }
            const double c = best + distance(target, nodes[nb].p);
            if (c < nodes[nb].cost - 1e-12 && !segment_collides(grid, target, nodes[nb].p, spacing)) {
                auto& siblings = nodes[nodes[nb].parent].children;
                siblings.erase(std::find(siblings.begin(), siblings.end(), nb));
                nodes[nb].parent = id;
                nodes[id].children.push_back(nb);
                refresh(nb);
            }
        }
    }

    std::size_t best_node = kNone;
    double best_len = std::numeric_limits<double>::infinity();
    for (std::size_t id : hash.within(goal, params.goal_radius)) {
        const double leg = distance(nodes[id].p, goal);
        if (nodes[id].cost + leg < best_len && !segment_collides(grid, nodes[id].p, goal, spacing)) {
            best_len = nodes[id].cost + leg;
            best_node = id;
        }
    }
    if (best_node == kNone) {
        throw NoPath("plan_shortest_rrt: no path to goal after " + std::to_string(params.iterations) + " iterations");
    }
    Polyline path;
    for (std::size_t cur = best_node; cur != kNone; cur = nodes[cur].parent) {
        path.vertices.push_back(nodes[cur].p);
    }
    std::reverse(path.vertices.begin(), path.vertices.end());
    if (distance(path.vertices.back(), goal) > 1e-9) {
        path.vertices.push_back(goal);
    }
    return path;
}

}  // namespace sctnav
