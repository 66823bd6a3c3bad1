// Deterministic episode simulator: discrete (v, w) action spaces polled at
// a fixed rate, constant-twist integration with collision substeps, a
// scripted plan-tracking controller, and the shaped / decaying rewards.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sctnav/errors.hpp"
#include "sctnav/geometry.hpp"
#include "sctnav/kinematics.hpp"
#include "sctnav/metrics.hpp"
#include "sctnav/pivot_table.hpp"
#include "sctnav/planner.hpp"
#include "sctnav/worldmap.hpp"

namespace sctnav {

enum class ActionSpaceKind : std::uint8_t { PointTurn4, Unicycle6, Unicycle15 };

struct ActionSpace {
    ActionSpaceKind kind;
    std::string name;
    std::vector<Action> actions;  // actions[0] is always the stop action

    [[nodiscard]] static ActionSpace point_turn4() {
        return {ActionSpaceKind::PointTurn4, "pt4", {{0, 0}, {1, 0}, {0, 1}, {0, -1}}};
    }

    [[nodiscard]] static ActionSpace unicycle6() {
        return {ActionSpaceKind::Unicycle6, "u6", {{0, 0}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};
    }

    [[nodiscard]] static ActionSpace unicycle15() {
        ActionSpace s{ActionSpaceKind::Unicycle15, "u15", {{0, 0}}};
        for (double v : {0.0, 0.5, 1.0}) {
            for (double w : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
                if (v != 0.0 || w != 0.0) {
                    s.actions.push_back({v, w});
                }
            }
        }
        return s;
    }

    /// Accepts pt4 / u6 / u15.
    [[nodiscard]] static ActionSpace from_name(const std::string& name) {
        if (name == "pt4") return point_turn4();
        if (name == "u6") return unicycle6();
        if (name == "u15") return unicycle15();
        throw InvalidInput("unknown action space '" + name + "' (expected pt4, u6 or u15)");
    }

    [[nodiscard]] bool contains(const Action& a) const {
        return std::find(actions.begin(), actions.end(), a) != actions.end();
    }
};

struct SimConfig {
    DynamicsLimits limits;
    double step_duration = 1.0;  // policy polled at 1 Hz
    bool sliding = false;
    std::size_t substeps = 20;

    void validate() const {
        limits.validate();
        if (!(step_duration > 0.0)) {
            throw InvalidInput("SimConfig: step_duration must be > 0");
        }
        if (substeps < 1) {
            throw InvalidInput("SimConfig: substeps must be >= 1");
        }
    }
};

/// Exact constant-twist motion over dt.
[[nodiscard]] inline Pose integrate_twist(const Pose& from, double v, double w, double dt) {
    if (std::abs(w) < 1e-9) {
        return advance(from, Straight{v * dt}, 1.0);
    }
    if (v == 0.0) {
        return advance(from, Pivot{w * dt}, 1.0);
    }
    return advance(from, Arc{v / w, w * dt}, 1.0);
}

struct StepResult {
    Pose pose;
    bool collided = false;
    double displacement = 0.0;   // travelled arc length
    std::vector<Pose> substeps;  // pose after each substep
};

/// Applies one action for one step. With sliding off, motion halts at the
/// last collision-free substep. With sliding on, a blocked substep keeps
/// its rotation and the translation component along the free grid axis.
[[nodiscard]] inline StepResult step(const Pose& pose, const Action& action, const SimConfig& config,
                                     const OccupancyGrid& grid) {
    const double v = action.v * config.limits.v_max;
    const double w = action.w * config.limits.w_max;
    const double dt = config.step_duration / static_cast<double>(config.substeps);
    StepResult r;
    r.pose = pose;
    r.substeps.reserve(config.substeps);
    bool halted = false;
    for (std::size_t k = 0; k < config.substeps; ++k) {
        if (!halted) {
            const Pose next = integrate_twist(r.pose, v, w, dt);
            if (grid.is_free(next.x, next.y)) {
                r.displacement += std::abs(v) * dt;
                r.pose = next;
            } else {
                r.collided = true;
                if (!config.sliding) {
                    halted = true;
                } else {
                    const double dx = next.x - r.pose.x;
                    const double dy = next.y - r.pose.y;
                    // the free axis projection is |d| cos(collision angle)
                    const Point2 along_x{r.pose.x + dx, r.pose.y};
                    const Point2 along_y{r.pose.x, r.pose.y + dy};
                    const bool x_first = std::abs(dx) >= std::abs(dy);
                    const Point2 first = x_first ? along_x : along_y;
                    const Point2 second = x_first ? along_y : along_x;
                    if (grid.is_free(first)) {
                        r.displacement += distance(r.pose.position(), first);
                        r.pose = Pose(first.x, first.y, next.theta);
                    } else if (grid.is_free(second)) {
                        r.displacement += distance(r.pose.position(), second);
                        r.pose = Pose(second.x, second.y, next.theta);
                    } else {
                        r.pose = Pose(r.pose.x, r.pose.y, next.theta);
                    }
                }
            }
        }
        r.substeps.push_back(r.pose);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Rewards

enum class RewardScheme : std::uint8_t { Shaped, Decaying };

struct RewardConfig {
    double slack = -0.01;
    double terminal = 2.5;
    double decay_horizon = 80e6;  // training steps for the shaped term to reach zero
    RewardScheme scheme = RewardScheme::Shaped;

    /// 1 at step 0, linear to 0 at decay_horizon, 0 beyond.
    [[nodiscard]] double beta(double global_step) const {
        return std::max(0.0, 1.0 - global_step / decay_horizon);
    }

    void validate() const {
        if (!(decay_horizon > 0.0)) {
            throw InvalidInput("RewardConfig: decay_horizon must be > 0");
        }
    }
};

/// -(new - prev) + slack, plus terminal * S on the last step.
[[nodiscard]] inline double shaped_reward(double prev_geodesic, double new_geodesic,
                                          std::optional<int> terminal_success = std::nullopt,
                                          const RewardConfig& config = {}) {
    double r = -(new_geodesic - prev_geodesic) + config.slack;
    if (terminal_success) {
        r += config.terminal * static_cast<double>(*terminal_success);
    }
    return r;
}

/// -beta * (new - prev) + slack, plus terminal * S on the last step.
[[nodiscard]] inline double decaying_reward(double prev_geodesic, double new_geodesic, double global_step,
                                            const RewardConfig& config,
                                            std::optional<int> terminal_success = std::nullopt) {
    if (!(global_step >= 0.0)) {
        throw InvalidInput("decaying_reward: global_step must be >= 0");
    }
    double r = -config.beta(global_step) * (new_geodesic - prev_geodesic) + config.slack;
    if (terminal_success) {
        r += config.terminal * static_cast<double>(*terminal_success);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Scripted controller

struct FollowerOptions {
    double lookahead = 0.5;        // s
    double cross_weight = 1.0;     // per metre
    double heading_weight = 0.5;   // per radian
    double pursuit_distance = 0.1;  // m; nearer lookahead points give the plan heading instead
    double corridor = 1.0;         // abort when farther than this from the reference
    double collision_penalty = 1e3;
    std::size_t horizon = 2;  // actions simulated ahead when scoring a candidate
    std::size_t max_sequences = 4096;  // cap on sequences per step when deepening out of a loop
    double success_radius = kDefaultSuccessRadius;
    std::size_t max_steps = kDefaultMaxSteps;
};

struct FollowResult {
    Trajectory trajectory;
    std::vector<Pose> step_poses;  // pose before the first action and after each action
    bool aborted = false;
    std::size_t collisions = 0;
};

/// Greedy one-step tracker of a time-parameterized plan. The reference is
/// indexed by progress along the plan (the nearest plan time within a short
/// forward window) rather than by wall-clock time, so a slower agent is not
/// dragged off the path. Each step it simulates every sequence of
/// `horizon` non-stop actions and takes the first action of the sequence
/// ending closest to the reference; past the end of the plan it drives to
/// the goal, and it stops within the success radius. The follower is
/// deterministic, so returning to an earlier (pose, progress) state means it
/// is looping; it then deepens the lookahead, and aborts once the sequence
/// budget is spent.
[[nodiscard]] inline FollowResult follow_plan(const MotionPlan& plan, const Point2& goal, const ActionSpace& space,
                                              const SimConfig& config, const OccupancyGrid& grid,
                                              const FollowerOptions& options = {}) {
    config.validate();
    FollowResult out;
    Trajectory& traj = out.trajectory;
    traj.agent = space.name;
    Pose pose = plan.start();
    const double dt = config.step_duration;
    const double sub_dt = dt / static_cast<double>(config.substeps);
    const double total = plan.total_time();
    const double scan = 0.05 * dt;
    double progress = 0.0;
    traj.samples.push_back({0.0, pose});
    out.step_poses.push_back(pose);

    const std::size_t moves = static_cast<std::size_t>(
        std::count_if(space.actions.begin(), space.actions.end(), [](const Action& a) { return !a.is_stop(); }));
    const std::size_t base_horizon = std::max<std::size_t>(1, options.horizon);
    std::size_t max_horizon = base_horizon;
    for (double n = std::pow(static_cast<double>(moves), static_cast<double>(base_horizon + 1));
         n <= static_cast<double>(options.max_sequences); n *= static_cast<double>(moves)) {
        ++max_horizon;
    }
    std::size_t horizon = base_horizon;
    // states compared at nanometre / nanoradian resolution
    std::set<std::array<long long, 5>> visited;
    auto state_key = [&](double progress_now) {
        auto q = [](double v) { return std::llround(v * 1e9); };
        return std::array<long long, 5>{q(pose.x), q(pose.y), q(pose.theta), q(progress_now),
                                        static_cast<long long>(horizon)};
    };

    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * dt;
        if (distance(pose.position(), goal) <= options.success_radius) {
            traj.actions.push_back({t, space.actions.front()});
            out.step_poses.push_back(pose);
            traj.terminated_by_agent = true;
            break;
        }
        if (k >= options.max_steps) {
            break;
        }
        // plan time in the window whose pose best matches the current one;
        // heading disambiguates pivots, where the position does not change
        auto mismatch = [&](double tau) {
            const Pose q = plan.pose_at_time(tau);
            return distance(pose.position(), q.position()) +
                   options.heading_weight * std::abs(normalize_angle(pose.theta - q.theta));
        };
        double best_tau = progress;
        double best_match = mismatch(progress);
        const double window_end = std::min(total, progress + 2.0 * dt);
        for (double tau = progress + scan; tau <= window_end + 1e-12; tau += scan) {
            const double m = mismatch(std::min(tau, total));
            if (m <= best_match + 1e-9) {
                best_match = std::min(best_match, m);
                best_tau = std::min(tau, total);
            }
        }
        progress = best_tau;
        if (distance(pose.position(), plan.pose_at_time(progress).position()) > options.corridor) {
            out.aborted = true;
            break;
        }
        bool looping = false;
        while (!visited.insert(state_key(progress)).second) {
            if (horizon == max_horizon) {
                looping = true;
                break;
            }
            ++horizon;
        }
        if (looping) {
            out.aborted = true;
            break;
        }
        // error of a pose reached `n` steps from now
        auto error_at = [&](const Pose& p, std::size_t n) {
            const double t_ref = progress + static_cast<double>(n) * dt;
            const double d = distance(p.position(), goal);
            // the agent stops inside the success radius: prefer reaching
            // it in fewer steps, then closer to the goal
            if (d <= options.success_radius) {
                return 1e-6 * static_cast<double>(n) + 1e-9 * d;
            }
            if (t_ref <= total) {
                const Pose ref = plan.pose_at_time(t_ref);
                const Pose ref_ahead = plan.pose_at_time(t_ref + options.lookahead);
                // aim at the lookahead point once it is clearly ahead, so
                // cross-track drift shows up as heading error
                const double dx = ref_ahead.x - p.x;
                const double dy = ref_ahead.y - p.y;
                const double aim =
                    std::hypot(dx, dy) > options.pursuit_distance ? std::atan2(dy, dx) : ref_ahead.theta;
                return options.cross_weight * distance(p.position(), ref.position()) +
                       options.heading_weight * std::abs(normalize_angle(p.theta - aim));
            }
            return options.cross_weight * d + options.heading_weight * std::abs(bearing_to(p, goal));
        };
        // best error over the remaining `depth` actions from `p`; a pose
        // already inside the success radius stops there
        auto lookahead_error = [&](auto&& self, const Pose& p, std::size_t n, std::size_t depth) -> double {
            if (depth == 0 || distance(p.position(), goal) <= options.success_radius) {
                return error_at(p, n);
            }
            double best_e = std::numeric_limits<double>::infinity();
            for (const Action& a : space.actions) {
                if (a.is_stop()) {
                    continue;
                }
                const StepResult r = step(p, a, config, grid);
                const double e = self(self, r.pose, n + 1, depth - 1) + (r.collided ? options.collision_penalty : 0.0);
                best_e = std::min(best_e, e);
            }
            return best_e;
        };

        std::optional<StepResult> best;
        Action best_action{};
        double best_err = std::numeric_limits<double>::infinity();
        for (const Action& a : space.actions) {
            if (a.is_stop()) {
                continue;
            }
            StepResult r = step(pose, a, config, grid);
            double err = lookahead_error(lookahead_error, r.pose, 1, horizon - 1);
            if (r.collided) {
                err += options.collision_penalty;
            }
            if (err < best_err) {
                best_err = err;
                best_action = a;
                best = std::move(r);
            }
        }
        traj.actions.push_back({t, best_action});
        if (best->collided) {
            ++out.collisions;
        }
        for (std::size_t s = 0; s < best->substeps.size(); ++s) {
            traj.samples.push_back({t + static_cast<double>(s + 1) * sub_dt, best->substeps[s]});
        }
        if (distance(best->pose.position(), pose.position()) > 0.0) {
            horizon = base_horizon;
        }
        pose = best->pose;
        out.step_poses.push_back(pose);
    }
    return out;
}

/// Pivot-then-straight legs through each polyline vertex after the first.
[[nodiscard]] inline MotionPlan point_turn_polyline(const Pose& start, const Polyline& path,
                                                    const DynamicsLimits& limits) {
    MotionPlan plan(start);
    for (std::size_t k = 1; k < path.vertices.size(); ++k) {
        if (distance(plan.end_pose().position(), path.vertices[k]) <= 1e-9) {
            continue;
        }
        plan.append(point_turn_fastest(plan.end_pose(), path.vertices[k], limits));
    }
    return plan;
}

/// Extra clearance on top of the grid inflation for plans a follower tracks.
inline constexpr double kFollowerMargin = 0.1;

/// The plan a scripted agent tracks: point-turn legs along the simplified
/// A* polyline for PointTurn4, RRT*-Unicycle for the unicycle spaces. Both
/// are planned with `margin` extra inflation and fall back to the plain
/// grid if the margin seals the route.
[[nodiscard]] inline MotionPlan plan_reference(const ActionSpace& space, const Pose& start, const Point2& goal,
                                               const OccupancyGrid& grid, const DynamicsLimits& limits,
                                               const PivotTable& table, const RrtParams& params,
                                               double margin = kFollowerMargin) {
    auto plan_on = [&](const OccupancyGrid& g) {
        if (space.kind == ActionSpaceKind::PointTurn4) {
            const GridPath path = astar_shortest(g, start.position(), goal);
            return point_turn_polyline(start, simplify_polyline(g, path.polyline, params.sample_spacing), limits);
        }
        return plan_fastest(start, goal, g, limits, table, params);
    };
    if (margin > 0.0) {
        const OccupancyGrid padded = grid.with_inflation(grid.inflation_radius() + margin);
        if (padded.is_free(start.x, start.y) && padded.is_free(goal)) {
            try {
                return plan_on(padded);
            } catch (const NoPath&) {
            }
        }
    }
    return plan_on(grid);
}

// ---------------------------------------------------------------------------
// Episode rollout with reward log

struct RewardRecord {
    std::size_t step = 0;
    double global_step = 0.0;
    Action action;
    double prev_geodesic = 0.0;
    double new_geodesic = 0.0;
    double beta = 1.0;
    double reward = 0.0;
    bool terminal = false;
};

struct RolloutResult {
    Trajectory trajectory;
    std::vector<RewardRecord> rewards;
    int success = 0;
    bool aborted = false;
    double start_geodesic = 0.0;
    double end_geodesic = 0.0;
};

/// Runs the scripted follower on an episode and logs per-step rewards
/// against the grid geodesic to the episode goal.
[[nodiscard]] inline RolloutResult run_rollout(const Episode& episode, const OccupancyGrid& grid,
                                               const MotionPlan& plan, const ActionSpace& space,
                                               const SimConfig& config, const RewardConfig& reward,
                                               double global_step = 0.0) {
    reward.validate();
    FollowerOptions opts;
    opts.success_radius = episode.success_radius;
    opts.max_steps = episode.max_steps;
    FollowResult follow = follow_plan(plan, episode.goal, space, config, grid, opts);
    follow.trajectory.episode_id = episode.id;

    RolloutResult out;
    out.aborted = follow.aborted;
    out.success = judge_success(episode, follow.trajectory);
    const GeodesicField field(grid, episode.goal);
    auto geo = [&](const Pose& p) {
        const auto d = field.distance(p.position());
        if (!d) {
            throw NoPath("rollout: geodesic unavailable at (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")");
        }
        return *d;
    };
    const auto& actions = follow.trajectory.actions;
    for (std::size_t k = 0; k < actions.size(); ++k) {
        RewardRecord rec;
        rec.step = k;
        rec.global_step = global_step + static_cast<double>(k);
        rec.action = actions[k].action;
        rec.prev_geodesic = geo(follow.step_poses[k]);
        rec.new_geodesic = geo(follow.step_poses[k + 1]);
        rec.terminal = k + 1 == actions.size();
        const std::optional<int> s = rec.terminal ? std::optional<int>(out.success) : std::nullopt;
        if (reward.scheme == RewardScheme::Shaped) {
            rec.beta = 1.0;
            rec.reward = shaped_reward(rec.prev_geodesic, rec.new_geodesic, s, reward);
        } else {
            rec.beta = reward.beta(rec.global_step);
            rec.reward = decaying_reward(rec.prev_geodesic, rec.new_geodesic, rec.global_step, reward, s);
        }
        out.rewards.push_back(rec);
    }
    out.start_geodesic = geo(follow.step_poses.front());
    out.end_geodesic = geo(follow.step_poses.back());
    out.trajectory = std::move(follow.trajectory);
    return out;
}

}  // namespace sctnav
