// Navigation metrics: success, SPL (path-length weighted), SCT
// (completion-time weighted), and batch / intersection aggregation.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sctnav/errors.hpp"
#include "sctnav/geometry.hpp"

namespace sctnav {

/// LoCoBot body radius.
inline constexpr double kDefaultSuccessRadius = 0.2;
inline constexpr std::size_t kDefaultMaxSteps = 500;

struct Episode {
    std::string id;
    std::string map;  // path, relative to the episode file
    Pose start;
    Point2 goal;
    double success_radius = kDefaultSuccessRadius;
    std::size_t max_steps = kDefaultMaxSteps;

    void validate() const {
        if (!(success_radius > 0.0)) {
            throw InvalidInput("episode " + id + ": success_radius must be > 0");
        }
        if (max_steps < 1) {
            throw InvalidInput("episode " + id + ": max_steps must be >= 1");
        }
    }
};

/// A (v, w) command as fractions of (v_max, w_max).
struct Action {
    double v = 0.0;
    double w = 0.0;

    [[nodiscard]] bool is_stop() const noexcept { return v == 0.0 && w == 0.0; }
    friend bool operator==(const Action&, const Action&) = default;
};

struct TimedPose {
    double t = 0.0;
    Pose pose;
};

struct TimedAction {
    double t = 0.0;  // time the action was issued
    Action action;
};

struct Trajectory {
    std::string episode_id;
    std::string agent;
    std::vector<TimedPose> samples;
    std::vector<TimedAction> actions;
    bool terminated_by_agent = false;

    /// Time the episode ended: the issue time of the terminating action if
    /// the agent stopped, otherwise the last sample time.
    [[nodiscard]] double end_time() const {
        if (terminated_by_agent && !actions.empty()) {
            return actions.back().t;
        }
        return samples.empty() ? 0.0 : samples.back().t;
    }

    /// Samples up to the end of the episode; later samples are ignored.
    [[nodiscard]] std::size_t effective_samples() const {
        const double end = end_time();
        std::size_t n = 0;
        while (n < samples.size() && samples[n].t <= end) {
            ++n;
        }
        return n;
    }

    /// Completion time C: time of the last motion sample.
    [[nodiscard]] double completion_time() const {
        const std::size_t n = effective_samples();
        return n == 0 ? 0.0 : samples[n - 1].t;
    }

    /// Path length P: sum of distances between consecutive samples.
    [[nodiscard]] double path_length() const {
        const std::size_t n = effective_samples();
        double total = 0.0;
        for (std::size_t k = 1; k < n; ++k) {
            total += distance(samples[k - 1].pose.position(), samples[k].pose.position());
        }
        return total;
    }

    [[nodiscard]] Pose final_pose() const {
        const std::size_t n = effective_samples();
        if (n == 0) {
            throw InvalidInput("trajectory " + episode_id + ": no samples");
        }
        return samples[n - 1].pose;
    }

    void validate() const {
        if (samples.empty()) {
            throw InvalidInput("trajectory " + episode_id + ": no samples");
        }
        if (samples.front().t != 0.0) {
            throw InvalidInput("trajectory " + episode_id + ": samples must start at t = 0");
        }
        for (std::size_t k = 1; k < samples.size(); ++k) {
            if (!(samples[k].t > samples[k - 1].t)) {
                throw InvalidInput("trajectory " + episode_id + ": sample times must strictly increase");
            }
        }
    }
};

/// 1 iff the agent stopped itself within the success radius of the goal
/// using no more than max_steps actions.
[[nodiscard]] inline int judge_success(const Episode& episode, const Trajectory& trajectory) {
    if (trajectory.episode_id != episode.id) {
        throw InvalidInput("judge_success: trajectory belongs to episode '" + trajectory.episode_id + "', not '" +
                           episode.id + "'");
    }
    if (!trajectory.terminated_by_agent || trajectory.actions.empty() || !trajectory.actions.back().action.is_stop()) {
        return 0;
    }
    if (trajectory.actions.size() > episode.max_steps) {
        return 0;
    }
    const Pose end = trajectory.final_pose();
    return distance(end.position(), episode.goal) <= episode.success_radius ? 1 : 0;
}

/// S * L / max(P, L).
[[nodiscard]] inline double spl(int success, double path_length, double shortest_length) {
    if (!(shortest_length > 0.0)) {
        throw InvalidInput("spl: shortest path length must be > 0");
    }
    if (!(path_length >= 0.0)) {
        throw InvalidInput("spl: path length must be >= 0");
    }
    if (success == 0) {
        return 0.0;
    }
    return shortest_length / std::max(path_length, shortest_length);
}

/// S * T / max(C, T).
[[nodiscard]] inline double sct(int success, double completion_time, double fastest_time) {
    if (!(fastest_time > 0.0)) {
        throw InvalidInput("sct: fastest time must be > 0");
    }
    if (!(completion_time >= 0.0)) {
        throw InvalidInput("sct: completion time must be >= 0");
    }
    if (success == 0) {
        return 0.0;
    }
    return fastest_time / std::max(completion_time, fastest_time);
}

struct MetricsReport {
    std::string episode_id;
    int success = 0;
    double spl = 0.0;
    double sct = 0.0;
    double path_length = 0.0;      // P
    double shortest_length = 0.0;  // L
    double completion_time = 0.0;  // C
    double fastest_time = 0.0;     // T
    /// C < T on a successful episode: the reference planner was beaten.
    bool beat_reference = false;
};

/// Scores one trajectory against its shortest length L and fastest time T.
[[nodiscard]] inline MetricsReport score_episode(const Episode& episode, const Trajectory& trajectory,
                                                 double shortest_length, double fastest_time) {
    MetricsReport r;
    r.episode_id = episode.id;
    r.success = judge_success(episode, trajectory);
    r.path_length = trajectory.path_length();
    r.completion_time = trajectory.completion_time();
    r.shortest_length = shortest_length;
    r.fastest_time = fastest_time;
    r.spl = spl(r.success, r.path_length, shortest_length);
    r.sct = sct(r.success, r.completion_time, fastest_time);
    r.beat_reference = r.success == 1 && r.completion_time < fastest_time;
    return r;
}

/// Mean and 95% normal-approximation half-width (1.96 * s / sqrt(n)).
struct MeanCi {
    double mean = 0.0;
    double half_width = 0.0;
    std::size_t n = 0;

    [[nodiscard]] static MeanCi of(const std::vector<double>& xs) {
        MeanCi m;
        m.n = xs.size();
        if (xs.empty()) {
            return m;
        }
        double sum = 0.0;
        for (double x : xs) {
            sum += x;
        }
        m.mean = sum / static_cast<double>(xs.size());
        if (xs.size() > 1) {
            double ss = 0.0;
            for (double x : xs) {
                ss += (x - m.mean) * (x - m.mean);
            }
            const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
            m.half_width = 1.96 * sd / std::sqrt(static_cast<double>(xs.size()));
        }
        return m;
    }

    /// Display units: x100.
    [[nodiscard]] MeanCi scaled(double factor) const { return {mean * factor, half_width * factor, n}; }
};

struct AgentSummary {
    std::string agent;
    MeanCi spl;
    MeanCi sct;
    MeanCi success;
    MeanCi spl_intersection;
    MeanCi sct_intersection;
};

/// Internal values stay in [0, 1]; `display()` gives the x100 view.
struct BatchReport {
    std::vector<std::string> agents;
    std::map<std::string, std::vector<MetricsReport>> per_agent;
    std::vector<std::string> intersection;  // episodes every agent solved, in input order
    std::vector<AgentSummary> summaries;

    [[nodiscard]] std::vector<AgentSummary> display() const {
        std::vector<AgentSummary> out;
        for (const auto& s : summaries) {
            out.push_back({s.agent, s.spl.scaled(100.0), s.sct.scaled(100.0), s.success.scaled(100.0),
                           s.spl_intersection.scaled(100.0), s.sct_intersection.scaled(100.0)});
        }
        return out;
    }
};

/// Per-agent means plus means over the episodes that all agents solved.
[[nodiscard]] inline BatchReport aggregate(const std::map<std::string, std::vector<MetricsReport>>& reports,
                                           const std::vector<std::string>& agents) {
    if (agents.empty()) {
        throw InvalidInput("aggregate: no agents");
    }
    BatchReport batch;
    batch.agents = agents;
    const auto& first = reports.find(agents.front());
    if (first == reports.end()) {
        throw InvalidInput("aggregate: no reports for agent " + agents.front());
    }
    std::vector<std::string> order;
    for (const auto& r : first->second) {
        order.push_back(r.episode_id);
    }
    const std::set<std::string> reference(order.begin(), order.end());
    if (reference.size() != order.size()) {
        throw InvalidInput("aggregate: duplicate episode ids for agent " + agents.front());
    }

    std::set<std::string> solved_by_all(reference);
    for (const auto& agent : agents) {
        const auto it = reports.find(agent);
        if (it == reports.end()) {
            throw InvalidInput("aggregate: no reports for agent " + agent);
        }
        std::set<std::string> ids;
        std::set<std::string> solved;
        for (const auto& r : it->second) {
            ids.insert(r.episode_id);
            if (r.success == 1) {
                solved.insert(r.episode_id);
            }
        }
        if (ids != reference || it->second.size() != order.size()) {
            throw InvalidInput("aggregate: agent " + agent + " was scored on a different episode set");
        }
        std::set<std::string> kept;
        std::set_intersection(solved_by_all.begin(), solved_by_all.end(), solved.begin(), solved.end(),
                              std::inserter(kept, kept.begin()));
        solved_by_all = std::move(kept);
        batch.per_agent[agent] = it->second;
    }
    for (const auto& id : order) {
        if (solved_by_all.count(id) != 0) {
            batch.intersection.push_back(id);
        }
    }

    for (const auto& agent : agents) {
        std::vector<double> spls;
        std::vector<double> scts;
        std::vector<double> succ;
        std::vector<double> spls_i;
        std::vector<double> scts_i;
        for (const auto& r : batch.per_agent[agent]) {
            spls.push_back(r.spl);
            scts.push_back(r.sct);
            succ.push_back(static_cast<double>(r.success));
            if (solved_by_all.count(r.episode_id) != 0) {
                spls_i.push_back(r.spl);
                scts_i.push_back(r.sct);
            }
        }
        batch.summaries.push_back({agent, MeanCi::of(spls), MeanCi::of(scts), MeanCi::of(succ), MeanCi::of(spls_i),
                                   MeanCi::of(scts_i)});
    }
    return batch;
}

}  // namespace sctnav
