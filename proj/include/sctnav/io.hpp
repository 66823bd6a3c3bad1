// JSON / JSON-lines / CSV encodings of plans, episodes, trajectories,
// reward logs and reports.

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sctnav/errors.hpp"
#include "sctnav/kinematics.hpp"
#include "sctnav/metrics.hpp"
#include "sctnav/rollout.hpp"

namespace sctnav::io {

using nlohmann::ordered_json;

[[nodiscard]] inline ordered_json pose_to_json(const Pose& p) { return {{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }
[[nodiscard]] inline ordered_json point_to_json(const Point2& p) { return {{"x", p.x}, {"y", p.y}}; }

[[nodiscard]] inline ordered_json segment_to_json(const MotionSegment& seg) {
    ordered_json j;
    if (const auto* p = std::get_if<Pivot>(&seg.shape)) {
        j["kind"] = "pivot";
        j["delta_theta"] = p->delta_theta;
    } else if (const auto* a = std::get_if<Arc>(&seg.shape)) {
        j["kind"] = "arc";
        j["radius"] = a->radius;
        j["central_angle"] = a->central_angle;
    } else {
        j["kind"] = "straight";
        j["distance"] = std::get<Straight>(seg.shape).distance;
    }
    j["duration"] = seg.duration;
    j["length"] = seg.length;
    return j;
}

/// Plan body: start, segments, totals. Callers add goal, seed, params etc.
[[nodiscard]] inline ordered_json plan_to_json(const MotionPlan& plan) {
    ordered_json j;
    j["start"] = pose_to_json(plan.start());
    ordered_json segs = ordered_json::array();
    for (const auto& s : plan.segments()) {
        segs.push_back(segment_to_json(s));
    }
    j["segments"] = std::move(segs);
    j["total_time"] = plan.total_time();
    j["total_length"] = plan.total_length();
    return j;
}

namespace detail {

template <class J>
double number(const J& j, const char* key, const std::string& ctx) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw InvalidInput(ctx + ": missing numeric field '" + key + "'");
    }
    return j.at(key).template get<double>();
}

}  // namespace detail

/// Rebuilds a plan from its JSON form; segment durations are recomputed
/// from the limits, so they must match the limits the plan was made for.
[[nodiscard]] inline MotionPlan plan_from_json(const ordered_json& j, const DynamicsLimits& limits) {
    try {
        const auto& s = j.at("start");
        MotionPlan plan(Pose(detail::number(s, "x", "plan"), detail::number(s, "y", "plan"),
                             detail::number(s, "theta", "plan")));
        for (const auto& seg : j.at("segments")) {
            const std::string kind = seg.at("kind").get<std::string>();
            if (kind == "pivot") {
                plan.push_back(MotionSegment::make(Pivot{detail::number(seg, "delta_theta", "plan")}, limits));
            } else if (kind == "arc") {
                plan.push_back(MotionSegment::make(
                    Arc{detail::number(seg, "radius", "plan"), detail::number(seg, "central_angle", "plan")}, limits));
            } else if (kind == "straight") {
                plan.push_back(MotionSegment::make(Straight{detail::number(seg, "distance", "plan")}, limits));
            } else {
                throw InvalidInput("plan: unknown segment kind '" + kind + "'");
            }
        }
        return plan;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("plan: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Episodes

[[nodiscard]] inline Episode episode_from_json(const ordered_json& j) {
    try {
        Episode ep;
        ep.id = j.at("id").get<std::string>();
        ep.map = j.contains("map") ? j.at("map").get<std::string>() : std::string{};
        const auto& s = j.at("start");
        ep.start = Pose(detail::number(s, "x", ep.id), detail::number(s, "y", ep.id),
                        s.contains("theta") ? detail::number(s, "theta", ep.id) : 0.0);
        const auto& g = j.at("goal");
        ep.goal = {detail::number(g, "x", ep.id), detail::number(g, "y", ep.id)};
        if (j.contains("success_radius")) {
            ep.success_radius = detail::number(j, "success_radius", ep.id);
        }
        if (j.contains("max_steps")) {
            const auto& m = j.at("max_steps");
            if (!m.is_number_integer() || m.get<long long>() < 1) {
                throw InvalidInput("episode " + ep.id + ": max_steps must be a positive integer");
            }
            ep.max_steps = m.get<std::size_t>();
        }
        ep.validate();
        return ep;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("episode: ") + e.what());
    }
}

[[nodiscard]] inline ordered_json episode_to_json(const Episode& ep) {
    return {{"id", ep.id},
            {"map", ep.map},
            {"start", pose_to_json(ep.start)},
            {"goal", point_to_json(ep.goal)},
            {"success_radius", ep.success_radius},
            {"max_steps", ep.max_steps}};
}

/// Reads a JSON-lines file; blank lines are skipped.
[[nodiscard]] inline std::vector<ordered_json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open " + path.string());
    }
    std::vector<ordered_json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(ordered_json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

[[nodiscard]] inline std::vector<Episode> read_episodes(const std::filesystem::path& path) {
    std::vector<Episode> eps;
    for (const auto& j : read_jsonl(path)) {
        eps.push_back(episode_from_json(j));
    }
    return eps;
}

// ---------------------------------------------------------------------------
// Trajectories and reward logs

[[nodiscard]] inline ordered_json trajectory_to_json(const Trajectory& t) {
    ordered_json samples = ordered_json::array();
    for (const auto& s : t.samples) {
        samples.push_back({s.t, s.pose.x, s.pose.y, s.pose.theta});
    }
    ordered_json actions = ordered_json::array();
    for (const auto& a : t.actions) {
        actions.push_back({a.t, a.action.v, a.action.w});
    }
    return {{"episode_id", t.episode_id},
            {"agent", t.agent},
            {"terminated_by_agent", t.terminated_by_agent},
            {"samples", std::move(samples)},
            {"actions", std::move(actions)}};
}

[[nodiscard]] inline Trajectory trajectory_from_json(const ordered_json& j) {
    try {
        Trajectory t;
        t.episode_id = j.at("episode_id").get<std::string>();
        t.agent = j.contains("agent") ? j.at("agent").get<std::string>() : std::string("agent");
        t.terminated_by_agent = j.at("terminated_by_agent").get<bool>();
        for (const auto& s : j.at("samples")) {
            if (!s.is_array() || s.size() != 4) {
                throw InvalidInput("trajectory " + t.episode_id + ": samples must be [t, x, y, theta]");
            }
            t.samples.push_back({s[0].get<double>(), Pose(s[1].get<double>(), s[2].get<double>(), s[3].get<double>())});
        }
        if (j.contains("actions")) {
            for (const auto& a : j.at("actions")) {
                if (!a.is_array() || a.size() != 3) {
                    throw InvalidInput("trajectory " + t.episode_id + ": actions must be [t, v, w]");
                }
                t.actions.push_back({a[0].get<double>(), {a[1].get<double>(), a[2].get<double>()}});
            }
        }
        t.validate();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("trajectory: ") + e.what());
    }
}

[[nodiscard]] inline ordered_json reward_to_json(const std::string& episode_id, const std::string& agent,
                                                 const RewardRecord& r) {
    return {{"episode_id", episode_id},
            {"agent", agent},
            {"step", r.step},
            {"global_step", r.global_step},
            {"action", {r.action.v, r.action.w}},
            {"prev_geodesic", r.prev_geodesic},
            {"new_geodesic", r.new_geodesic},
            {"beta", r.beta},
            {"reward", r.reward},
            {"terminal", r.terminal}};
}

// ---------------------------------------------------------------------------
// Reports

[[nodiscard]] inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

/// Per-episode rows; `manifest`, when given, fills a trailing column.
[[nodiscard]] inline std::string reports_csv(const BatchReport& batch, const std::string& manifest = {}) {
    std::ostringstream os;
    os << "agent,episode_id,success,spl,sct,path_length,shortest_length,completion_time,fastest_time";
    os << (manifest.empty() ? "\n" : ",manifest\n");
    for (const auto& agent : batch.agents) {
        for (const auto& r : batch.per_agent.at(agent)) {
            os << agent << ',' << r.episode_id << ',' << r.success << ',' << format_double(r.spl) << ','
               << format_double(r.sct) << ',' << format_double(r.path_length) << ','
               << format_double(r.shortest_length) << ',' << format_double(r.completion_time) << ','
               << format_double(r.fastest_time);
            os << (manifest.empty() ? "" : "," + manifest) << '\n';
        }
    }
    return os.str();
}

[[nodiscard]] inline ordered_json mean_ci_to_json(const MeanCi& m) {
    return {{"mean", m.mean}, {"ci95", m.half_width}, {"n", m.n}};
}

/// Summary in display units (x100).
[[nodiscard]] inline ordered_json batch_summary_json(const BatchReport& batch) {
    ordered_json agents = ordered_json::array();
    for (const auto& s : batch.display()) {
        agents.push_back({{"agent", s.agent},
                          {"sct", mean_ci_to_json(s.sct)},
                          {"spl", mean_ci_to_json(s.spl)},
                          {"success", mean_ci_to_json(s.success)},
                          {"sct_intersection", mean_ci_to_json(s.sct_intersection)},
                          {"spl_intersection", mean_ci_to_json(s.spl_intersection)}});
    }
    return {{"scale", 100}, {"agents", std::move(agents)}, {"intersection", batch.intersection}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InvalidInput("cannot write " + path.string());
    }
    out << text;
}

}  // namespace sctnav::io
