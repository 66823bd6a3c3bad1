// Command implementations behind the sctnav CLI. Each command reads its
// inputs, writes its artifacts under an output directory and returns a
// process exit code.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sctnav/kinematics.hpp"
#include "sctnav/planner.hpp"
#include "sctnav/rollout.hpp"

namespace sctnav::cli {

enum ExitCode : int { kOk = 0, kBadInput = 2, kNoPath = 3, kMissingCache = 4 };

/// Everything the key=value params file can set.
struct Settings {
    DynamicsLimits limits;
    RrtParams rrt;
    SimConfig sim;
    RewardConfig reward;
    double follower_margin = kFollowerMargin;
    double global_step = 0.0;
    std::size_t threads = 0;  // 0: hardware concurrency
    std::string pivot_cache;  // empty: build in memory
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys are errors.
[[nodiscard]] Settings parse_settings(const std::string& text);
[[nodiscard]] Settings load_settings(const std::optional<std::filesystem::path>& path);

/// Canonical text of the settings that affect planning, used in cache keys.
[[nodiscard]] std::string planning_fingerprint(const Settings& s);

[[nodiscard]] std::string sha256_hex(const std::string& bytes);

struct CommonOptions {
    std::optional<std::filesystem::path> map;  // overrides each episode's map
    std::filesystem::path episodes;
    std::optional<std::filesystem::path> params;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out = "out";
    std::optional<std::filesystem::path> cache;  // plan cache directory
};

struct PlanOptions {
    CommonOptions common;
    std::optional<std::filesystem::path> svg;  // directory for per-episode SVGs
};

struct ScoreOptions {
    CommonOptions common;
    std::vector<std::filesystem::path> trajectories;
    bool no_plan = false;
};

struct RolloutOptions {
    CommonOptions common;
    std::string space = "u6";
    std::string scheme = "shaped";
    std::optional<bool> sliding;
};

struct BenchOptions {
    CommonOptions common;
    std::vector<std::string> agents{"pt4", "u6", "u15"};
    std::optional<bool> sliding;
};

struct PivotTableOptions {
    std::optional<std::filesystem::path> params;
    std::filesystem::path out = "pivot.pvt";
};

int cmd_plan(const PlanOptions& o, std::ostream& log);
int cmd_score(const ScoreOptions& o, std::ostream& log);
int cmd_rollout(const RolloutOptions& o, std::ostream& log);
int cmd_bench(const BenchOptions& o, std::ostream& log);
int cmd_pivot_table(const PivotTableOptions& o, std::ostream& log);

/// SVG of the grid, tree edges (yellow), shortest path (dashed) and best
/// plan (green) at 100 px/m.
[[nodiscard]] std::string render_svg(const OccupancyGrid& grid, const std::vector<MotionPlan>& tree_edges,
                                     const Polyline& shortest, const MotionPlan* best);

}  // namespace sctnav::cli
