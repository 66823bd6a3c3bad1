#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

void add_common(CLI::App* sub, sctnav::cli::CommonOptions& o) {
    sub->add_option("--episodes", o.episodes, "Episode list (JSON lines)")->required();
    sub->add_option("--map", o.map, "Map file overriding each episode's map");
    sub->add_option("--params", o.params, "key = value parameter file");
    sub->add_option("--seed", o.seed, "Planner seed");
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--cache", o.cache, "Plan cache directory (default <out>/cache)");
}

std::optional<bool> sliding_flag(const std::string& v) {
    if (v.empty()) return std::nullopt;
    return v == "on";
}

}  // namespace

int main(int argc, char** argv) {
    using namespace sctnav::cli;
    CLI::App app{"Fastest-path planning and SCT/SPL scoring for unicycle navigation"};
    app.require_subcommand(1);

    PlanOptions plan;
    auto* plan_cmd = app.add_subcommand("plan", "Plan fastest paths and cache T and L per episode");
    add_common(plan_cmd, plan.common);
    plan_cmd->add_option("--svg", plan.svg, "Directory for per-episode SVG renders");

    ScoreOptions score;
    auto* score_cmd = app.add_subcommand("score", "Score trajectories with SCT and SPL");
    add_common(score_cmd, score.common);
    score_cmd->add_option("--trajectories", score.trajectories, "Trajectory JSONL files")->required();
    score_cmd->add_flag("--no-plan", score.no_plan, "Fail instead of planning on a cache miss");

    RolloutOptions rollout;
    std::string rollout_sliding;
    auto* rollout_cmd = app.add_subcommand("rollout", "Run the plan-following agent in the simulator");
    add_common(rollout_cmd, rollout.common);
    rollout_cmd->add_option("--space", rollout.space, "Action space")
        ->check(CLI::IsMember({"pt4", "u6", "u15"}))
        ->capture_default_str();
    rollout_cmd->add_option("--scheme", rollout.scheme, "Reward scheme")
        ->check(CLI::IsMember({"shaped", "decay"}))
        ->capture_default_str();
    rollout_cmd->add_option("--sliding", rollout_sliding, "Collision sliding")->check(CLI::IsMember({"on", "off"}));

    BenchOptions bench;
    std::string bench_sliding;
    auto* bench_cmd = app.add_subcommand("bench", "Plan references, roll out every agent and score them");
    add_common(bench_cmd, bench.common);
    bench_cmd->add_option("--agents", bench.agents, "Action spaces to compare")
        ->check(CLI::IsMember({"pt4", "u6", "u15"}))
        ->delimiter(',');
    bench_cmd->add_option("--sliding", bench_sliding, "Collision sliding")->check(CLI::IsMember({"on", "off"}));

    PivotTableOptions pivot;
    auto* pivot_cmd = app.add_subcommand("pivot-table", "Precompute the fastest-pivot lookup table");
    pivot_cmd->add_option("--params", pivot.params, "key = value parameter file");
    pivot_cmd->add_option("--out", pivot.out, "Output file")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kBadInput;
    }

    if (*plan_cmd) return cmd_plan(plan, std::cerr);
    if (*score_cmd) return cmd_score(score, std::cerr);
    if (*rollout_cmd) {
        rollout.sliding = sliding_flag(rollout_sliding);
        return cmd_rollout(rollout, std::cerr);
    }
    if (*bench_cmd) {
        bench.sliding = sliding_flag(bench_sliding);
        return cmd_bench(bench, std::cerr);
    }
    return cmd_pivot_table(pivot, std::cerr);
}
