// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails or overruns its time budget.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "oracles.hpp"
#include "scenes.hpp"
#include "sctnav/io.hpp"
#include "sctnav/sctnav.hpp"

namespace {

using namespace sctnav;
namespace fs = std::filesystem;

const DynamicsLimits kSim = DynamicsLimits::simulation();

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0.0 && secs > budget_s) {
        o.pass = false;
        o.detail += " [over time budget " + std::to_string(budget_s) + " s]";
    }
    if (!o.pass) {
        ++failures;
    }
    std::printf("%s  %-22s %7.2f s  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

RrtParams params_with(std::size_t iterations, std::uint64_t seed) {
    RrtParams p;
    p.iterations = iterations;
    p.seed = seed;
    return p;
}

// ---------------------------------------------------------------------------

Outcome metric_formulas() {
    struct Case {
        int s;
        double cost;
        double ref;
        double expected;
    };
    // hand-evaluated S * ref / max(cost, ref)
    const std::vector<Case> spl_cases{
        {1, 10.0, 8.0, 0.8},  {1, 8.0, 8.0, 1.0},   {1, 7.0, 8.0, 1.0},   {0, 3.0, 8.0, 0.0},
        {1, 4.0, 1.0, 0.25},  {1, 12.5, 10.0, 0.8}, {1, 3.0, 1.5, 0.5},   {0, 20.0, 5.0, 0.0},
        {1, 6.4, 1.6, 0.25},  {1, 0.0, 2.0, 1.0},
    };
    const std::vector<Case> sct_cases{
        {1, 50.0, 40.0, 0.8}, {1, 40.0, 40.0, 1.0}, {1, 35.0, 40.0, 1.0}, {0, 10.0, 40.0, 0.0},
        {1, 80.0, 20.0, 0.25}, {1, 16.0, 4.0, 0.25}, {1, 5.0, 4.0, 0.8},  {0, 35.0, 40.0, 0.0},
        {1, 33.0, 16.5, 0.5}, {1, 1.0, 100.0, 1.0},
    };
    double worst = 0.0;
    for (const auto& c : spl_cases) worst = std::max(worst, std::abs(spl(c.s, c.cost, c.ref) - c.expected));
    for (const auto& c : sct_cases) worst = std::max(worst, std::abs(sct(c.s, c.cost, c.ref) - c.expected));
    // clamps: an agent beating the reference scores exactly S
    const bool clamps = spl(1, 7.0, 8.0) == 1.0 && sct(1, 35.0, 40.0) == 1.0 && sct(0, 35.0, 40.0) == 0.0;
    return {worst <= 1e-12 && clamps,
            "20 hand cases, max |error| " + fixed(worst, 17) + (clamps ? ", clamps ok" : ", clamp violated")};
}

Outcome free_space_oracle() {
    double worst = 0.0;
    int checked = 0;
    for (const DynamicsLimits limits : {DynamicsLimits::simulation(), DynamicsLimits::real_robot()}) {
        const PivotTable& table = testing::table_for(limits);
        std::mt19937_64 rng(101);
        std::uniform_real_distribution<double> bearing(-kPi, kPi);
        std::uniform_real_distribution<double> dist(0.1, 6.0);
        for (int k = 0; k < 100; ++k) {
            const double b = bearing(rng);
            const double d = dist(rng);
            const Pose src(0, 0, 0);
            const Point2 tgt{d * std::cos(b), d * std::sin(b)};
            const double got = fastest_free_path(src, tgt, limits, table).total_time();
            const double ref = oracle::pivot_sweep(b, d, limits.v_max, limits.w_max).time;
            worst = std::max(worst, std::abs(got - ref) / ref);
            ++checked;
        }
    }
    return {worst <= 0.01, std::to_string(checked) + " pairs at 10 and 30 deg/s, max relative error " +
                               fixed(100.0 * worst, 4) + " % (limit 1 %)"};
}

Outcome planner_convergence() {
    const auto grid = testing::empty_grid(10, 10, 0.1, -5, -5);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const MotionPlan plan =
            plan_fastest({0, 0, 0}, {1, 0}, grid, kSim, testing::table_for(kSim), params_with(2000, seed));
        worst = std::max(worst, std::abs(plan.total_time() - 4.0) / 4.0);
    }
    return {worst <= 0.05, "10 seeds, N = 2000, max |T - 4 s| / 4 s = " + fixed(100.0 * worst, 4) + " %"};
}

Outcome shortest_not_fastest() {
    const auto grid = testing::wall_with_gap();
    const Pose start(2, 2, kPi / 2);  // goal is due east
    const Point2 goal{8, 2};
    const Polyline shortest = astar_shortest(grid, start.position(), goal).polyline;
    const double raw = point_turn_polyline(start, shortest, kSim).total_time();
    const double simplified =
        point_turn_polyline(start, simplify_polyline(grid, shortest, kDefaultSampleSpacing), kSim).total_time();
    const double point_turn = std::min(raw, simplified);
    double worst = 0.0;
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const MotionPlan plan = plan_fastest(start, goal, grid, kSim, testing::table_for(kSim), params_with(3000, seed));
        worst = std::max(worst, plan.total_time());
        ok = ok && plan.total_time() < point_turn && !plan_collides(plan, grid, 0.001);
    }
    return {ok, "slowest of 5 seeds " + fixed(worst, 2) + " s < point-turn along A* " + fixed(point_turn, 2) +
                    " s (raw polyline " + fixed(raw, 2) + " s)"};
}

Outcome spline_emergence() {
    const auto grid = testing::empty_grid(10, 10, 0.1, -5, -5);
    const Pose start(-2.5, 0, kPi / 2);
    const Point2 goal{2.5, 0};
    const double single = fastest_free_path(start, goal, kSim, testing::table_for(kSim)).total_time();
    bool ok = true;
    double worst = 0.0;
    std::size_t fewest_nodes = 1000;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        RrtUnicyclePlanner planner(grid, kSim, testing::table_for(kSim), params_with(2000, seed), start, goal);
        planner.run();
        const auto plan = planner.extract_best();
        if (!plan) return {false, "seed " + std::to_string(seed) + ": no plan"};
        // goal reached through at least one intermediate tree node
        std::size_t nodes = 0;
        for (const auto& seg : plan->segments()) nodes += seg.is_pivot() ? 0 : 1;
        fewest_nodes = std::min(fewest_nodes, nodes);
        worst = std::max(worst, plan->total_time());
        ok = ok && plan->total_time() <= single && nodes >= 2;
    }
    return {ok, "slowest of 5 seeds " + fixed(worst, 3) + " s <= single arc " + fixed(single, 3) +
                    " s, fewest driven segments " + std::to_string(fewest_nodes)};
}

// ---------------------------------------------------------------------------
// Synthetic suite shared by the SCT/SPL direction and reward criteria

struct Scene {
    std::string name;
    OccupancyGrid grid;
    Pose start;
    Point2 goal;
};

std::vector<Scene> synthetic_suite() {
    using testing::make_grid;
    const double r = kDefaultInflationRadius;
    std::vector<Scene> s;
    s.push_back({"wall-gap", testing::wall_with_gap(), {2, 2, kPi / 2}, {8, 2}});
    s.push_back({"wall-gap-high", testing::wall_with_gap(), {1.5, 4.8, 0}, {8.5, 1.0}});
    s.push_back({"open-diagonal", make_grid(80, 60, 0.1, [](int, int) { return false; }, r), {1, 1, 0}, {7, 5}});
    s.push_back({"open-behind", make_grid(80, 60, 0.1, [](int, int) { return false; }, r), {2, 3, kPi}, {6.5, 3.5}});
    s.push_back({"l-corridor",
                 make_grid(60, 60, 0.1, [](int i, int j) { return !(j < 12 || i >= 48); }, r),
                 {0.6, 0.6, kPi / 2},
                 {5.4, 5.4}});
    s.push_back({"slalom",
                 make_grid(100, 50, 0.1,
                           [](int i, int j) {
                               return (i >= 30 && i < 34 && j < 32) || (i >= 66 && i < 70 && j >= 18);
                           },
                           r),
                 {1, 1, 0},
                 {9, 4}});
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> heading(-kPi, kPi);
    while (s.size() < 10) {
        OccupancyGrid grid = testing::random_blocks(rng, 80, 60, 0.1, 6);
        const Point2 a = testing::random_free_point(grid, rng);
        const Point2 b = testing::random_free_point(grid, rng);
        const GeodesicField field(grid, b);
        const auto geo = field.distance(a);
        if (!geo || *geo < 3.0) continue;
        s.push_back({"blocks-" + std::to_string(s.size() - 5), std::move(grid), {a.x, a.y, heading(rng)}, b});
    }
    return s;
}

struct SuiteRun {
    std::vector<std::string> agents;
    std::map<std::string, std::vector<MetricsReport>> reports;
    std::vector<RolloutResult> shaped;   // every (scene, agent) rollout
    std::vector<RolloutResult> decayed;  // same plans, beta = 0
};

const SuiteRun& suite_run() {
    static const SuiteRun run = [] {
        SuiteRun out;
        const std::vector<ActionSpace> spaces{ActionSpace::point_turn4(), ActionSpace::unicycle6(),
                                              ActionSpace::unicycle15()};
        for (const auto& sp : spaces) out.agents.push_back(sp.name);
        const PivotTable& table = testing::table_for(kSim);
        const auto scenes = synthetic_suite();
        RewardConfig decay;
        decay.scheme = RewardScheme::Decaying;
        decay.decay_horizon = 1000.0;
        for (std::size_t k = 0; k < scenes.size(); ++k) {
            const Scene& sc = scenes[k];
            Episode ep;
            ep.id = sc.name;
            ep.start = sc.start;
            ep.goal = sc.goal;
            const RrtParams params = params_with(3000, k);
            const double fastest = plan_fastest(sc.start, sc.goal, sc.grid, kSim, table, params).total_time();
            const double shortest = astar_shortest(sc.grid, sc.start.position(), sc.goal).length();
            for (const auto& space : spaces) {
                const MotionPlan plan = plan_reference(space, sc.start, sc.goal, sc.grid, kSim, table, params);
                RolloutResult r = run_rollout(ep, sc.grid, plan, space, SimConfig{kSim}, RewardConfig{});
                r.trajectory.agent = space.name;
                out.reports[space.name].push_back(score_episode(ep, r.trajectory, shortest, fastest));
                out.decayed.push_back(run_rollout(ep, sc.grid, plan, space, SimConfig{kSim}, decay, 1000.0));
                out.shaped.push_back(std::move(r));
            }
        }
        return out;
    }();
    return run;
}

Outcome sct_spl_tradeoff() {
    const SuiteRun& run = suite_run();
    const BatchReport batch = aggregate(run.reports, run.agents);
    std::map<std::string, AgentSummary> by;
    for (const auto& s : batch.summaries) by[s.agent] = s;
    const auto& pt4 = by.at("pt4");
    const auto& u6 = by.at("u6");
    const bool ok = u6.sct.mean > pt4.sct.mean && pt4.spl.mean >= u6.spl.mean - 0.02;
    std::string detail = "SCT u6 " + fixed(100 * u6.sct.mean, 2) + " vs pt4 " + fixed(100 * pt4.sct.mean, 2) +
                         "; SPL pt4 " + fixed(100 * pt4.spl.mean, 2) + " vs u6 " + fixed(100 * u6.spl.mean, 2) +
                         "; success pt4/u6/u15 " + fixed(100 * pt4.success.mean, 0) + "/" +
                         fixed(100 * u6.success.mean, 0) + "/" + fixed(100 * by.at("u15").success.mean, 0);
    return {ok, detail};
}

Outcome reward_telescoping() {
    const SuiteRun& run = suite_run();
    double worst = 0.0;
    for (const auto& r : run.shaped) {
        double sum = 0.0;
        for (const auto& rec : r.rewards) sum += rec.reward;
        const double steps = static_cast<double>(r.rewards.size());
        // the terminal success bonus sits on top of the telescoping sum
        const double expected = r.start_geodesic - r.end_geodesic - 0.01 * steps + 2.5 * r.success;
        worst = std::max(worst, std::abs(sum - expected));
    }
    bool slack_only = true;
    std::size_t decayed_steps = 0;
    for (const auto& r : run.decayed) {
        for (const auto& rec : r.rewards) {
            const double expected = rec.terminal ? -0.01 + 2.5 * r.success : -0.01;
            slack_only = slack_only && rec.beta == 0.0 && rec.reward == expected;
            ++decayed_steps;
        }
    }
    return {worst <= 1e-9 && slack_only,
            std::to_string(run.shaped.size()) + " rollouts, max telescoping error " + fixed(worst, 12) + "; " +
                std::to_string(decayed_steps) + " decayed steps " + (slack_only ? "all -0.01" : "NOT all -0.01")};
}

// ---------------------------------------------------------------------------

Outcome rrt_invariants() {
    std::mt19937_64 rng(77);
    int maps = 0;
    std::size_t plans = 0;
    double worst_inconsistency = 0.0;
    while (maps < 20) {
        const auto grid = testing::random_blocks(rng, 48, 48, 0.1, 7);
        const Point2 a = testing::random_free_point(grid, rng);
        const Point2 b = testing::random_free_point(grid, rng);
        if (!GeodesicField(grid, b).distance(a) || distance(a, b) < 1.0) continue;
        std::uniform_real_distribution<double> heading(-kPi, kPi);
        RrtUnicyclePlanner planner(grid, kSim, testing::table_for(kSim), params_with(600, maps),
                                   {a.x, a.y, heading(rng)}, b);
        std::optional<double> last;
        for (std::size_t k = 0; k < 600; ++k) {
            planner.iterate();
            worst_inconsistency = std::max(worst_inconsistency, planner.tree().cost_inconsistency());
            const auto now = planner.best_goal_time();
            if (last && (!now || *now > *last)) {
                return {false, "map " + std::to_string(maps) + ": best goal time increased at iteration " +
                                   std::to_string(k)};
            }
            last = now;
        }
        if (worst_inconsistency > 1e-9) {
            return {false, "map " + std::to_string(maps) + ": cost inconsistency " + fixed(worst_inconsistency, 12)};
        }
        if (const auto plan = planner.extract_best()) {
            if (plan_collides(*plan, grid, 0.001)) {
                return {false, "map " + std::to_string(maps) + ": returned plan collides at 1 mm"};
            }
            ++plans;
        }
        ++maps;
    }
    return {true, "20 maps x 600 iterations, max cost inconsistency " + fixed(worst_inconsistency, 12) + ", " +
                      std::to_string(plans) + " plans collision-free at 1 mm"};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Every file under `a` except manifest.json (which records its own
/// output directory) must exist under `b` with the same bytes.
bool same_tree(const fs::path& a, const fs::path& b, std::size_t& files) {
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file() || entry.path().filename() == "manifest.json") continue;
        const fs::path rel = fs::relative(entry.path(), a);
        if (!fs::exists(b / rel) || slurp(entry.path()) != slurp(b / rel)) return false;
        ++files;
    }
    return true;
}

Outcome cli_determinism() {
    const fs::path dir = fs::temp_directory_path() / "sctnav_acceptance_determinism";
    fs::remove_all(dir);
    std::ostringstream map;
    map << "resolution: 0.1\norigin: 0 0\n\n";
    for (int r = 0; r < 40; ++r) {
        const int j = 39 - r;
        for (int i = 0; i < 60; ++i) {
            const bool border = i == 0 || j == 0 || i == 59 || j == 39;
            const bool wall = i >= 28 && i < 32 && j < 26;
            map << (border || wall ? '#' : '.');
        }
        map << '\n';
    }
    io::write_text(dir / "room.map", map.str());
    io::write_text(dir / "episodes.jsonl",
                   "{\"id\": \"over-wall\", \"map\": \"room.map\", \"start\": {\"x\": 1.0, \"y\": 1.0, \"theta\": 1.57}, "
                   "\"goal\": {\"x\": 5.0, \"y\": 1.0}}\n"
                   "{\"id\": \"open\", \"map\": \"room.map\", \"start\": {\"x\": 4.0, \"y\": 3.5, \"theta\": 3.1}, "
                   "\"goal\": {\"x\": 5.2, \"y\": 1.5}}\n");
    io::write_text(dir / "params.txt", "iterations = 1500\nthreads = 2\n");
    std::ostringstream log;
    std::size_t files = 0;
    bool ok = true;
    for (int round = 0; round < 2; ++round) {
        cli::CommonOptions c;
        c.episodes = dir / "episodes.jsonl";
        c.params = dir / "params.txt";
        c.seed = 11;
        c.out = dir / ("plan" + std::to_string(round));
        ok = ok && cli::cmd_plan({c, c.out / "svg"}, log) == cli::kOk;
        c.out = dir / ("bench" + std::to_string(round));
        ok = ok && cli::cmd_bench({c, {"pt4", "u6", "u15"}, std::nullopt}, log) == cli::kOk;
    }
    if (!ok) return {false, "command failed: " + log.str()};
    ok = same_tree(dir / "plan0", dir / "plan1", files) && same_tree(dir / "bench0", dir / "bench1", files);
    auto manifest_hash = [&](const std::string& run) {
        return nlohmann::json::parse(slurp(dir / run / "manifest.json")).at("manifest_sha256").get<std::string>();
    };
    const bool manifests =
        manifest_hash("plan0") == manifest_hash("plan1") && manifest_hash("bench0") == manifest_hash("bench1");
    return {ok && manifests, std::to_string(files) + " artifacts compared" +
                                 (ok ? " byte-identical" : ", MISMATCH") +
                                 (manifests ? ", manifest hashes equal" : ", manifest hashes differ")};
}

Outcome astar_oracle() {
    std::mt19937_64 rng(64);
    int grids = 0;
    int disconnected = 0;
    while (grids < 50) {
        std::bernoulli_distribution wall(0.25);
        std::vector<char> blocked(64 * 64);
        for (auto& b : blocked) b = wall(rng);
        const auto grid =
            testing::make_grid(64, 64, 0.1, [&](int i, int j) { return blocked[static_cast<std::size_t>(j) * 64 + i] != 0; });
        const Point2 s = testing::random_free_point(grid, rng);
        const Point2 g = testing::random_free_point(grid, rng);
        const auto [orth, diag] = oracle::dijkstra_steps(grid, grid.cell_of(s), grid.cell_of(g));
        ++grids;
        if (orth < 0) {
            bool threw = false;
            try {
                (void)astar_shortest(grid, s, g);
            } catch (const NoPath&) {
                threw = true;
            }
            if (!threw) return {false, "grid " + std::to_string(grids) + ": A* found a path Dijkstra did not"};
            ++disconnected;
            continue;
        }
        const GridPath path = astar_shortest(grid, s, g);
        if (static_cast<long>(path.orthogonal_steps) != orth || static_cast<long>(path.diagonal_steps) != diag) {
            return {false, "grid " + std::to_string(grids) + ": A* " + std::to_string(path.orthogonal_steps) + "+" +
                               std::to_string(path.diagonal_steps) + "*sqrt2 vs Dijkstra " + std::to_string(orth) +
                               "+" + std::to_string(diag) + "*sqrt2"};
        }
    }
    return {true, "50 random 64x64 grids, step counts identical (" + std::to_string(disconnected) +
                      " disconnected pairs agreed on no path)"};
}

}  // namespace

int main() {
    criterion("metric-formulas", 1.0, metric_formulas);
    criterion("free-space-oracle", 30.0, free_space_oracle);
    criterion("planner-convergence", 60.0, planner_convergence);
    criterion("shortest-not-fastest", 120.0, shortest_not_fastest);
    criterion("spline-emergence", 60.0, spline_emergence);
    criterion("sct-spl-tradeoff", 300.0, sct_spl_tradeoff);
    criterion("reward-telescoping", 60.0, reward_telescoping);
    criterion("rrt-invariants", 300.0, rrt_invariants);
    criterion("cli-determinism", 0.0, cli_determinism);
    criterion("astar-oracle", 0.0, astar_oracle);
    std::printf("%s: %d of 10 criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
    return failures == 0 ? 0 : 1;
}
