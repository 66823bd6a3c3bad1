#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "sctnav/io.hpp"
#include "sctnav/sctnav.hpp"

namespace sctnav::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "sctnav 1.0.0";

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || !std::isfinite(x)) {
        throw InvalidInput("params: '" + key + "' expects a number, got '" + v + "'");
    }
    return x;
}

std::uint64_t parse_count(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
        throw InvalidInput("params: '" + key + "' expects a non-negative integer, got '" + v + "'");
    }
    return std::stoull(v);
}

bool parse_switch(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true") return true;
    if (v == "off" || v == "false") return false;
    throw InvalidInput("params: '" + key + "' expects on/off, got '" + v + "'");
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string safe_name(const std::string& id) {
    std::string out = id;
    for (char& c : out) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') {
            c = '_';
        }
    }
    return out.empty() ? "_" : out;
}

std::string fmt(double v) { return io::format_double(v); }

struct MapEntry {
    fs::path path;
    std::string digest;
    OccupancyGrid grid;
};

/// Inputs shared by every command: settings, episodes, maps, pivot table.
class Workspace {
  public:
    Workspace(const CommonOptions& o, const std::string& command) : options_(o) {
        settings_ = load_settings(o.params);
        if (o.seed) {
            settings_.rrt.seed = *o.seed;
        }
        episodes_ = io::read_episodes(o.episodes);
        if (episodes_.empty()) {
            throw InvalidInput("no episodes in " + o.episodes.string());
        }
        std::set<std::string> ids;
        for (const auto& ep : episodes_) {
            if (!ids.insert(ep.id).second) {
                throw InvalidInput("duplicate episode id '" + ep.id + "'");
            }
            (void)map_for(ep);
        }
        manifest_ = make_manifest(command);
    }

    Settings& settings() { return settings_; }
    const std::vector<Episode>& episodes() const { return episodes_; }
    const std::string& manifest_hash() const { return manifest_hash_; }

    const Episode* find(const std::string& id) const {
        for (const auto& ep : episodes_) {
            if (ep.id == id) return &ep;
        }
        return nullptr;
    }

    const MapEntry& map_for(const Episode& ep) {
        fs::path path;
        if (options_.map) {
            path = *options_.map;
        } else {
            if (ep.map.empty()) {
                throw InvalidInput("episode " + ep.id + ": no map given (use --map)");
            }
            path = fs::path(ep.map).is_absolute() ? fs::path(ep.map) : options_.episodes.parent_path() / ep.map;
        }
        const std::string key = path.lexically_normal().string();
        auto it = maps_.find(key);
        if (it == maps_.end()) {
            std::string bytes = read_bytes(path);
            if (path.extension() == ".pgm") {
                bytes += read_bytes(fs::path(path).replace_extension(".hdr"));
            }
            it = maps_.emplace(key, MapEntry{path, sha256_hex(bytes), load_map(path)}).first;
        }
        return it->second;
    }

    const PivotTable& table() {
        if (!table_) {
            table_ = std::make_unique<PivotTable>(
                settings_.pivot_cache.empty() ? PivotTable::build(settings_.limits)
                                              : PivotTable::load_or_build(settings_.pivot_cache, settings_.limits));
        }
        return *table_;
    }

    fs::path cache_dir() const { return options_.cache ? *options_.cache : options_.out / "cache"; }

    std::string plan_key(const Episode& ep) {
        return sha256_hex(map_for(ep).digest + "\n" + io::episode_to_json(ep).dump() + "\n" +
                          planning_fingerprint(settings_));
    }

    void write_manifest() const { io::write_text(options_.out / "manifest.json", manifest_.dump(2) + "\n"); }

  private:
    ordered_json make_manifest(const std::string& command) {
        ordered_json maps = ordered_json::array();
        std::set<std::string> seen;
        for (const auto& ep : episodes_) {
            const MapEntry& m = map_for(ep);
            if (seen.insert(m.path.string()).second) {
                maps.push_back({{"path", m.path.string()}, {"sha256", m.digest}});
            }
        }
        ordered_json content{{"command", command},
                             {"tool", kToolVersion},
                             {"episodes", {{"path", options_.episodes.string()},
                                           {"sha256", sha256_hex(read_bytes(options_.episodes))}}},
                             {"params", options_.params ? ordered_json(options_.params->string()) : ordered_json()},
                             {"settings_sha256", sha256_hex(planning_fingerprint(settings_))},
                             {"maps", std::move(maps)},
                             {"seed", settings_.rrt.seed}};
        manifest_hash_ = sha256_hex(content.dump());
        ordered_json full = content;
        full["output_dir"] = options_.out.string();
        full["manifest_sha256"] = manifest_hash_;
        return full;
    }

    CommonOptions options_;
    Settings settings_;
    std::vector<Episode> episodes_;
    std::map<std::string, MapEntry> maps_;
    std::unique_ptr<PivotTable> table_;
    ordered_json manifest_;
    std::string manifest_hash_;
};

/// Cached reference values for one episode.
struct Reference {
    double fastest_time = 0.0;
    double shortest_length = 0.0;
    MotionPlan plan;
};

ordered_json plan_record(const Episode& ep, const Reference& ref, const std::string& key, std::uint64_t seed,
                         const std::string& manifest) {
    ordered_json j;
    j["episode_id"] = ep.id;
    j["key"] = key;
    j["seed"] = seed;
    j["goal"] = io::point_to_json(ep.goal);
    j["fastest_time"] = ref.fastest_time;
    j["shortest_length"] = ref.shortest_length;
    j["plan"] = io::plan_to_json(ref.plan);
    if (!manifest.empty()) {
        j["manifest"] = manifest;
    }
    return j;
}

std::optional<Reference> load_cached(const fs::path& file, const DynamicsLimits& limits) {
    if (!fs::exists(file)) {
        return std::nullopt;
    }
    try {
        const auto j = ordered_json::parse(read_bytes(file));
        return Reference{j.at("fastest_time").get<double>(), j.at("shortest_length").get<double>(),
                         io::plan_from_json(j.at("plan"), limits)};
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("plan cache " + file.string() + ": " + e.what());
    }
}

std::mutex cache_mutex;

/// T and L for an episode: from the plan cache if present, else planned and
/// stored. With `allow_plan` false a cache miss throws MissingCache.
Reference reference_for(Workspace& ws, const Episode& ep, bool allow_plan, std::unique_ptr<RrtUnicyclePlanner>* keep) {
    const std::string key = ws.plan_key(ep);
    const fs::path file = ws.cache_dir() / (key + ".json");
    {
        std::lock_guard lock(cache_mutex);
        if (auto cached = load_cached(file, ws.settings().limits)) {
            return *cached;
        }
    }
    if (!allow_plan) {
        throw MissingCache("no cached plan for episode " + ep.id + " (" + file.string() + ")");
    }
    const MapEntry& m = ws.map_for(ep);
    auto planner = std::make_unique<RrtUnicyclePlanner>(m.grid, ws.settings().limits, ws.table(), ws.settings().rrt,
                                                        ep.start, ep.goal);
    planner->run();
    auto best = planner->extract_best();
    if (!best) {
        throw NoPath("episode " + ep.id + ": no path to goal after " + std::to_string(ws.settings().rrt.iterations) +
                     " iterations");
    }
    Reference ref{best->total_time(), astar_shortest(m.grid, ep.start.position(), ep.goal).length(), *best};
    {
        std::lock_guard lock(cache_mutex);
        io::write_text(file, plan_record(ep, ref, key, ws.settings().rrt.seed, {}).dump(2) + "\n");
    }
    if (keep) {
        *keep = std::move(planner);
    }
    return ref;
}

template <class F>
int guarded(std::ostream& log, F&& body) {
    try {
        return body();
    } catch (const MissingCache& e) {
        log << "error: " << e.what() << "\n";
        return kMissingCache;
    } catch (const NoPath& e) {
        log << "error: " << e.what() << "\n";
        return kNoPath;
    } catch (const std::invalid_argument& e) {
        log << "error: " << e.what() << "\n";
        return kBadInput;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return 1;
    }
}

RewardScheme scheme_from_name(const std::string& name) {
    if (name == "shaped") return RewardScheme::Shaped;
    if (name == "decay") return RewardScheme::Decaying;
    throw InvalidInput("unknown reward scheme '" + name + "' (expected shaped or decay)");
}

/// Runs `task(i)` for i in [0, n) on up to `threads` workers. Exceptions are
/// rethrown in index order after all workers finish.
template <class Task>
void parallel_for(std::size_t n, std::size_t threads, Task task) {
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = std::min(threads, n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& th : pool) {
        th.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

// ---------------------------------------------------------------------------

Settings parse_settings(const std::string& text) {
    Settings s;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidInput("params line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        if (key == "v_max") s.limits.v_max = parse_double(key, value);
        else if (key == "w_max_deg") s.limits.w_max = deg_to_rad(parse_double(key, value));
        else if (key == "iterations") s.rrt.iterations = parse_count(key, value);
        else if (key == "exploration_prob") s.rrt.exploration_prob = parse_double(key, value);
        else if (key == "step_radius") s.rrt.step_radius = parse_double(key, value);
        else if (key == "neighbor_radius") s.rrt.neighbor_radius = parse_double(key, value);
        else if (key == "goal_radius") s.rrt.goal_radius = parse_double(key, value);
        else if (key == "bias_sigma") s.rrt.bias_sigma = parse_double(key, value);
        else if (key == "seed") s.rrt.seed = parse_count(key, value);
        else if (key == "sample_spacing") s.rrt.sample_spacing = parse_double(key, value);
        else if (key == "waypoint_spacing") s.rrt.waypoint_spacing = parse_double(key, value);
        else if (key == "resample_budget") s.rrt.resample_budget = parse_count(key, value);
        else if (key == "step_duration") s.sim.step_duration = parse_double(key, value);
        else if (key == "substeps") s.sim.substeps = parse_count(key, value);
        else if (key == "sliding") s.sim.sliding = parse_switch(key, value);
        else if (key == "scheme") s.reward.scheme = scheme_from_name(value);
        else if (key == "decay_horizon") s.reward.decay_horizon = parse_double(key, value);
        else if (key == "global_step") s.global_step = parse_double(key, value);
        else if (key == "follower_margin") s.follower_margin = parse_double(key, value);
        else if (key == "threads") s.threads = parse_count(key, value);
        else if (key == "pivot_cache") s.pivot_cache = value;
        else throw InvalidInput("params line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    s.limits.validate();
    s.rrt.validate();
    s.sim.validate();
    s.reward.validate();
    if (!(s.follower_margin >= 0.0)) {
        throw InvalidInput("params: follower_margin must be >= 0");
    }
    return s;
}

Settings load_settings(const std::optional<fs::path>& path) {
    Settings s = path ? parse_settings(read_bytes(*path)) : parse_settings("");
    return s;
}

std::string planning_fingerprint(const Settings& s) {
    std::ostringstream os;
    os << "v_max=" << fmt(s.limits.v_max) << "\nw_max=" << fmt(s.limits.w_max) << "\niterations=" << s.rrt.iterations
       << "\nexploration_prob=" << fmt(s.rrt.exploration_prob) << "\nstep_radius=" << fmt(s.rrt.step_radius)
       << "\nneighbor_radius=" << fmt(s.rrt.neighbor_radius) << "\ngoal_radius=" << fmt(s.rrt.goal_radius)
       << "\nbias_sigma=" << fmt(s.rrt.bias_sigma) << "\nseed=" << s.rrt.seed
       << "\nsample_spacing=" << fmt(s.rrt.sample_spacing) << "\nwaypoint_spacing=" << fmt(s.rrt.waypoint_spacing)
       << "\nresample_budget=" << s.rrt.resample_budget << "\n";
    return os.str();
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) {
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return os.str();
}

// ---------------------------------------------------------------------------

int cmd_plan(const PlanOptions& o, std::ostream& log) {
    return guarded(log, [&]() {
        Workspace ws(o.common, "plan");
        ws.write_manifest();
        int status = kOk;
        for (const auto& ep : ws.episodes()) {
            const MapEntry& m = ws.map_for(ep);
            std::unique_ptr<RrtUnicyclePlanner> planner;
            Reference ref;
            try {
                ref = reference_for(ws, ep, true, &planner);
            } catch (const NoPath& e) {
                log << "episode " << ep.id << ": no path\n";
                status = kNoPath;
                continue;
            }
            const std::string key = ws.plan_key(ep);
            io::write_text(o.common.out / "plans" / (safe_name(ep.id) + ".json"),
                           plan_record(ep, ref, key, ws.settings().rrt.seed, ws.manifest_hash()).dump(2) + "\n");
            if (o.svg) {
                std::vector<MotionPlan> edges;
                if (planner) {
                    for (const auto& n : planner->tree().nodes()) {
                        if (n.parent) edges.push_back(n.edge);
                    }
                }
                const Polyline shortest = astar_shortest(m.grid, ep.start.position(), ep.goal).polyline;
                std::string svg = render_svg(m.grid, edges, shortest, &ref.plan);
                svg.insert(svg.find('\n') + 1, "<!-- manifest " + ws.manifest_hash() + " -->\n");
                io::write_text(*o.svg / (safe_name(ep.id) + ".svg"), svg);
            }
            log << "episode " << ep.id << ": T = " << fmt(ref.fastest_time) << " s, L = " << fmt(ref.shortest_length)
                << " m, " << ref.plan.segments().size() << " segments\n";
        }
        return status;
    });
}

int cmd_score(const ScoreOptions& o, std::ostream& log) {
    return guarded(log, [&]() {
        Workspace ws(o.common, "score");
        if (o.trajectories.empty()) {
            throw InvalidInput("score: no trajectory files given");
        }
        std::vector<std::string> agents;
        std::map<std::string, std::vector<MetricsReport>> reports;
        std::map<std::string, Reference> refs;
        for (const auto& path : o.trajectories) {
            for (const auto& j : io::read_jsonl(path)) {
                const Trajectory t = io::trajectory_from_json(j);
                const Episode* ep = ws.find(t.episode_id);
                if (!ep) {
                    throw InvalidInput("trajectory for unknown episode '" + t.episode_id + "'");
                }
                auto it = refs.find(ep->id);
                if (it == refs.end()) {
                    it = refs.emplace(ep->id, reference_for(ws, *ep, !o.no_plan, nullptr)).first;
                }
                if (!reports.count(t.agent)) {
                    agents.push_back(t.agent);
                }
                reports[t.agent].push_back(
                    score_episode(*ep, t, it->second.shortest_length, it->second.fastest_time));
                if (reports[t.agent].back().beat_reference) {
                    log << "warning: " << t.agent << " beat the reference time on " << ep->id
                        << " (T may be under-converged)\n";
                }
            }
        }
        const BatchReport batch = aggregate(reports, agents);
        ws.write_manifest();
        io::write_text(o.common.out / "reports.csv", io::reports_csv(batch, ws.manifest_hash()));
        ordered_json summary = io::batch_summary_json(batch);
        summary["manifest"] = ws.manifest_hash();
        io::write_text(o.common.out / "summary.json", summary.dump(2) + "\n");
        for (const auto& s : batch.display()) {
            log << s.agent << ": SCT " << std::fixed << std::setprecision(2) << s.sct.mean << " SPL " << s.spl.mean
                << " success " << s.success.mean << "\n";
        }
        return static_cast<int>(kOk);
    });
}

namespace {

struct AgentRun {
    RolloutResult result;
    MetricsReport report;
};

AgentRun run_agent(Workspace& ws, const Episode& ep, const ActionSpace& space, const SimConfig& sim,
                   const RewardConfig& reward, const Reference* ref) {
    const MapEntry& m = ws.map_for(ep);
    const Settings& s = ws.settings();
    const MotionPlan plan =
        plan_reference(space, ep.start, ep.goal, m.grid, s.limits, ws.table(), s.rrt, s.follower_margin);
    AgentRun run;
    run.result = run_rollout(ep, m.grid, plan, space, sim, reward, s.global_step);
    run.result.trajectory.agent = space.name;
    if (ref) {
        run.report = score_episode(ep, run.result.trajectory, ref->shortest_length, ref->fastest_time);
    }
    return run;
}

void append_rollout_lines(std::string& traj_out, std::string& reward_out, const AgentRun& run,
                          const std::string& manifest) {
    ordered_json t = io::trajectory_to_json(run.result.trajectory);
    t["success"] = run.result.success;
    t["aborted"] = run.result.aborted;
    t["manifest"] = manifest;
    traj_out += t.dump() + "\n";
    for (const auto& r : run.result.rewards) {
        ordered_json j = io::reward_to_json(run.result.trajectory.episode_id, run.result.trajectory.agent, r);
        j["manifest"] = manifest;
        reward_out += j.dump() + "\n";
    }
}

}  // namespace

int cmd_rollout(const RolloutOptions& o, std::ostream& log) {
    return guarded(log, [&]() {
        Workspace ws(o.common, "rollout");
        const ActionSpace space = ActionSpace::from_name(o.space);
        SimConfig sim = ws.settings().sim;
        sim.limits = ws.settings().limits;
        if (o.sliding) sim.sliding = *o.sliding;
        RewardConfig reward = ws.settings().reward;
        reward.scheme = scheme_from_name(o.scheme);
        ws.write_manifest();
        std::string traj_out;
        std::string reward_out;
        for (const auto& ep : ws.episodes()) {
            const AgentRun run = run_agent(ws, ep, space, sim, reward, nullptr);
            append_rollout_lines(traj_out, reward_out, run, ws.manifest_hash());
            double total = 0.0;
            for (const auto& r : run.result.rewards) total += r.reward;
            log << "episode " << ep.id << " [" << space.name << "]: success " << run.result.success << ", C = "
                << fmt(run.result.trajectory.completion_time()) << " s, steps " << run.result.rewards.size()
                << ", return " << fmt(total) << (run.result.aborted ? " (aborted)" : "") << "\n";
        }
        io::write_text(o.common.out / "trajectories.jsonl", traj_out);
        io::write_text(o.common.out / "rewards.jsonl", reward_out);
        return static_cast<int>(kOk);
    });
}

int cmd_bench(const BenchOptions& o, std::ostream& log) {
    return guarded(log, [&]() {
        Workspace ws(o.common, "bench");
        if (o.agents.empty()) {
            throw InvalidInput("bench: no agents given");
        }
        std::vector<ActionSpace> spaces;
        std::set<std::string> names;
        for (const auto& a : o.agents) {
            spaces.push_back(ActionSpace::from_name(a));
            if (!names.insert(a).second) {
                throw InvalidInput("bench: agent '" + a + "' listed twice");
            }
        }
        SimConfig sim = ws.settings().sim;
        sim.limits = ws.settings().limits;
        if (o.sliding) sim.sliding = *o.sliding;
        const RewardConfig reward = ws.settings().reward;
        (void)ws.table();  // build before the workers share it

        const auto& eps = ws.episodes();
        std::vector<Reference> refs(eps.size());
        std::vector<std::vector<AgentRun>> runs(eps.size());
        parallel_for(eps.size(), ws.settings().threads, [&](std::size_t i) {
            refs[i] = reference_for(ws, eps[i], true, nullptr);
            for (const auto& space : spaces) {
                runs[i].push_back(run_agent(ws, eps[i], space, sim, reward, &refs[i]));
            }
        });

        std::map<std::string, std::vector<MetricsReport>> reports;
        std::string traj_out;
        std::string reward_out;
        for (std::size_t i = 0; i < eps.size(); ++i) {
            for (std::size_t a = 0; a < spaces.size(); ++a) {
                reports[spaces[a].name].push_back(runs[i][a].report);
                append_rollout_lines(traj_out, reward_out, runs[i][a], ws.manifest_hash());
            }
        }
        const BatchReport batch = aggregate(reports, o.agents);
        ws.write_manifest();
        io::write_text(o.common.out / "reports.csv", io::reports_csv(batch, ws.manifest_hash()));
        ordered_json summary = io::batch_summary_json(batch);
        summary["manifest"] = ws.manifest_hash();
        io::write_text(o.common.out / "summary.json", summary.dump(2) + "\n");
        io::write_text(o.common.out / "trajectories.jsonl", traj_out);
        io::write_text(o.common.out / "rewards.jsonl", reward_out);
        for (const auto& s : batch.display()) {
            log << s.agent << ": SCT " << std::fixed << std::setprecision(2) << s.sct.mean << " +- "
                << s.sct.half_width << "  SPL " << s.spl.mean << " +- " << s.spl.half_width << "  success "
                << s.success.mean << "  SCT∩ " << s.sct_intersection.mean << "  SPL∩ " << s.spl_intersection.mean
                << "\n";
        }
        return static_cast<int>(kOk);
    });
}

int cmd_pivot_table(const PivotTableOptions& o, std::ostream& log) {
    return guarded(log, [&]() {
        const Settings s = load_settings(o.params);
        const PivotTable table = PivotTable::build(s.limits);
        if (o.out.has_parent_path()) {
            fs::create_directories(o.out.parent_path());
        }
        table.save(o.out.string());
        log << "pivot table " << table.shape().bearing_bins << "x" << table.shape().distance_bins << " for v_max "
            << fmt(s.limits.v_max) << " m/s, w_max " << fmt(rad_to_deg(s.limits.w_max)) << " deg/s -> "
            << o.out.string() << "\n";
        return static_cast<int>(kOk);
    });
}

// ---------------------------------------------------------------------------

std::string render_svg(const OccupancyGrid& grid, const std::vector<MotionPlan>& tree_edges, const Polyline& shortest,
                       const MotionPlan* best) {
    constexpr double kScale = 100.0;
    const Point2 o = grid.origin();
    const double top = o.y + grid.height_m();
    auto px = [&](double x) { return fmt((x - o.x) * kScale); };
    auto py = [&](double y) { return fmt((top - y) * kScale); };
    auto points = [&](const std::vector<Point2>& pts) {
        std::string s;
        for (const auto& p : pts) {
            s += px(p.x) + "," + py(p.y) + " ";
        }
        if (!s.empty()) s.pop_back();
        return s;
    };
    auto plan_points = [&](const MotionPlan& plan) {
        std::vector<Point2> pts;
        for (const Pose& p : plan.sample_by_length(0.05)) pts.push_back(p.position());
        return points(pts);
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(grid.width_m() * kScale) << "\" height=\""
       << fmt(grid.height_m() * kScale) << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const double r = grid.resolution() * kScale;
    for (int j = 0; j < grid.height(); ++j) {
        for (int i = 0; i < grid.width(); ++i) {
            const CellIndex c{i, j};
            if (grid.cell_free(c)) continue;
            const char* fill = grid.occupied(c) ? "#404040" : "#c8c8c8";
            os << "<rect x=\"" << px(o.x + i * grid.resolution()) << "\" y=\"" << py(o.y + (j + 1) * grid.resolution())
               << "\" width=\"" << fmt(r) << "\" height=\"" << fmt(r) << "\" fill=\"" << fill << "\"/>\n";
        }
    }
    os << "<g fill=\"none\" stroke=\"#e6c619\" stroke-width=\"1\">\n";
    for (const auto& e : tree_edges) {
        os << "<polyline points=\"" << plan_points(e) << "\"/>\n";
    }
    os << "</g>\n";
    if (!shortest.vertices.empty()) {
        os << "<polyline fill=\"none\" stroke=\"#3050c0\" stroke-width=\"2\" stroke-dasharray=\"8,6\" points=\""
           << points(shortest.vertices) << "\"/>\n";
    }
    if (best) {
        os << "<polyline fill=\"none\" stroke=\"#1a9e2a\" stroke-width=\"3\" points=\"" << plan_points(*best)
           << "\"/>\n";
        const Pose s = best->start();
        os << "<circle cx=\"" << px(s.x) << "\" cy=\"" << py(s.y) << "\" r=\"6\" fill=\"#1a9e2a\"/>\n";
        const Pose g = best->end_pose();
        os << "<circle cx=\"" << px(g.x) << "\" cy=\"" << py(g.y) << "\" r=\"6\" fill=\"#c03030\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace sctnav::cli
