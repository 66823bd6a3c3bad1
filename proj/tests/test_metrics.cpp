#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "sctnav/metrics.hpp"

namespace sctnav {
namespace {

Episode episode(const std::string& id = "ep") {
    Episode e;
    e.id = id;
    e.start = {0, 0, 0};
    e.goal = {2, 0};
    return e;
}

/// Straight run along +x at 0.25 m/s, one sample per second, then stop.
Trajectory straight_run(const std::string& id, double stop_x, bool terminate = true) {
    Trajectory t;
    t.episode_id = id;
    const int steps = static_cast<int>(std::lround(stop_x / 0.25));
    for (int k = 0; k <= steps; ++k) {
        t.samples.push_back({static_cast<double>(k), Pose(0.25 * k, 0, 0)});
        if (k < steps) t.actions.push_back({static_cast<double>(k), {1, 0}});
    }
    if (terminate) {
        t.actions.push_back({static_cast<double>(steps), {0, 0}});
        t.terminated_by_agent = true;
    }
    return t;
}

TEST(JudgeSuccess, Examples) {
    Episode e = episode();
    e.goal = {2.1, 0};
    EXPECT_EQ(judge_success(e, straight_run("ep", 2.0)), 1);
    e.goal = {2.3, 0};
    EXPECT_EQ(judge_success(e, straight_run("ep", 2.0)), 0);
    e.goal = {2.0, 0};
    EXPECT_EQ(judge_success(e, straight_run("ep", 2.0, false)), 0);
    EXPECT_THROW((void)judge_success(e, straight_run("other", 2.0)), InvalidInput);
}

TEST(JudgeSuccess, StepCapWithoutStop) {
    Episode e = episode();
    e.goal = {1.0, 0};
    e.max_steps = 500;
    // drives through the goal and never stops; 500 actions used
    Trajectory t;
    t.episode_id = "ep";
    for (int k = 0; k <= 500; ++k) {
        t.samples.push_back({static_cast<double>(k), Pose(k % 8 == 4 ? 1.0 : 0.0, 0, 0)});
        if (k < 500) t.actions.push_back({static_cast<double>(k), {1, 0}});
    }
    EXPECT_EQ(judge_success(e, t), 0);
}

TEST(JudgeSuccess, StopBeyondStepCap) {
    Episode e = episode();
    e.max_steps = 8;
    EXPECT_EQ(judge_success(e, straight_run("ep", 2.0)), 0);  // 8 moves + stop = 9 actions
    e.max_steps = 9;
    EXPECT_EQ(judge_success(e, straight_run("ep", 2.0)), 1);
}

TEST(JudgeSuccess, IgnoresSamplesAfterStop) {
    const Episode e = episode();
    Trajectory t = straight_run("ep", 2.0);
    const auto before = judge_success(e, t);
    const double c = t.completion_time();
    const double p = t.path_length();
    t.samples.push_back({100.0, Pose(50, 50, 0)});
    EXPECT_EQ(judge_success(e, t), before);
    EXPECT_EQ(t.completion_time(), c);
    EXPECT_EQ(t.path_length(), p);
}

TEST(Spl, Examples) {
    EXPECT_DOUBLE_EQ(spl(1, 10, 8), 0.8);
    EXPECT_DOUBLE_EQ(spl(1, 7, 8), 1.0);
    EXPECT_DOUBLE_EQ(spl(0, 3, 8), 0.0);
    EXPECT_THROW((void)spl(1, 3, 0), InvalidInput);
    EXPECT_THROW((void)spl(1, -1, 3), InvalidInput);
}

TEST(Sct, Examples) {
    EXPECT_DOUBLE_EQ(sct(1, 50, 40), 0.8);
    EXPECT_DOUBLE_EQ(sct(1, 35, 40), 1.0);
    EXPECT_DOUBLE_EQ(sct(0, 10, 40), 0.0);
    EXPECT_THROW((void)sct(1, 10, 0), InvalidInput);
    EXPECT_THROW((void)sct(1, -1, 3), InvalidInput);
}

TEST(ScoreProperties, BoundedMonotoneAndScaleConsistent) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> pos(0.1, 100.0);
    std::uniform_real_distribution<double> factor(1.0, 5.0);
    for (int k = 0; k < 10000; ++k) {
        const double cost = pos(rng);
        const double ref = pos(rng);
        const double f = factor(rng);
        for (auto score : {spl, sct}) {
            const double s = score(1, cost, ref);
            ASSERT_GE(s, 0.0);
            ASSERT_LE(s, 1.0);
            ASSERT_LE(score(1, cost * f, ref), s);
            ASSERT_NEAR(score(1, 2 * cost, 2 * ref), s, 1e-15);
        }
    }
}

TEST(ScoreEpisode, TracingReferencesScoresOne) {
    const Episode e = episode();
    const Trajectory t = straight_run("ep", 2.0);
    const MetricsReport r = score_episode(e, t, 2.0, 8.0);
    EXPECT_EQ(r.success, 1);
    EXPECT_DOUBLE_EQ(r.path_length, 2.0);
    EXPECT_DOUBLE_EQ(r.completion_time, 8.0);
    EXPECT_DOUBLE_EQ(r.spl, 1.0);
    EXPECT_DOUBLE_EQ(r.sct, 1.0);
    EXPECT_FALSE(r.beat_reference);

    const MetricsReport slow = score_episode(e, t, 1.6, 6.4);
    EXPECT_DOUBLE_EQ(slow.spl, 0.8);
    EXPECT_DOUBLE_EQ(slow.sct, 0.8);
    EXPECT_TRUE(score_episode(e, t, 2.0, 10.0).beat_reference);
}

TEST(ScoreEpisode, FailureZeroesBoth) {
    Episode e = episode();
    e.goal = {3, 0};
    const MetricsReport r = score_episode(e, straight_run("ep", 2.0), 3.0, 12.0);
    EXPECT_EQ(r.success, 0);
    EXPECT_EQ(r.spl, 0.0);
    EXPECT_EQ(r.sct, 0.0);
}

TEST(Trajectory, Validation) {
    Trajectory t = straight_run("ep", 1.0);
    EXPECT_NO_THROW(t.validate());
    t.samples[2].t = t.samples[1].t;
    EXPECT_THROW(t.validate(), InvalidInput);
    Trajectory empty;
    EXPECT_THROW(empty.validate(), InvalidInput);
}

MetricsReport report(const std::string& id, int s, double spl_v, double sct_v) {
    MetricsReport r;
    r.episode_id = id;
    r.success = s;
    r.spl = spl_v;
    r.sct = sct_v;
    return r;
}

TEST(MeanCi, HandValues) {
    const MeanCi m = MeanCi::of({0.2, 0.4, 0.9});
    EXPECT_NEAR(m.mean, 0.5, 1e-15);
    // sample sd = sqrt(((0.3)^2 + (0.1)^2 + (0.4)^2) / 2) = sqrt(0.13)
    EXPECT_NEAR(m.half_width, 1.96 * std::sqrt(0.13) / std::sqrt(3.0), 1e-15);
    EXPECT_EQ(MeanCi::of({0.7}).half_width, 0.0);
    EXPECT_EQ(MeanCi::of({}).n, 0u);
}

TEST(Aggregate, ThreeEpisodeBatch) {
    std::map<std::string, std::vector<MetricsReport>> reports;
    reports["a"] = {report("e1", 1, 0.9, 0.6), report("e2", 1, 0.5, 0.7), report("e3", 1, 0.7, 0.2)};
    reports["b"] = {report("e1", 1, 0.8, 0.9), report("e2", 0, 0.0, 0.0), report("e3", 1, 1.0, 0.5)};
    const BatchReport batch = aggregate(reports, {"a", "b"});
    ASSERT_EQ(batch.intersection, (std::vector<std::string>{"e1", "e3"}));
    const auto& a = batch.summaries[0];
    const auto& b = batch.summaries[1];
    EXPECT_NEAR(a.spl.mean, 0.7, 1e-15);
    EXPECT_NEAR(a.sct.mean, 0.5, 1e-15);
    EXPECT_NEAR(a.spl_intersection.mean, 0.8, 1e-15);
    EXPECT_NEAR(a.sct_intersection.mean, 0.4, 1e-15);
    EXPECT_NEAR(b.spl.mean, 0.6, 1e-15);
    EXPECT_NEAR(b.success.mean, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(b.sct_intersection.mean, 0.7, 1e-15);
    const auto shown = batch.display();
    EXPECT_NEAR(shown[0].spl.mean, 70.0, 1e-12);
    EXPECT_NEAR(shown[1].sct_intersection.mean, 70.0, 1e-12);
    EXPECT_NEAR(shown[0].sct.half_width, 100.0 * a.sct.half_width, 1e-12);
}

TEST(Aggregate, AllSolvedIntersectionEqualsMean) {
    std::map<std::string, std::vector<MetricsReport>> reports;
    reports["x"] = {report("e1", 1, 0.3, 0.4), report("e2", 1, 0.6, 0.1)};
    reports["y"] = {report("e2", 1, 0.5, 0.5), report("e1", 1, 0.2, 0.9)};
    const BatchReport batch = aggregate(reports, {"x", "y"});
    for (const auto& s : batch.summaries) {
        EXPECT_EQ(s.sct.mean, s.sct_intersection.mean);
        EXPECT_EQ(s.spl.mean, s.spl_intersection.mean);
    }
}

TEST(Aggregate, MismatchedEpisodeSets) {
    std::map<std::string, std::vector<MetricsReport>> reports;
    reports["x"] = {report("e1", 1, 0.3, 0.4), report("e2", 1, 0.6, 0.1)};
    reports["y"] = {report("e1", 1, 0.2, 0.9)};
    EXPECT_THROW((void)aggregate(reports, {"x", "y"}), InvalidInput);
    EXPECT_THROW((void)aggregate(reports, {"x", "z"}), InvalidInput);
    EXPECT_THROW((void)aggregate(reports, {}), InvalidInput);
}

}  // namespace
}  // namespace sctnav
