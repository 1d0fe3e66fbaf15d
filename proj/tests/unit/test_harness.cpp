#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qexp/config.hpp"
#include "qexp/harness.hpp"
#include "qexp/samplers.hpp"

using namespace qexp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("qexp_harness_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ExperimentConfig tiny_config(const fs::path& out) {
    std::istringstream ini(R"(
[experiment]
env = pendulum
agent = tawac
steps = 400
eval_interval = 100
seeds = 3,4
out = )" + out.string() + R"(

[policy]
family = q_gaussian
q = 0

[agent]
hidden = 8,8
batch_size = 16
)");
    auto c = parse_config(ini);
    bind_environment(c);
    c.validate();
    return c;
}

bool same(const std::vector<EvalRecord>& a, const std::vector<EvalRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].step != b[i].step || a[i].seed != b[i].seed || a[i].ret != b[i].ret) return false;
    }
    return true;
}

struct ThreadsEnv {
    explicit ThreadsEnv(const char* v) {
        if (const char* old = std::getenv("QEXP_THREADS")) saved = old;
        if (v) setenv("QEXP_THREADS", v, 1); else unsetenv("QEXP_THREADS");
    }
    ~ThreadsEnv() {
        if (saved.empty()) unsetenv("QEXP_THREADS"); else setenv("QEXP_THREADS", saved.c_str(), 1);
    }
    std::string saved;
};

} // namespace

TEST(EvalCsv, RoundTrip) {
    const std::vector<EvalRecord> rows{{1000, 2, -123.25, 1.5}, {2000, 2, 0.1, 3.0}};
    std::stringstream ss;
    write_eval_csv(ss, rows);
    EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "step,seed,return,seconds");
    const auto back = read_eval_csv(ss);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_TRUE(same(back, rows));
    EXPECT_EQ(back[1].seconds, 3.0);
}

TEST(EvalCsv, RejectsMalformedInput) {
    for (const char* text : {"step,seed,ret,seconds\n1,2,3,4\n", "step,seed,return,seconds\n1,2,3\n",
                             "step,seed,return,seconds\n1,2,x,4\n", "step,seed,return,seconds\n1,2,nan,4\n",
                             "step,seed,return,seconds\n1,2,3,4,5\n"}) {
        std::istringstream in(text);
        EXPECT_THROW(read_eval_csv(in), std::runtime_error) << text;
    }
}

TEST(Aggregate, MeanAndStandardError) {
    const std::vector<EvalRecord> rows{{10, 0, 0.0, 0}, {10, 1, 2.0, 0}, {20, 0, 5.0, 0}, {20, 1, 5.0, 0}};
    const auto s = aggregate(rows);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].step, 10);
    EXPECT_DOUBLE_EQ(s[0].mean, 1.0);
    // Sample sd sqrt(2) over sqrt(2).
    EXPECT_DOUBLE_EQ(s[0].std_error, 1.0);
    EXPECT_EQ(s[0].n, 2u);
    EXPECT_EQ(s[1].std_error, 0.0);

    const std::vector<EvalRecord> one{{10, 0, 4.0, 0}};
    EXPECT_EQ(aggregate(one)[0].std_error, 0.0);
}

TEST(Aggregate, TrailingAverage) {
    const std::vector<double> v{1, 2, 3, 4, 5};
    EXPECT_EQ(trailing_average(v, 2), (std::vector<double>{1, 1.5, 2.5, 3.5, 4.5}));
    EXPECT_EQ(trailing_average(v, 1), v);
    EXPECT_EQ(trailing_average(v, 10), (std::vector<double>{1, 1.5, 2, 2.5, 3}));
}

TEST(Sweep, SelectBestAndAuc) {
    const std::vector<double> scores{1.0, std::nan(""), 3.0, 3.0, 2.0};
    EXPECT_EQ(select_best(scores), 2u);
    const std::vector<double> bad{std::nan(""), std::nan("")};
    EXPECT_THROW(select_best(bad), std::runtime_error);

    std::vector<EvalRecord> flat;
    for (int i = 1; i <= 5; ++i) flat.push_back({i * 10, 0, -7.5, 0});
    EXPECT_DOUBLE_EQ(area_under_curve(flat), -7.5);
}

TEST(Sweep, GridOrder) {
    const SweepSpec spec;
    const auto g = sweep_grid(spec);
    ASSERT_EQ(g.size(), 36u);
    EXPECT_EQ(g[0].critic_lr, 1e-2);
    EXPECT_EQ(g[0].tau, 0.01);
    EXPECT_EQ(g[1].tau, 0.1);
    EXPECT_EQ(g[3].actor_lr_multiplier, 1.0);
    EXPECT_EQ(g[9].critic_lr, 1e-3);
    EXPECT_EQ(g[35].critic_lr, 1e-5);
}

TEST(Config, WriteParseRoundTrip) {
    ExperimentConfig c;
    c.env = "mountain_car_cost";
    c.policy.family = PolicyFamily::StudentT;
    c.policy.nu_base = 3.5;
    c.agent.algorithm = Algorithm::GreedyAc;
    c.agent.hidden = {32, 16};
    c.agent.critic_lr = 3e-4;
    c.stop_return = -1000.0;
    c.seeds = {7, 1, 9};
    c.sweep.taus = {0.5};
    std::stringstream ss;
    write_config(ss, c);
    const auto back = parse_config(ss);
    std::stringstream again;
    write_config(again, back);
    EXPECT_EQ(ss.str(), again.str());
    EXPECT_EQ(back.seeds, c.seeds);
    EXPECT_EQ(back.agent.hidden, c.agent.hidden);
    EXPECT_EQ(back.agent.critic_lr, 3e-4);
    EXPECT_EQ(back.stop_return, -1000.0);
}

TEST(Config, RejectsBadInput) {
    const char* bad[] = {
        "[experiment]\nstepz = 10\n",
        "[nonsense]\nx = 1\n",
        "[experiment]\nsteps = ten\n",
        "[experiment]\nseeds = 1,2,1\n",
        "[experiment]\nenv = cartpole\n",
        "[experiment]\nsteps = 1500\neval_interval = 1000\n",
        "[sweep]\nsweep_seeds = 1,2\nbest_seeds = 2,3\n",
        "[experiment]\nmode = offline\nagent = sac\n",
        "[experiment]\nmode = online\nagent = iql\n",
    };
    for (const char* text : bad) {
        EXPECT_THROW(
            {
                std::istringstream in(text);
                auto c = parse_config(in);
                bind_environment(c);
                c.validate();
            },
            ConfigError)
            << text;
    }
}

TEST(Config, SeedList) {
    EXPECT_EQ(parse_seed_list("3, 1,2"), (std::vector<std::uint64_t>{3, 1, 2}));
    EXPECT_THROW(parse_seed_list("1,,2"), ConfigError);
    EXPECT_THROW(parse_seed_list("-1"), ConfigError);
}

TEST(Parallel, WorkerCountHonorsEnvironment) {
    {
        ThreadsEnv env("3");
        EXPECT_EQ(worker_count(10), 3u);
        EXPECT_EQ(worker_count(2), 2u);
    }
    {
        ThreadsEnv env(nullptr);
        EXPECT_GE(worker_count(10), 1u);
        EXPECT_LE(worker_count(1), 1u);
    }
}

TEST(Parallel, RunsEveryIndexAndRethrows) {
    ThreadsEnv env("4");
    std::vector<std::atomic<int>> hits(50);
    parallel_for(50, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    EXPECT_THROW(parallel_for(8,
                              [](std::size_t i) {
                                  if (i == 5) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
}

TEST(Harness, EvaluationLeavesPolicyUntouched) {
    Rng init(1);
    auto c = tiny_config(scratch("frozen"));
    const auto env = make_env("pendulum");
    Actor actor(c.policy, env->observation_dim(), {8}, init);
    const Mlp before = actor.net();
    Rng r1(2), r2(2);
    const double a = evaluate_policy(actor, *env, 1, false, r1);
    const double b = evaluate_policy(actor, *make_env("pendulum"), 1, false, r2);
    EXPECT_EQ(actor.net(), before);
    EXPECT_EQ(a, b);
    EXPECT_TRUE(std::isfinite(a));
}

TEST(Harness, TrainIsReproducibleAcrossThreadCounts) {
    const auto dir_a = scratch("train_a");
    const auto dir_b = scratch("train_b");
    std::vector<EvalRecord> a, b;
    {
        ThreadsEnv env("1");
        a = run_train(tiny_config(dir_a));
    }
    {
        ThreadsEnv env("2");
        b = run_train(tiny_config(dir_b));
    }
    ASSERT_EQ(a.size(), 8u);
    EXPECT_EQ(a[0].seed, 3u);
    EXPECT_EQ(a[4].seed, 4u);
    EXPECT_EQ(a[3].step, 400);
    EXPECT_TRUE(same(a, b));
    EXPECT_TRUE(same(read_eval_csv(dir_a / "eval.csv"), a));
    EXPECT_TRUE(same(collect_records(dir_a / "seed_4"), std::vector<EvalRecord>(a.begin() + 4, a.end())));
    EXPECT_TRUE(fs::exists(dir_a / "seed_3" / "actor_final.ckpt"));
    EXPECT_TRUE(fs::exists(dir_a / "seed_3" / "config.ini"));
    const auto reloaded = load_config((dir_a / "seed_3" / "config.ini").string());
    EXPECT_EQ(reloaded.total_steps, 400);
}

TEST(Harness, StopReturnEndsRunEarly) {
    auto c = tiny_config(scratch("stop"));
    c.seeds = {3};
    c.stop_return = -1e12;
    const auto r = run_train(c);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].step, 100);
}

TEST(Harness, DatasetFromCheckpointIsDeterministic) {
    const auto dir = scratch("dataset");
    auto c = tiny_config(dir);
    c.seeds = {3};
    run_train(c);
    c.behavior_checkpoint = (dir / "seed_3" / "actor_final.ckpt").string();
    c.dataset_size = 300;
    const Dataset a = generate_dataset(c, 9);
    const Dataset b = generate_dataset(c, 9);
    ASSERT_EQ(a.transitions.size(), 300u);
    EXPECT_EQ(a.transitions, b.transitions);
    EXPECT_EQ(a.env_name, "pendulum");
    for (const auto& t : a.transitions) ASSERT_TRUE(std::isfinite(t.behavior_log_prob));

    c.behavior_checkpoint.clear();
    const Dataset u = generate_dataset(c, 9);
    EXPECT_NEAR(u.transitions[0].behavior_log_prob, -std::log(4.0), 1e-12);
}

TEST(Harness, OfflineTrainingReadsDataset) {
    const auto dir = scratch("offline");
    auto c = tiny_config(dir);
    c.seeds = {3};
    c.dataset_size = 200;
    const Dataset d = generate_dataset(c, 1);
    write_dataset((dir / "d.qxds").string(), d);

    std::istringstream ini("[experiment]\nenv = pendulum\nmode = offline\nagent = iql\nsteps = 200\n"
                           "eval_interval = 100\nseeds = 0\nout = " + (dir / "run").string() +
                           "\n[agent]\nhidden = 8\nbatch_size = 16\n[dataset]\npath = " + (dir / "d.qxds").string() +
                           "\n");
    auto off = parse_config(ini);
    bind_environment(off);
    off.validate();
    const auto r = run_train(off);
    EXPECT_EQ(r.size(), 2u);
}

TEST(Harness, SinglePointSweepPicksIt) {
    const auto dir = scratch("sweep");
    auto c = tiny_config(dir);
    c.total_steps = 200;
    c.eval_interval = 100;
    c.sweep.critic_lrs = {1e-3};
    c.sweep.actor_lr_multipliers = {1.0};
    c.sweep.taus = {0.1};
    c.sweep.sweep_seeds = {0};
    c.sweep.best_seeds = {1, 2};
    c.sweep.eval_interval = 100;
    c.sweep.eval_episodes = 1;
    const auto report = run_sweep(c);
    EXPECT_EQ(report.best, 0u);
    EXPECT_TRUE(std::isfinite(report.aucs[0]));
    EXPECT_EQ(report.best_records.size(), 4u);
    EXPECT_TRUE(fs::exists(dir / "sweep_report.csv"));
    EXPECT_TRUE(fs::exists(dir / "best" / "eval.csv"));
}
