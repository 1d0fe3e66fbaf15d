// Acceptance checks, one per criterion: `qexp_acceptance --criterion N`
// prints a single PASS or FAIL line and exits 0 only on PASS.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "qexp/config.hpp"
#include "qexp/harness.hpp"
#include "qexp/validation.hpp"

namespace fs = std::filesystem;
using namespace qexp;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x) {
    std::ostringstream ss;
    ss.precision(4);
    ss << x;
    return ss.str();
}

// Criteria 1-7: every check in the suite passes within the runtime limit.
Outcome suite_criterion(const std::string& suite, double limit_seconds) {
    const auto t0 = Clock::now();
    const auto checks = run_validation_suite(suite, ValidationOptions{});
    const double elapsed = seconds_since(t0);
    Outcome o{elapsed < limit_seconds, ""};
    std::size_t failed = 0;
    for (const auto& c : checks) {
        if (!c.pass) {
            ++failed;
            o.detail += " [" + c.name + " " + fmt(c.value) + " >= " + fmt(c.tolerance) + "]";
        }
    }
    o.pass = o.pass && failed == 0 && !checks.empty();
    o.detail = suite + ": " + std::to_string(checks.size() - failed) + "/" + std::to_string(checks.size()) +
               " checks in " + fmt(elapsed) + " s (limit " + fmt(limit_seconds) + " s)" + o.detail;
    return o;
}

ExperimentConfig config_from(const std::string& ini) {
    std::istringstream in(ini);
    auto c = parse_config(in);
    bind_environment(c);
    c.validate();
    return c;
}

std::map<std::uint64_t, std::vector<double>> returns_by_seed(const std::vector<EvalRecord>& records) {
    std::map<std::uint64_t, std::vector<double>> out;
    for (const auto& r : records) out[r.seed].push_back(r.ret);
    return out;
}

double mean(std::span<const double> xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Light q-Gaussian actor on cost-to-goal Mountain Car. A seed stops at its
// first evaluation above -1000, which is the success event.
Outcome criterion_8a(const fs::path& work) {
    const auto config = config_from("[experiment]\nenv = mountain_car_cost\nagent = tawac\nsteps = 300000\n"
                                    "eval_interval = 1000\nstop_return = -1000\nseeds = 0,1,2,3,4,5,6,7,8,9\n"
                                    "out = " + (work / "mountain_car").string() +
                                    "\n[policy]\nfamily = q_gaussian\nq = 0\n[agent]\nq_prime = 0\n");
    const auto by_seed = returns_by_seed(run_train(config));
    int reached = 0;
    for (const auto& [seed, rets] : by_seed) {
        if (std::any_of(rets.begin(), rets.end(), [](double r) { return r > -1000.0; })) ++reached;
    }
    return {reached >= 7, "8a mountain car: " + std::to_string(reached) + "/10 seeds reached the goal (need 7)"};
}

// TAWAC(q'=0) with a light q-Gaussian on Pendulum over the same step budget.
// Compares the mean of the last ten evaluations with the first ten, averaged
// over three seeds.
Outcome criterion_8b(const fs::path& work) {
    const auto config = config_from("[experiment]\nenv = pendulum\nagent = tawac\nsteps = 300000\n"
                                    "eval_interval = 1000\nseeds = 0,1,2\nout = " + (work / "pendulum").string() +
                                    "\n[policy]\nfamily = q_gaussian\nq = 0\n[agent]\nq_prime = 0\n");
    const auto by_seed = returns_by_seed(run_train(config));
    std::vector<double> first, last;
    for (const auto& [seed, rets] : by_seed) {
        if (rets.size() < 20) return {false, "8b pendulum: fewer than 20 evaluations"};
        first.insert(first.end(), rets.begin(), rets.begin() + 10);
        last.insert(last.end(), rets.end() - 10, rets.end());
    }
    const double gain = mean(last) - mean(first);
    return {gain >= 200.0, "8b pendulum: first-10 mean " + fmt(mean(first)) + ", final-10 mean " + fmt(mean(last)) +
                               ", gain " + fmt(gain) + " (need 200)"};
}

// Behavior actor trained for 15k steps, 1e5 transitions, then ten offline
// seeds each for TAWAC(q'=0) with a light q-Gaussian and AWAC with a
// Gaussian. A seed succeeds when its final five-episode evaluation is within
// 50 of the behavior return.
Outcome criterion_9(const fs::path& work) {
    const auto t0 = Clock::now();
    const auto behavior = config_from("[experiment]\nenv = pendulum\nagent = tawac\nsteps = 15000\n"
                                      "eval_interval = 1000\nseeds = 100\nout = " + (work / "behavior").string() +
                                      "\n[policy]\nfamily = q_gaussian\nq = 0\n[agent]\nq_prime = 0\n");
    run_train(behavior);

    auto gen = behavior;
    gen.behavior_checkpoint = (work / "behavior" / "seed_100" / "actor_final.ckpt").string();
    gen.dataset_size = 100000;
    const Dataset data = generate_dataset(gen, 100);
    const auto dataset_path = work / "pendulum.qxds";
    write_dataset(dataset_path.string(), data);
    double total = 0.0;
    for (const auto& t : data.transitions) total += t.reward;
    // Pendulum episodes never terminate and are truncated at 1000 steps.
    const double behavior_return = total / static_cast<double>(data.transitions.size()) * 1000.0;

    std::string detail = "9 offline: behavior return " + fmt(behavior_return);
    bool pass = true;
    const std::pair<std::string, std::string> runs[] = {{"tawac", "family = q_gaussian\nq = 0"},
                                                         {"awac", "family = gaussian"}};
    for (const auto& [agent, policy] : runs) {
        const auto config = config_from(
            "[experiment]\nenv = pendulum\nmode = offline\nagent = " + agent +
            "\nsteps = 10000\neval_interval = 10000\neval_episodes = 5\nseeds = 0,1,2,3,4,5,6,7,8,9\nout = " +
            (work / ("offline_" + agent)).string() +
            "\n[policy]\n" + policy + "\n[agent]\nq_prime = 0\nhidden = 64,64\nbatch_size = 64\n"
            "[dataset]\npath = " + dataset_path.string() + "\n");
        const auto by_seed = returns_by_seed(run_train(config));
        int ok = 0;
        for (const auto& [seed, rets] : by_seed) ok += rets.back() >= behavior_return - 50.0;
        pass = pass && ok >= 7;
        detail += "; " + agent + " " + std::to_string(ok) + "/10 seeds (need 7)";
    }
    const double elapsed = seconds_since(t0);
    detail += "; " + fmt(elapsed) + " s (limit 3600 s)";
    return {pass && elapsed <= 3600.0, detail};
}

// The file text with the trailing seconds field cut from every line.
std::string strip_seconds(const fs::path& csv) {
    std::ifstream in(csv);
    if (!in) throw std::runtime_error("missing " + csv.string());
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) out << line.substr(0, line.rfind(',')) << '\n';
    return out.str();
}

// Runs the CLI twice on one config and compares the eval CSVs.
Outcome criterion_10(const fs::path& work, const std::string& cli) {
    const auto ini = work / "repro.ini";
    std::ofstream(ini) << "[experiment]\nenv = pendulum\nagent = sac\nsteps = 3000\neval_interval = 1000\n"
                          "seeds = 4,7\n[policy]\nfamily = student_t\n[agent]\nhidden = 32,32\n";
    std::string csv[2];
    for (int run = 0; run < 2; ++run) {
        const auto out = work / ("repro_" + std::to_string(run));
        fs::remove_all(out);
        const std::string cmd = "\"" + cli + "\" train --config \"" + ini.string() + "\" --out \"" + out.string() +
                                "\" > \"" + (work / "repro.log").string() + "\" 2>&1";
        if (const int rc = std::system(cmd.c_str()); rc != 0) {
            return {false, "10 reproducibility: train exited with status " + std::to_string(rc)};
        }
        csv[run] = strip_seconds(out / "eval.csv");
    }
    const bool same = csv[0] == csv[1] && !csv[0].empty();
    return {same, std::string("10 reproducibility: eval CSVs ") + (same ? "identical" : "differ") +
                      " apart from seconds"};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    int criterion = 0;
    std::string work_dir = (fs::temp_directory_path() / "qexp_acceptance").string();
    std::string cli = QEXP_CLI_PATH;
    app.add_option("--criterion", criterion, "Criterion number, 1-10")->required()->check(CLI::Range(1, 10));
    app.add_option("--work", work_dir, "Scratch directory for run outputs");
    app.add_option("--cli", cli, "Path to the qexp binary");
    CLI11_PARSE(app, argc, argv);

    const fs::path work = fs::path(work_dir) / ("criterion_" + std::to_string(criterion));
    fs::remove_all(work);
    fs::create_directories(work);

    Outcome o;
    try {
        switch (criterion) {
        case 1: o = suite_criterion("math", 5.0); break;
        case 2: o = suite_criterion("density", 120.0); break;
        case 3: o = suite_criterion("gradient", 120.0); break;
        case 4: o = suite_criterion("sampler", 180.0); break;
        case 5: o = suite_criterion("sparsemax", 5.0); break;
        case 6: o = suite_criterion("equivalence", 30.0); break;
        case 7: o = suite_criterion("critic", 30.0); break;
        case 8: {
            const auto a = criterion_8a(work);
            const auto b = criterion_8b(work);
            o = {a.pass && b.pass, a.detail + "; " + b.detail};
            break;
        }
        case 9: o = criterion_9(work); break;
        case 10: o = criterion_10(work, cli); break;
        }
    } catch (const std::exception& e) {
        o = {false, std::string("error: ") + e.what()};
    }
    std::cout << "criterion " << criterion << ": " << (o.pass ? "PASS" : "FAIL") << " " << o.detail << std::endl;
    return o.pass ? 0 : 1;
}
