// qexp: train, sweep, gen-dataset, sample, validate, aggregate, plot-data.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 validation
// failure, 3 runtime error.

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "qexp/config.hpp"
#include "qexp/harness.hpp"
#include "qexp/policy_heads.hpp"
#include "qexp/samplers.hpp"
#include "qexp/validation.hpp"

namespace fs = std::filesystem;
using namespace qexp;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string seeds;
    std::string out;
    std::string env;
    std::string agent;
    std::string policy;
    std::optional<std::int64_t> steps;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "Experiment INI file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "Single seed");
    cmd->add_option("--seeds", f.seeds, "Comma-separated seeds");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--env", f.env, "mountain_car_cost, pendulum or acrobot_continuous");
    cmd->add_option("--agent", f.agent, "sac, greedyac, tawac, awac, iql, inac or td3bc");
    cmd->add_option("--policy", f.policy, "gaussian, squashed_gaussian, beta, student_t or q_gaussian");
    cmd->add_option("--steps", f.steps, "Total environment or update steps");
}

ExperimentConfig build_config(const CommonFlags& f) {
    ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
    try {
        if (!f.env.empty()) c.env = f.env;
        if (!f.agent.empty()) c.agent.algorithm = parse_algorithm(f.agent);
        if (!f.policy.empty()) c.policy.family = parse_policy_family(f.policy);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (f.steps) c.total_steps = *f.steps;
    if (f.seed && !f.seeds.empty()) throw ConfigError("--seed and --seeds are exclusive");
    if (f.seed) c.seeds = {*f.seed};
    if (!f.seeds.empty()) c.seeds = parse_seed_list(f.seeds);
    if (!f.out.empty()) c.out_dir = f.out;
    bind_environment(c);
    c.validate();
    return c;
}

void print_final_returns(const std::vector<EvalRecord>& records) {
    std::map<std::uint64_t, EvalRecord> last;
    for (const auto& r : records) last[r.seed] = r;
    for (const auto& [seed, r] : last) {
        std::cout << "seed " << seed << ": step " << r.step << " return " << format_double(r.ret) << '\n';
    }
}

int cmd_train(const CommonFlags& f) {
    const auto config = build_config(f);
    const auto records = run_train(config);
    print_final_returns(records);
    std::cout << "wrote " << (fs::path(config.out_dir) / "eval.csv").string() << '\n';
    return 0;
}

int cmd_sweep(const CommonFlags& f) {
    const auto config = build_config(f);
    const auto report = run_sweep(config);
    write_sweep_report(std::cout, report);
    const auto& best = report.points[report.best];
    std::cout << "best point " << report.best << ": critic_lr " << format_double(best.critic_lr)
              << " actor_lr_multiplier " << format_double(best.actor_lr_multiplier) << " tau "
              << format_double(best.tau) << '\n';
    return 0;
}

int cmd_gen_dataset(const CommonFlags& f, std::optional<std::size_t> size) {
    auto config = build_config(f);
    if (size) config.dataset_size = *size;
    const std::uint64_t seed = config.seeds.front();
    const Dataset data = generate_dataset(config, seed);
    fs::create_directories(config.out_dir);
    const auto path = fs::path(config.out_dir) / "dataset.qxds";
    write_dataset(path.string(), data);
    double total = 0.0;
    for (const auto& t : data.transitions) total += t.reward;
    std::cout << "wrote " << data.transitions.size() << " transitions to " << path.string() << " (mean reward "
              << format_double(total / static_cast<double>(data.transitions.size())) << ")\n";
    return 0;
}

int cmd_sample(const CommonFlags& f, std::size_t count, const std::string& raw_text, std::optional<double> q) {
    auto config = build_config(f);
    if (q) config.policy.q = *q;
    config.policy.validate();
    std::vector<double> raw(config.policy.raw_size(), 0.0);
    if (!raw_text.empty()) {
        std::stringstream ss(raw_text);
        std::string item;
        std::vector<double> parsed;
        while (std::getline(ss, item, ',')) {
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
            if (ec != std::errc() || ptr != item.data() + item.size()) throw ConfigError("bad --raw value " + item);
            parsed.push_back(v);
        }
        if (parsed.size() != raw.size()) {
            throw ConfigError("--raw needs " + std::to_string(raw.size()) + " values for this policy");
        }
        raw = parsed;
    }
    const auto out = head_forward(config.policy, raw);
    Rng rng = Rng::derive(0, config.seeds.front(), StreamPurpose::Cli);

    std::ofstream file;
    std::ostream* sink = &std::cout;
    if (!f.out.empty()) {
        fs::create_directories(config.out_dir);
        file.open(fs::path(config.out_dir) / "samples.csv");
        if (!file) throw std::runtime_error("cannot write samples.csv");
        sink = &file;
    }
    for (int d = 0; d < config.policy.action_dim; ++d) *sink << (d ? ",a" : "a") << d;
    *sink << ",log_prob\n";
    for (std::size_t i = 0; i < count; ++i) {
        const auto a = policy_sample(config.policy, out, rng);
        for (std::size_t d = 0; d < a.size(); ++d) *sink << (d ? "," : "") << format_double(a[d]);
        *sink << ',' << format_double(policy_log_prob(config.policy, out, a)) << '\n';
    }
    return 0;
}

int cmd_validate(std::vector<std::string> suites, std::optional<std::uint64_t> seed, const std::string& out) {
    if (suites.empty()) suites = validation_suites();
    ValidationOptions opts;
    if (seed) opts.seed = *seed;
    std::vector<ValidationCheck> all;
    for (const auto& s : suites) {
        try {
            const auto checks = run_validation_suite(s, opts);
            all.insert(all.end(), checks.begin(), checks.end());
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    write_validation_csv(std::cout, all);
    if (!out.empty()) {
        fs::create_directories(out);
        std::ofstream file(fs::path(out) / "validation.csv");
        write_validation_csv(file, all);
    }
    const auto failed = std::count_if(all.begin(), all.end(), [](const auto& c) { return !c.pass; });
    std::cerr << all.size() - failed << "/" << all.size() << " checks passed\n";
    return failed == 0 ? 0 : kExitValidation;
}

std::vector<EvalRecord> gather(const std::vector<std::string>& dirs) {
    std::vector<EvalRecord> all;
    for (const auto& d : dirs) {
        const auto r = collect_records(d);
        all.insert(all.end(), r.begin(), r.end());
    }
    return all;
}

int cmd_aggregate(const std::vector<std::string>& dirs, const std::string& out) {
    const auto rows = aggregate(gather(dirs));
    if (out.empty()) {
        write_summary_csv(std::cout, rows);
    } else {
        fs::create_directories(out);
        std::ofstream file(fs::path(out) / "summary.csv");
        write_summary_csv(file, rows);
    }
    return 0;
}

int cmd_plot_data(const std::vector<std::string>& dirs, const std::string& out, std::size_t window) {
    fs::create_directories(out);
    for (const auto& d : dirs) {
        const auto rows = aggregate(collect_records(d));
        std::string name = fs::path(d).lexically_normal().filename().string();
        if (name.empty() || name == ".") name = fs::path(d).lexically_normal().parent_path().filename().string();
        if (name.empty()) name = "curve";
        const auto path = fs::path(out) / (name + ".csv");
        std::ofstream file(path);
        if (!file) throw std::runtime_error("cannot write " + path.string());
        write_plot_csv(file, rows, window);
        std::cout << "wrote " << path.string() << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"q-exponential policy experiments"};
    app.require_subcommand(1);

    CommonFlags train_f, sweep_f, gen_f, sample_f;
    auto* train = app.add_subcommand("train", "Train every configured seed");
    add_common(train, train_f);
    auto* sweep = app.add_subcommand("sweep", "Grid sweep, then re-run the best point on fresh seeds");
    add_common(sweep, sweep_f);

    auto* gen = app.add_subcommand("gen-dataset", "Roll out the behavior policy into an offline dataset");
    add_common(gen, gen_f);
    std::optional<std::size_t> gen_size;
    gen->add_option("--size", gen_size, "Number of transitions");

    auto* sample = app.add_subcommand("sample", "Draw actions from a policy head as CSV");
    add_common(sample, sample_f);
    std::size_t sample_count = 1000;
    std::string sample_raw;
    std::optional<double> sample_q;
    sample->add_option("--count", sample_count, "Number of draws");
    sample->add_option("--raw", sample_raw, "Comma-separated raw head outputs (default all zero)");
    sample->add_option("--q", sample_q, "Entropic index for q_gaussian");

    auto* validate = app.add_subcommand("validate", "Run the numerical self-checks");
    std::vector<std::string> suites;
    std::optional<std::uint64_t> validate_seed;
    std::string validate_out;
    validate->add_option("suites", suites, "math, density, gradient, sampler, sparsemax, equivalence, critic");
    validate->add_option("--seed", validate_seed, "Oracle seed");
    validate->add_option("--out", validate_out, "Directory for validation.csv");

    auto* agg = app.add_subcommand("aggregate", "Mean and standard error per step across seeds");
    std::vector<std::string> agg_dirs;
    std::string agg_out;
    agg->add_option("runs", agg_dirs, "Run directories or eval.csv files")->required();
    agg->add_option("--out", agg_out, "Directory for summary.csv (default stdout)");

    auto* plot = app.add_subcommand("plot-data", "Smoothed per-curve CSVs for external plotting");
    std::vector<std::string> plot_dirs;
    std::string plot_out;
    std::size_t window = 10;
    plot->add_option("runs", plot_dirs, "One run directory per curve")->required();
    plot->add_option("--out", plot_out, "Output directory")->required();
    plot->add_option("--window", window, "Trailing moving-average window")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*train) return cmd_train(train_f);
        if (*sweep) return cmd_sweep(sweep_f);
        if (*gen) return cmd_gen_dataset(gen_f, gen_size);
        if (*sample) return cmd_sample(sample_f, sample_count, sample_raw, sample_q);
        if (*validate) return cmd_validate(suites, validate_seed, validate_out);
        if (*agg) return cmd_aggregate(agg_dirs, agg_out);
        if (*plot) return cmd_plot_data(plot_dirs, plot_out, window);
    } catch (const ConfigError& e) {
        std::cerr << "qexp: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "qexp: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
