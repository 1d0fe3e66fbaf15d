#include "qexp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "qexp/replay.hpp"
#include "qexp/samplers.hpp"

namespace qexp {
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kEvalHeader = "step,seed,return,seconds";

template <class T>
T parse_field(std::string_view s, std::size_t line) {
    T value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw std::runtime_error("eval csv line " + std::to_string(line) + ": bad field '" + std::string(s) + "'");
    }
    return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<double> uniform_action(const PolicyHeadConfig& head, Rng& rng) {
    std::vector<double> a(head.action_dim);
    for (int i = 0; i < head.action_dim; ++i) a[i] = rng.uniform(head.action_low[i], head.action_high[i]);
    return a;
}

Dataset load_offline_data(const ExperimentConfig& config, const Environment& env) {
    if (config.dataset_path.empty()) throw std::runtime_error("offline run without [dataset] path");
    Dataset data = read_dataset(config.dataset_path);
    if (data.env_name != env.name() || data.state_dim != env.observation_dim() ||
        data.action_dim != env.action_dim()) {
        throw std::runtime_error("dataset " + config.dataset_path + " was not generated on " + config.env);
    }
    if (data.transitions.empty()) throw std::runtime_error("dataset " + config.dataset_path + " is empty");
    return data;
}

} // namespace

void write_eval_csv(std::ostream& out, const std::vector<EvalRecord>& records) {
    out << kEvalHeader << '\n';
    for (const auto& r : records) {
        out << r.step << ',' << r.seed << ',' << format_double(r.ret) << ',' << format_double(r.seconds) << '\n';
    }
}

std::vector<EvalRecord> read_eval_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("eval csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kEvalHeader) throw std::runtime_error("eval csv: expected header " + std::string(kEvalHeader));
    std::vector<EvalRecord> out;
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != 4) throw std::runtime_error("eval csv line " + std::to_string(n) + ": expected 4 fields");
        EvalRecord r;
        r.step = parse_field<std::int64_t>(f[0], n);
        r.seed = parse_field<std::uint64_t>(f[1], n);
        r.ret = parse_field<double>(f[2], n);
        r.seconds = parse_field<double>(f[3], n);
        if (!std::isfinite(r.ret)) throw std::runtime_error("eval csv line " + std::to_string(n) + ": non-finite return");
        out.push_back(r);
    }
    return out;
}

std::vector<EvalRecord> read_eval_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_eval_csv(in);
}

double evaluate_policy(const Actor& actor, Environment& env, int episodes, bool deterministic, Rng& rng) {
    double total = 0.0;
    for (int e = 0; e < episodes; ++e) {
        auto obs = env.reset(rng);
        while (true) {
            const auto out = actor.forward(obs);
            const auto a = deterministic ? policy_mean_action(actor.head(), out) : policy_sample(actor.head(), out, rng);
            const StepResult r = env.step(a);
            total += r.reward;
            if (r.terminated || r.truncated) break;
            obs = r.observation;
        }
    }
    return total / episodes;
}

std::vector<EvalRecord> train_seed(const ExperimentConfig& base, std::uint64_t seed, const fs::path& run_dir) {
    ExperimentConfig config = base;
    config.seeds = {seed};
    bind_environment(config);
    config.validate();

    fs::create_directories(run_dir);
    {
        std::ostringstream text;
        write_config(text, config);
        write_text(run_dir / "config.ini", text.str());
    }

    const auto start = std::chrono::steady_clock::now();
    auto env = make_env(config.env);
    auto eval_env = make_env(config.env);
    Rng init_rng = Rng::derive(0, seed, StreamPurpose::Init);
    Rng actor_rng = Rng::derive(0, seed, StreamPurpose::Actor);
    Rng env_rng = Rng::derive(0, seed, StreamPurpose::Environment);
    Rng eval_rng = Rng::derive(0, seed, StreamPurpose::Evaluation);
    Rng replay_rng = Rng::derive(0, seed, StreamPurpose::Replay);

    const bool offline = config.agent.offline;
    Dataset data;
    std::size_t capacity = config.buffer_capacity;
    if (offline) {
        data = load_offline_data(config, *env);
        capacity = data.transitions.size();
    }
    auto agent = make_agent(config.agent, config.policy, env->observation_dim(), capacity, init_rng);
    for (const auto& t : data.transitions) agent->buffer().add(t);
    data.transitions.clear();

    std::vector<EvalRecord> records;
    std::vector<double> obs;
    bool need_reset = true;
    for (std::int64_t step = 1; step <= config.total_steps; ++step) {
        if (!offline) {
            if (need_reset) {
                obs = env->reset(env_rng);
                need_reset = false;
            }
            auto action = step <= config.warmup_steps ? uniform_action(config.policy, actor_rng)
                                                      : agent->act(obs, actor_rng);
            StepResult r = env->step(action);
            Transition t;
            t.state = obs;
            t.action = std::move(action);
            t.reward = r.reward;
            t.next_state = r.observation;
            t.terminated = r.terminated;
            agent->buffer().add(t);
            obs = std::move(r.observation);
            need_reset = r.terminated || r.truncated;
        }
        if (agent->buffer().size() >= config.agent.batch_size) agent->update(replay_rng);

        if (config.checkpoint_interval > 0 && step % config.checkpoint_interval == 0) {
            save_actor((run_dir / ("actor_" + std::to_string(step) + ".ckpt")).string(), agent->actor());
        }
        if (step % config.eval_interval == 0) {
            EvalRecord rec;
            rec.step = step;
            rec.seed = seed;
            rec.ret = evaluate_policy(agent->actor(), *eval_env, config.eval_episodes, config.eval_deterministic,
                                      eval_rng);
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            records.push_back(rec);
            if (config.stop_return && rec.ret > *config.stop_return) break;
        }
    }

    save_actor((run_dir / "actor_final.ckpt").string(), agent->actor());
    std::ostringstream csv;
    write_eval_csv(csv, records);
    write_text(run_dir / "eval.csv", csv.str());
    return records;
}

std::vector<EvalRecord> run_train(const ExperimentConfig& config) {
    config.validate();
    const fs::path out(config.out_dir);
    fs::create_directories(out);
    {
        std::ostringstream text;
        write_config(text, config);
        write_text(out / "config.ini", text.str());
    }
    std::vector<std::vector<EvalRecord>> per_seed(config.seeds.size());
    parallel_for(config.seeds.size(), [&](std::size_t i) {
        const auto seed = config.seeds[i];
        per_seed[i] = train_seed(config, seed, out / ("seed_" + std::to_string(seed)));
    });
    std::vector<EvalRecord> all;
    for (const auto& r : per_seed) all.insert(all.end(), r.begin(), r.end());
    std::ostringstream csv;
    write_eval_csv(csv, all);
    write_text(out / "eval.csv", csv.str());
    return all;
}

double area_under_curve(std::span<const EvalRecord> records) {
    if (records.empty()) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (const auto& r : records) sum += r.ret;
    return sum / static_cast<double>(records.size());
}

std::size_t select_best(std::span<const double> scores) {
    std::size_t best = scores.size();
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i])) continue;
        if (best == scores.size() || scores[i] > scores[best]) best = i;
    }
    if (best == scores.size()) throw std::runtime_error("no sweep point produced a finite score");
    return best;
}

std::vector<SweepPoint> sweep_grid(const SweepSpec& spec) {
    std::vector<SweepPoint> grid;
    for (double lr : spec.critic_lrs) {
        for (double mult : spec.actor_lr_multipliers) {
            for (double tau : spec.taus) grid.push_back({lr, mult, tau});
        }
    }
    return grid;
}

SweepReport run_sweep(const ExperimentConfig& config) {
    config.validate();
    if (config.total_steps % config.sweep.eval_interval != 0) {
        throw ConfigError("sweep eval_interval must divide steps");
    }
    const fs::path out(config.out_dir);
    fs::create_directories(out);

    SweepReport report;
    report.points = sweep_grid(config.sweep);
    const std::size_t n_points = report.points.size();
    const std::size_t n_seeds = config.sweep.sweep_seeds.size();

    auto point_config = [&](std::size_t p) {
        ExperimentConfig c = config;
        c.agent.critic_lr = report.points[p].critic_lr;
        c.agent.actor_lr_multiplier = report.points[p].actor_lr_multiplier;
        c.agent.tau = report.points[p].tau;
        return c;
    };

    std::vector<std::vector<EvalRecord>> results(n_points * n_seeds);
    std::vector<std::string> job_errors(n_points * n_seeds);
    parallel_for(n_points * n_seeds, [&](std::size_t job) {
        const std::size_t p = job / n_seeds;
        const auto seed = config.sweep.sweep_seeds[job % n_seeds];
        ExperimentConfig c = point_config(p);
        c.eval_interval = config.sweep.eval_interval;
        c.eval_episodes = config.sweep.eval_episodes;
        c.stop_return.reset();
        try {
            results[job] = train_seed(c, seed, out / ("point_" + std::to_string(p)) / ("seed_" + std::to_string(seed)));
        } catch (const std::exception& e) {
            job_errors[job] = e.what();
        }
    });

    report.aucs.assign(n_points, std::numeric_limits<double>::quiet_NaN());
    report.errors.assign(n_points, "");
    for (std::size_t p = 0; p < n_points; ++p) {
        std::vector<EvalRecord> all;
        for (std::size_t s = 0; s < n_seeds; ++s) {
            const std::size_t job = p * n_seeds + s;
            if (!job_errors[job].empty()) {
                report.errors[p] = job_errors[job];
                break;
            }
            all.insert(all.end(), results[job].begin(), results[job].end());
        }
        if (report.errors[p].empty()) report.aucs[p] = area_under_curve(all);
    }
    report.best = select_best(report.aucs);

    ExperimentConfig best = point_config(report.best);
    best.seeds = config.sweep.best_seeds;
    best.out_dir = (out / "best").string();
    report.best_records = run_train(best);

    std::ostringstream csv;
    write_sweep_report(csv, report);
    write_text(out / "sweep_report.csv", csv.str());
    return report;
}

void write_sweep_report(std::ostream& out, const SweepReport& report) {
    out << "point,critic_lr,actor_lr_multiplier,tau,auc,best,error\n";
    for (std::size_t p = 0; p < report.points.size(); ++p) {
        std::string err = p < report.errors.size() ? report.errors[p] : "";
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        const auto& pt = report.points[p];
        out << p << ',' << format_double(pt.critic_lr) << ',' << format_double(pt.actor_lr_multiplier) << ','
            << format_double(pt.tau) << ',' << format_double(report.aucs[p]) << ',' << (p == report.best ? 1 : 0)
            << ',' << err << '\n';
    }
}

std::vector<SummaryRow> aggregate(std::span<const EvalRecord> records) {
    std::map<std::int64_t, std::vector<double>> by_step;
    for (const auto& r : records) by_step[r.step].push_back(r.ret);
    std::vector<SummaryRow> rows;
    for (const auto& [step, values] : by_step) {
        SummaryRow row;
        row.step = step;
        row.n = values.size();
        double sum = 0.0;
        for (double v : values) sum += v;
        row.mean = sum / static_cast<double>(row.n);
        if (row.n > 1) {
            double ss = 0.0;
            for (double v : values) ss += (v - row.mean) * (v - row.mean);
            row.std_error = std::sqrt(ss / static_cast<double>(row.n - 1)) / std::sqrt(static_cast<double>(row.n));
        }
        rows.push_back(row);
    }
    return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "step,mean,stderr,n\n";
    for (const auto& r : rows) {
        out << r.step << ',' << format_double(r.mean) << ',' << format_double(r.std_error) << ',' << r.n << '\n';
    }
}

std::vector<double> trailing_average(std::span<const double> values, std::size_t window) {
    if (window == 0) throw std::invalid_argument("trailing_average: window must be positive");
    std::vector<double> out(values.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sum += values[i];
        if (i >= window) sum -= values[i - window];
        out[i] = sum / static_cast<double>(std::min(i + 1, window));
    }
    return out;
}

void write_plot_csv(std::ostream& out, const std::vector<SummaryRow>& rows, std::size_t window) {
    std::vector<double> means;
    for (const auto& r : rows) means.push_back(r.mean);
    const auto smooth = trailing_average(means, window);
    out << "step,mean,stderr,n,smoothed\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out << rows[i].step << ',' << format_double(rows[i].mean) << ',' << format_double(rows[i].std_error) << ','
            << rows[i].n << ',' << format_double(smooth[i]) << '\n';
    }
}

std::vector<EvalRecord> collect_records(const fs::path& dir) {
    if (fs::is_regular_file(dir)) return read_eval_csv(dir);
    if (fs::is_regular_file(dir / "eval.csv")) return read_eval_csv(dir / "eval.csv");
    if (!fs::is_directory(dir)) throw std::runtime_error("no such run directory " + dir.string());
    std::vector<fs::path> seed_dirs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory() && entry.path().filename().string().starts_with("seed_") &&
            fs::is_regular_file(entry.path() / "eval.csv")) {
            seed_dirs.push_back(entry.path());
        }
    }
    if (seed_dirs.empty()) throw std::runtime_error("no eval.csv under " + dir.string());
    std::sort(seed_dirs.begin(), seed_dirs.end());
    std::vector<EvalRecord> all;
    for (const auto& d : seed_dirs) {
        const auto r = read_eval_csv(d / "eval.csv");
        all.insert(all.end(), r.begin(), r.end());
    }
    return all;
}

Dataset generate_dataset(const ExperimentConfig& base, std::uint64_t seed) {
    ExperimentConfig config = base;
    bind_environment(config);
    auto env = make_env(config.env);
    Rng rng = Rng::derive(0, seed, StreamPurpose::Dataset);

    BehaviorPolicy behavior;
    std::optional<Actor> actor;
    if (!config.behavior_checkpoint.empty()) {
        actor.emplace(load_actor(config.behavior_checkpoint));
        if (actor->net().input_size() != static_cast<std::size_t>(env->observation_dim()) ||
            actor->head().action_dim != env->action_dim()) {
            throw std::runtime_error("behavior checkpoint does not fit " + config.env);
        }
        const bool deterministic = config.behavior_deterministic;
        behavior = [&actor, deterministic](std::span<const double> s, Rng& r) {
            const auto out = actor->forward(s);
            if (deterministic) {
                return std::pair{policy_mean_action(actor->head(), out), std::numeric_limits<double>::quiet_NaN()};
            }
            auto a = policy_sample(actor->head(), out, r);
            const double lp = policy_log_prob(actor->head(), out, a);
            return std::pair{std::move(a), lp};
        };
    } else {
        double log_volume = 0.0;
        for (int i = 0; i < config.policy.action_dim; ++i) {
            log_volume += std::log(config.policy.action_high[i] - config.policy.action_low[i]);
        }
        behavior = [&config, log_volume](std::span<const double>, Rng& r) {
            return std::pair{uniform_action(config.policy, r), -log_volume};
        };
    }
    return generate_offline_dataset(*env, behavior, config.dataset_size, rng);
}

std::size_t worker_count(std::size_t jobs) {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("QEXP_THREADS")) {
        std::size_t v = 0;
        const std::string_view s(env);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc() && ptr == s.data() + s.size() && v > 0) n = v;
    }
    return std::max<std::size_t>(1, std::min(n, jobs));
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t workers = worker_count(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                const std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> threads;
        for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
    }
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace qexp
