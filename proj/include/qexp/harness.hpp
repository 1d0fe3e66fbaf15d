#pragma once

// Training runs, sweeps, dataset generation and the CSV formats around them.
//
// Run directory layout (one per seed):
//   <out>/seed_<n>/config.ini      effective configuration
//   <out>/seed_<n>/eval.csv        step,seed,return,seconds
//   <out>/seed_<n>/actor_final.ckpt
//   <out>/seed_<n>/actor_<step>.ckpt   when checkpoint_interval > 0
// plus <out>/eval.csv with every seed's rows in seed-list order.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qexp/agents.hpp"
#include "qexp/config.hpp"
#include "qexp/dataset.hpp"
#include "qexp/envs.hpp"

namespace qexp {

struct EvalRecord {
    std::int64_t step = 0;
    std::uint64_t seed = 0;
    double ret = 0.0;
    /// Wall-clock seconds since the run started; excluded from reproducibility.
    double seconds = 0.0;
};

/// Header "step,seed,return,seconds".
void write_eval_csv(std::ostream& out, const std::vector<EvalRecord>& records);
/// Throws std::runtime_error on a wrong header or malformed row.
std::vector<EvalRecord> read_eval_csv(std::istream& in);
std::vector<EvalRecord> read_eval_csv(const std::filesystem::path& path);

/// Mean undiscounted return of `episodes` rollouts. The actor is only read.
double evaluate_policy(const Actor& actor, Environment& env, int episodes, bool deterministic, Rng& rng);

/// Trains one seed and writes its run directory. Deterministic in (config,
/// seed) apart from the seconds column.
std::vector<EvalRecord> train_seed(const ExperimentConfig& config, std::uint64_t seed,
                                   const std::filesystem::path& run_dir);

/// Every seed in config.seeds, in parallel. Returns rows in seed-list order.
std::vector<EvalRecord> run_train(const ExperimentConfig& config);

/// Mean return over all evaluation points and seeds.
double area_under_curve(std::span<const EvalRecord> records);

/// Index of the largest finite value; ties go to the lowest index. Throws
/// std::runtime_error when no value is finite.
std::size_t select_best(std::span<const double> scores);

struct SweepPoint {
    double critic_lr = 0.0;
    double actor_lr_multiplier = 0.0;
    double tau = 0.0;
};

/// Cartesian grid, critic_lr outermost and tau innermost, in listed order.
std::vector<SweepPoint> sweep_grid(const SweepSpec& spec);

struct SweepReport {
    std::vector<SweepPoint> points;
    /// NaN for a point whose runs failed.
    std::vector<double> aucs;
    std::vector<std::string> errors;
    std::size_t best = 0;
    std::vector<EvalRecord> best_records;
};

/// Runs every grid point on the sweep seeds, picks the best AUC and re-runs
/// it on the best-run seeds. Writes <out>/point_<i>/..., <out>/best/... and
/// <out>/sweep_report.csv. A failing point is recorded and skipped.
SweepReport run_sweep(const ExperimentConfig& config);

void write_sweep_report(std::ostream& out, const SweepReport& report);

struct SummaryRow {
    std::int64_t step = 0;
    double mean = 0.0;
    /// Sample standard deviation over sqrt(n); 0 for a single run.
    double std_error = 0.0;
    std::size_t n = 0;
};

/// Groups records by step across seeds.
std::vector<SummaryRow> aggregate(std::span<const EvalRecord> records);
/// Header "step,mean,stderr,n".
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// Mean of the last `window` values ending at each index (fewer at the start).
std::vector<double> trailing_average(std::span<const double> values, std::size_t window);
/// Header "step,mean,stderr,n,smoothed".
void write_plot_csv(std::ostream& out, const std::vector<SummaryRow>& rows, std::size_t window);

/// eval.csv rows below a run directory: <dir>/eval.csv if present, otherwise
/// every <dir>/seed_*/eval.csv.
std::vector<EvalRecord> collect_records(const std::filesystem::path& dir);

/// Dataset from the configured behavior policy: the checkpointed actor in
/// config.behavior_checkpoint, or uniform random actions when empty.
Dataset generate_dataset(const ExperimentConfig& config, std::uint64_t seed);

/// QEXP_THREADS if set and positive, else the hardware concurrency, capped at jobs.
std::size_t worker_count(std::size_t jobs);

/// Calls fn(i) for i in [0, n) on worker_count(n) threads. Rethrows the
/// first exception after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace qexp
