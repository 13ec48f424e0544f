#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streampca/config.hpp"
#include "streampca/evaluation.hpp"
#include "streampca/learners.hpp"
#include "streampca/stream_model.hpp"

namespace streampca {

// Online protocol seen by the experiment driver. The driver reads
// prediction() and planned_eta() strictly before calling observe() on a
// block, so implementations may assume predictions are committed before the
// block's contents exist from their point of view.
class OnlineLearner {
 public:
  virtual ~OnlineLearner() = default;
  virtual const Vector& prediction() const = 0;
  // Step size the next observe() will apply; 0 for non-learning baselines.
  virtual double planned_eta() const = 0;
  virtual void observe(const Block& block) = 0;
  // Rank-one certificate of the most recent observe(), for learners that
  // emit one.
  virtual std::optional<bool> last_certificate() const = 0;
};

// hp is validated for learning kinds and ignored for LearnerKind::fixed.
std::unique_ptr<OnlineLearner> make_online_learner(LearnerKind kind,
                                                   const Vector& w0,
                                                   const HyperParams& hp);

struct DriveOptions {
  // Alignment reference; when set, every block's diagnostics carry the
  // squared overlap of the prediction with it.
  const Vector* spike = nullptr;
  // Shared n -> top-eigenvalue cache. Valid only across learners that are
  // fed byte-identical records in identical order.
  std::map<std::int64_t, double>* prefix_cache = nullptr;
  // Accumulates wall-clock seconds spent inside observe().
  double* observe_seconds = nullptr;
};

// Feeds floor(|records| / block_len) consecutive blocks through the learner,
// reading the prediction before each block is exposed, and returns the
// resulting ledger. Leftover records that do not fill a block are dropped.
RegretLedger drive_learner(OnlineLearner& learner,
                           std::span<const StreamRecord> records,
                           std::int64_t block_len, const DriveOptions& opt = {});

// Replicate-aggregated results for one learner, on the block-boundary grid
// shared by all learners of the run.
struct LearnerReport {
  std::string name;
  std::vector<std::int64_t> grid;
  std::vector<double> avg_regret_mean;
  std::vector<double> avg_regret_stderr;
  std::vector<double> alignment_mean;    // empty when no ground truth is known
  std::vector<double> rank_one_ok_rate;  // running ok fraction; empty when unflagged
  double final_avg_regret = 0.0;
  double final_stderr = 0.0;
  std::optional<double> rank_one_error_rate;  // mean per-replicate error rate
  double steps_per_sec = 0.0;
};

struct RunResult {
  std::vector<LearnerReport> learners;
  std::vector<std::string> warnings;
  std::int64_t records_per_replicate = 0;  // records streamed past warm-up
  int replicates = 0;
};

// Runs cfg.replicates independent streams (replicate r is seeded with
// base_seed + r), warm-starts every learner from the held-out prefix, drives
// all learners over identical records, and aggregates. Deterministic given
// cfg, including under run.threads > 1.
RunResult run_experiment(const ExperimentConfig& cfg);

// Same, but every replicate replays the given records instead of sampling
// fresh ones. Theorem hyperparameter modes need a generative model and are
// rejected here; alignment traces are absent for the same reason.
RunResult run_experiment(const ExperimentConfig& cfg,
                         const std::vector<StreamRecord>& stream);

// The exact record sequence replicate `replicate` of run_experiment(cfg)
// consumes (warm-start prefix included). Lets a saved stream reproduce a run.
std::vector<StreamRecord> build_replicate_stream(const ExperimentConfig& cfg,
                                                 int replicate);

struct ReportPaths {
  std::vector<std::string> curve_files;
  std::string summary_file;
  std::string result_json;
};

// Writes curve_<learner>.csv per learner, summary.csv, and result.json into
// out_dir (created if missing). Any non-finite number is refused with
// DiagnosticsError naming the field. LF line endings, C locale numbers.
ReportPaths write_report(const RunResult& result, const std::string& out_dir);

// Round-trip of the result.json written by write_report.
RunResult read_result_json(const std::string& path);

// The summary.csv portion of write_report, alone.
void write_summary_csv(const RunResult& result, const std::string& path);

}  // namespace streampca
