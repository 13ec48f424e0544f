#include "streampca/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>
#include <utility>

#include "streampca/errors.hpp"

namespace streampca {

namespace {

class FixedLearner final : public OnlineLearner {
 public:
  explicit FixedLearner(Vector w0) : w_(std::move(w0)) {}
  const Vector& prediction() const override { return w_; }
  double planned_eta() const override { return 0.0; }
  void observe(const Block&) override {}
  std::optional<bool> last_certificate() const override { return std::nullopt; }

 private:
  Vector w_;
};

class NonconvexLearner final : public OnlineLearner {
 public:
  NonconvexLearner(const Vector& w0, HyperParams hp)
      : state_(make_state(LearnerKind::nonconvex_oga, w0)), hp_(std::move(hp)) {}
  const Vector& prediction() const override { return state_.w_hat; }
  double planned_eta() const override { return hp_.eta_at(state_.t + 1); }
  void observe(const Block& block) override {
    state_ = nonconvex_oga_step(state_, block, hp_.eta_at(state_.t + 1), hp_.alpha);
  }
  std::optional<bool> last_certificate() const override { return std::nullopt; }

 private:
  LearnerState state_;
  HyperParams hp_;
};

class RankOneLearner final : public OnlineLearner {
 public:
  RankOneLearner(const Vector& w0, HyperParams hp)
      : state_(make_state(LearnerKind::rank_one_oga, w0)), hp_(std::move(hp)) {}
  const Vector& prediction() const override { return state_.w_hat; }
  double planned_eta() const override { return hp_.eta_at(state_.t + 1); }
  void observe(const Block& block) override {
    RankOneStep step =
        rank_one_oga_step(state_, block, hp_.eta_at(state_.t + 1), hp_.alpha);
    state_ = std::move(step.state);
    certificate_ = step.certificate;
  }
  std::optional<bool> last_certificate() const override { return certificate_; }

 private:
  LearnerState state_;
  HyperParams hp_;
  std::optional<bool> certificate_;
};

class ConvexLearner final : public OnlineLearner {
 public:
  ConvexLearner(const Vector& w0, HyperParams hp)
      : state_(make_state(LearnerKind::convex_oga, w0)), hp_(std::move(hp)) {}
  const Vector& prediction() const override { return state_.w_hat; }
  double planned_eta() const override { return hp_.eta_at(state_.t + 1); }
  void observe(const Block& block) override {
    state_ = convex_oga_step(state_, block, hp_.eta_at(state_.t + 1), hp_.alpha);
  }
  std::optional<bool> last_certificate() const override { return std::nullopt; }

 private:
  LearnerState state_;
  HyperParams hp_;
};

struct ResolvedLearner {
  LearnerConfig lc;  // block_len holds the effective (possibly derived) value
  HyperParams hp;
};

struct ReplicateRow {
  std::vector<double> regret;
  std::vector<double> alignment;
  std::vector<double> ok_rate;
  std::optional<double> error_rate;
  std::int64_t blocks = 0;
  double seconds = 0.0;
};

std::string good_proj_failures(const GoodProjReport& rep) {
  std::string out;
  auto add = [&](bool ok, const char* name, double margin) {
    if (ok) return;
    if (!out.empty()) out += ", ";
    out += name;
    out += " (margin ";
    out += std::to_string(margin);
    out += ")";
  };
  add(rep.epsilon_ok, "epsilon", rep.epsilon_margin);
  add(rep.eta_ok, "eta", rep.eta_margin);
  add(rep.gamma_ok, "gamma", rep.gamma_margin);
  add(rep.alpha_ok, "alpha", rep.alpha_margin);
  add(rep.init_ok, "init_alignment", rep.init_margin);
  return out;
}

ReplicateRow extract_row(const RegretLedger& led,
                         const std::vector<std::int64_t>& grid, double seconds) {
  ReplicateRow row;
  row.blocks = static_cast<std::int64_t>(led.per_block.size());
  row.seconds = seconds;
  row.regret.reserve(grid.size());
  std::int64_t flagged = 0, failed = 0;
  size_t gi = 0;
  for (const DiagnosticsRecord& rec : led.per_block) {
    if (rec.rank_one_ok) {
      ++flagged;
      if (!*rec.rank_one_ok) ++failed;
    }
    if (gi < grid.size() && rec.prefix_n == grid[gi]) {
      row.regret.push_back((rec.prefix_top_eigenvalue - rec.prefix_payoff) /
                           static_cast<double>(rec.prefix_n));
      if (rec.alignment) row.alignment.push_back(*rec.alignment);
      if (flagged > 0) {
        row.ok_rate.push_back(1.0 - static_cast<double>(failed) /
                                        static_cast<double>(flagged));
      }
      ++gi;
    }
  }
  if (gi != grid.size()) {
    throw DiagnosticsError("curve grid does not align with recorded block boundaries");
  }
  if (!row.alignment.empty() && row.alignment.size() != grid.size()) {
    throw DiagnosticsError("alignment trace must cover every grid boundary");
  }
  if (!row.ok_rate.empty() && row.ok_rate.size() != grid.size()) {
    throw DiagnosticsError("rank-one flags must start at the first block");
  }
  if (flagged > 0) {
    row.error_rate = static_cast<double>(failed) / static_cast<double>(flagged);
  }
  return row;
}

double mean_of(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double stderr_of(const std::vector<double>& xs, double mean) {
  const size_t n = xs.size();
  if (n < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (static_cast<double>(n) * static_cast<double>(n - 1)));
}

struct ReplicateStream {
  std::vector<StreamRecord> records;
  Vector spike;
};

// Seed layout per replicate: base_seed + r, then substream 0 drives the
// random basis, 1 the sample generator, 2 the adversary, 3 the fallback
// adversary direction. generate and run share this path byte for byte.
ReplicateStream make_replicate_stream(const ExperimentConfig& cfg, int rep) {
  const Eigen::Index d = cfg.d;
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(rep);
  SpikedModel model =
      cfg.random_basis
          ? SpikedModel::with_random_basis(cfg.model_eigenvalues, cfg.model_kind,
                                           derive_seed(seed, 0))
          : SpikedModel(cfg.model_eigenvalues, Matrix::Identity(d, d),
                        cfg.model_kind);
  AdversarySpec adv = cfg.adversary;
  adv.seed = derive_seed(seed, 2);
  if (adv.kind == AdversaryKind::fixed_vector && adv.direction.size() == 0) {
    std::mt19937_64 g(derive_seed(seed, 3));
    std::normal_distribution<double> n01(0.0, 1.0);
    Vector dir(d);
    for (Eigen::Index i = 0; i < d; ++i) dir[i] = n01(g);
    adv.direction = dir;
  }
  StreamGenerator gen(model, adv, derive_seed(seed, 1));
  ReplicateStream out;
  out.records = std::move(gen.next_block(static_cast<long>(cfg.n_samples)).records);
  out.spike = model.spike();
  return out;
}

RunResult run_impl(const ExperimentConfig& cfg,
                   const std::vector<StreamRecord>* fixed_stream) {
  validate_config(cfg);
  const std::int64_t warm = warm_sample_count(cfg);
  const std::int64_t n_learn = cfg.n_samples - warm;
  if (n_learn < 1) {
    throw InsufficientData(
        "run_experiment: warm-start prefix leaves no records to stream");
  }
  if (fixed_stream) {
    if (static_cast<std::int64_t>(fixed_stream->size()) < cfg.n_samples) {
      throw InsufficientData("run_experiment: stream holds " +
                             std::to_string(fixed_stream->size()) +
                             " records but run.n = " +
                             std::to_string(cfg.n_samples));
    }
    if (fixed_stream->front().x.size() != cfg.d) {
      throw InvalidInput("run_experiment: stream dimension does not match model.d");
    }
  }

  RunResult result;
  result.replicates = cfg.replicates;
  result.records_per_replicate = n_learn;
  if (fixed_stream && cfg.replicates > 1) {
    result.warnings.push_back(
        "replicates replay the same loaded stream; standard errors reflect no "
        "sampling variation");
  }

  // Model statistics are basis-independent, so one probe model serves every
  // replicate for derivations and the gap check.
  std::optional<ModelStats> stats;
  std::optional<double> eps_avail;
  if (!fixed_stream) {
    SpikedModel probe(cfg.model_eigenvalues, Matrix::Identity(cfg.d, cfg.d),
                      cfg.model_kind);
    // The per-replicate random direction is not drawn yet; the gap math only
    // depends on the magnitude, so any unit placeholder works for the check.
    AdversarySpec probe_adv = cfg.adversary;
    if (probe_adv.kind == AdversaryKind::fixed_vector &&
        probe_adv.direction.size() == 0) {
      probe_adv.direction = Vector::Unit(cfg.d, 0);
    }
    stats = model_stats(probe, probe_adv);
    ModelCheckReport check = validate_model(probe, probe_adv);
    if (check.gap_condition_ok) {
      eps_avail = check.epsilon_available;
    } else {
      result.warnings.push_back("model gap condition fails: slack = " +
                                std::to_string(check.slack) +
                                "; convergence guarantees do not apply");
    }
  }

  std::vector<ResolvedLearner> plan;
  for (const LearnerConfig& lc : cfg.learners) {
    ResolvedLearner r;
    r.lc = lc;
    if (lc.kind == LearnerKind::fixed) {
      r.hp.block_len = lc.block_len;
    } else if (lc.mode == HyperMode::manual) {
      r.hp.block_len = lc.block_len;
      r.hp.schedule = EtaSchedule::constant;
      r.hp.eta = lc.eta;
      r.hp.alpha = lc.alpha;
      if (stats) {
        const double rv = stats->radius + stats->v_bound;
        r.hp.rv2 = rv * rv;
      }
    } else {
      if (!stats) {
        throw InvalidInput("learner " + lc.name +
                           ": theorem modes need a generative model, not a "
                           "loaded stream");
      }
      r.hp = (lc.mode == HyperMode::theorem1 ? derive_theorem1_params
                                             : derive_theorem2_params)(
          *stats, n_learn, cfg.d, cfg.p);
      if (lc.block_len != 1 && lc.block_len != r.hp.block_len) {
        result.warnings.push_back(
            "learner " + lc.name + ": block_len " + std::to_string(lc.block_len) +
            " overridden by the derived value " + std::to_string(r.hp.block_len));
      }
      r.lc.block_len = r.hp.block_len;
    }
    plan.push_back(std::move(r));
  }

  // Shared reporting grid: every common multiple of the block lengths.
  std::int64_t lcm_len = 1;
  for (const ResolvedLearner& r : plan) {
    if (n_learn / r.lc.block_len < 1) {
      throw InsufficientData("learner " + r.lc.name + ": block length " +
                             std::to_string(r.lc.block_len) + " exceeds the " +
                             std::to_string(n_learn) + " streamed records");
    }
    const std::int64_t g = std::gcd(lcm_len, r.lc.block_len);
    const std::int64_t factor = lcm_len / g;
    if (factor > n_learn / r.lc.block_len) {
      throw InsufficientData(
          "run_experiment: learner block lengths share no boundary within the "
          "stream");
    }
    lcm_len = factor * r.lc.block_len;
  }
  std::vector<std::int64_t> grid(static_cast<size_t>(n_learn / lcm_len));
  for (size_t i = 0; i < grid.size(); ++i) {
    grid[i] = static_cast<std::int64_t>(i + 1) * lcm_len;
  }

  const Eigen::Index d = cfg.d;
  auto run_replicate = [&](int rep, ReplicateRow* rows,
                           std::vector<std::string>* warn) {
    std::vector<StreamRecord> storage;
    const StreamRecord* data = nullptr;
    std::optional<Vector> spike;
    if (fixed_stream) {
      data = fixed_stream->data();
    } else {
      ReplicateStream rs = make_replicate_stream(cfg, rep);
      storage = std::move(rs.records);
      data = storage.data();
      spike = std::move(rs.spike);
    }

    Vector w0;
    if (warm >= 1) {
      std::vector<Vector> prefix;
      prefix.reserve(static_cast<size_t>(warm));
      for (std::int64_t i = 0; i < warm; ++i) {
        prefix.push_back(data[i].split_known ? data[i].q : data[i].x);
      }
      w0 = warm_start(prefix, warm);
    } else {
      w0 = Vector::Zero(d);
      w0[0] = 1.0;
    }

    std::optional<double> align0;
    if (spike) {
      const double a = w0.dot(*spike);
      align0 = std::min(1.0, a * a);
    }

    for (const ResolvedLearner& r : plan) {
      if (r.lc.kind == LearnerKind::fixed) continue;
      if (r.lc.mode != HyperMode::manual) {
        GoodProjReport gp =
            good_proj_validate(r.hp, *stats, r.hp.epsilon_slack, *align0);
        if (!gp.overall_ok) {
          throw ModelViolation("replicate " + std::to_string(rep) + ", learner " +
                               r.lc.name +
                               ": derived parameters fail the "
                               "certified-projection conditions: " +
                               good_proj_failures(gp));
        }
      } else if (warn && stats && eps_avail && align0) {
        GoodProjReport gp = good_proj_validate(r.hp, *stats, *eps_avail, *align0);
        if (!gp.overall_ok) {
          warn->push_back("learner " + r.lc.name +
                          ": manual parameters fall outside the "
                          "certified-projection conditions: " +
                          good_proj_failures(gp));
        }
      }
    }

    std::span<const StreamRecord> tail(data + warm, static_cast<size_t>(n_learn));
    std::map<std::int64_t, double> cache;
    for (size_t i = 0; i < plan.size(); ++i) {
      const ResolvedLearner& r = plan[i];
      std::unique_ptr<OnlineLearner> learner =
          make_online_learner(r.lc.kind, w0, r.hp);
      double seconds = 0.0;
      DriveOptions opt;
      opt.spike = spike ? &*spike : nullptr;
      opt.prefix_cache = &cache;
      opt.observe_seconds = &seconds;
      RegretLedger led = drive_learner(*learner, tail, r.lc.block_len, opt);
      rows[i] = extract_row(led, grid, seconds);
    }
  };

  const int reps = cfg.replicates;
  std::vector<std::vector<ReplicateRow>> all(static_cast<size_t>(reps));
  for (auto& v : all) v.resize(plan.size());
  std::vector<std::string> rep0_warnings;

  const int workers = std::min(cfg.threads, reps);
  if (workers <= 1) {
    for (int rep = 0; rep < reps; ++rep) {
      run_replicate(rep, all[static_cast<size_t>(rep)].data(),
                    rep == 0 ? &rep0_warnings : nullptr);
    }
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto pump = [&]() {
      while (true) {
        const int rep = next.fetch_add(1);
        if (rep >= reps) return;
        try {
          run_replicate(rep, all[static_cast<size_t>(rep)].data(),
                        rep == 0 ? &rep0_warnings : nullptr);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(pump);
    for (std::thread& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  for (std::string& w : rep0_warnings) result.warnings.push_back(std::move(w));

  std::vector<double> scratch(static_cast<size_t>(reps));
  for (size_t li = 0; li < plan.size(); ++li) {
    LearnerReport rep;
    rep.name = plan[li].lc.name;
    rep.grid = grid;
    const bool has_align = !all[0][li].alignment.empty();
    const bool has_flags = !all[0][li].ok_rate.empty();
    for (int r = 0; r < reps; ++r) {
      const ReplicateRow& row = all[static_cast<size_t>(r)][li];
      if (row.alignment.empty() == has_align || row.ok_rate.empty() == has_flags) {
        throw DiagnosticsError("replicates disagree on which diagnostics exist");
      }
    }
    for (size_t gi = 0; gi < grid.size(); ++gi) {
      for (int r = 0; r < reps; ++r) {
        scratch[static_cast<size_t>(r)] = all[static_cast<size_t>(r)][li].regret[gi];
      }
      const double m = mean_of(scratch);
      rep.avg_regret_mean.push_back(m);
      rep.avg_regret_stderr.push_back(stderr_of(scratch, m));
      if (has_align) {
        for (int r = 0; r < reps; ++r) {
          scratch[static_cast<size_t>(r)] =
              all[static_cast<size_t>(r)][li].alignment[gi];
        }
        rep.alignment_mean.push_back(mean_of(scratch));
      }
      if (has_flags) {
        for (int r = 0; r < reps; ++r) {
          scratch[static_cast<size_t>(r)] =
              all[static_cast<size_t>(r)][li].ok_rate[gi];
        }
        rep.rank_one_ok_rate.push_back(mean_of(scratch));
      }
    }
    rep.final_avg_regret = rep.avg_regret_mean.back();
    rep.final_stderr = rep.avg_regret_stderr.back();
    if (has_flags) {
      double sum = 0.0;
      for (int r = 0; r < reps; ++r) {
        sum += all[static_cast<size_t>(r)][li].error_rate.value();
      }
      rep.rank_one_error_rate = sum / static_cast<double>(reps);
    }
    std::int64_t blocks = 0;
    double seconds = 0.0;
    for (int r = 0; r < reps; ++r) {
      blocks += all[static_cast<size_t>(r)][li].blocks;
      seconds += all[static_cast<size_t>(r)][li].seconds;
    }
    rep.steps_per_sec = static_cast<double>(blocks) / std::max(seconds, 1e-9);
    result.learners.push_back(std::move(rep));
  }
  return result;
}

}  // namespace

std::unique_ptr<OnlineLearner> make_online_learner(LearnerKind kind,
                                                   const Vector& w0,
                                                   const HyperParams& hp) {
  if (kind == LearnerKind::fixed) {
    return std::make_unique<FixedLearner>(make_state(kind, w0).w_hat);
  }
  hp.validate();
  switch (kind) {
    case LearnerKind::nonconvex_oga:
      return std::make_unique<NonconvexLearner>(w0, hp);
    case LearnerKind::rank_one_oga:
      return std::make_unique<RankOneLearner>(w0, hp);
    case LearnerKind::convex_oga:
      return std::make_unique<ConvexLearner>(w0, hp);
    default:
      throw InvalidInput("make_online_learner: unknown learner kind");
  }
}

RegretLedger drive_learner(OnlineLearner& learner,
                           std::span<const StreamRecord> records,
                           std::int64_t block_len, const DriveOptions& opt) {
  if (block_len < 1) {
    throw InvalidInput("drive_learner: block_len must be >= 1");
  }
  const std::int64_t steps = static_cast<std::int64_t>(records.size()) / block_len;
  RegretLedger ledger;
  for (std::int64_t t = 0; t < steps; ++t) {
    Block block;
    block.index = static_cast<long>(t + 1);
    block.records.assign(records.begin() + t * block_len,
                         records.begin() + (t + 1) * block_len);

    // the prediction is committed before the block is exposed
    Vector committed = learner.prediction();
    BlockDiagnostics diag;
    diag.eta = learner.planned_eta();

    const auto t0 = std::chrono::steady_clock::now();
    learner.observe(block);
    if (opt.observe_seconds) {
      *opt.observe_seconds +=
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
    }
    diag.rank_one_ok = learner.last_certificate();
    if (opt.spike) {
      const double a = committed.dot(*opt.spike);
      diag.alignment = std::min(1.0, a * a);
    }
    const std::int64_t boundary = (t + 1) * block_len;
    bool cached = false;
    if (opt.prefix_cache) {
      auto it = opt.prefix_cache->find(boundary);
      if (it != opt.prefix_cache->end()) {
        diag.prefix_top_eigenvalue = it->second;
        cached = true;
      }
    }
    ledger = record_block(std::move(ledger), committed, block, diag);
    if (opt.prefix_cache && !cached) {
      opt.prefix_cache->emplace(boundary,
                                ledger.per_block.back().prefix_top_eigenvalue);
    }
  }
  return ledger;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  return run_impl(cfg, nullptr);
}

RunResult run_experiment(const ExperimentConfig& cfg,
                         const std::vector<StreamRecord>& stream) {
  return run_impl(cfg, &stream);
}

std::vector<StreamRecord> build_replicate_stream(const ExperimentConfig& cfg,
                                                 int replicate) {
  validate_config(cfg);
  if (replicate < 0 || replicate >= cfg.replicates) {
    throw InvalidInput("build_replicate_stream: replicate index out of range");
  }
  return std::move(make_replicate_stream(cfg, replicate).records);
}

}  // namespace streampca
