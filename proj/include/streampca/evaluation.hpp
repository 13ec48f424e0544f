#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "streampca/stream_model.hpp"
#include "streampca/symmat.hpp"

namespace streampca {

// One recorded block, with the running-prefix snapshot taken at record time
// so average-regret curves need no second pass over the data.
struct DiagnosticsRecord {
  std::int64_t t = 0;  // 1-based block index within the ledger
  std::int64_t block_len = 0;
  double block_payoff = 0.0;
  double eta = 0.0;
  std::optional<double> alignment;  // squared overlap with the reference spike
  std::optional<bool> rank_one_ok;
  std::int64_t prefix_n = 0;  // records seen once this block is included
  double prefix_payoff = 0.0;
  double prefix_top_eigenvalue = 0.0;
};

// Caller-supplied annotations for one block. prefix_top_eigenvalue, when
// set, must equal the top eigenvalue of the ledger's sum_outer after this
// block lands; callers replaying one stream through several ledgers use it
// to share eigensolves on identical prefixes instead of repeating them.
struct BlockDiagnostics {
  double eta = 0.0;
  std::optional<double> alignment;
  std::optional<bool> rank_one_ok;
  std::optional<double> prefix_top_eigenvalue;
};

// Regret bookkeeping for one learner over one stream.
struct RegretLedger {
  double cumulative_payoff = 0.0;
  SymMatrix sum_outer;  // running sum of x x^T; dimension 0 until first block
  std::vector<DiagnosticsRecord> per_block;
  std::int64_t n_seen = 0;
};

struct RegretPoint {
  std::int64_t n = 0;
  double average_regret = 0.0;
};

// Folds a block into the ledger: payoff of the prediction against every
// record, the outer-product sum, and a diagnostics row with the prefix
// snapshot. The prediction must be fixed before the block is revealed;
// ordering is the caller's obligation.
RegretLedger record_block(RegretLedger ledger, const Vector& w_hat,
                          const Block& block, const BlockDiagnostics& diag);

// lambda_1(sum_outer) - cumulative_payoff for the full stream seen so far.
// Negative values are possible and reported as-is.
double regret(const RegretLedger& ledger);

// (prefix regret / prefix length) at every block boundary, in order. Empty
// ledger yields an empty curve.
std::vector<RegretPoint> average_regret_curve(const RegretLedger& ledger);

// Top eigenpair of sum_outer: the payoff and direction of the best fixed
// unit vector in hindsight.
std::pair<double, Vector> best_in_hindsight(const RegretLedger& ledger);

// Fraction of false rank_one_ok flags among blocks that carry the flag.
double rank_one_error_rate(const RegretLedger& ledger);

}  // namespace streampca
