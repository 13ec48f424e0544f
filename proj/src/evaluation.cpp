#include "streampca/evaluation.hpp"

#include <cmath>
#include <string>

#include "streampca/constants.hpp"
#include "streampca/errors.hpp"

namespace streampca {

RegretLedger record_block(RegretLedger ledger, const Vector& w_hat,
                          const Block& block, const BlockDiagnostics& diag) {
  if (w_hat.size() == 0 || !w_hat.allFinite()) {
    throw InvalidInput("record_block: prediction must be a finite vector");
  }
  if (std::abs(w_hat.norm() - 1.0) > tol::kUnitNorm) {
    throw InvalidInput("record_block: prediction must have unit norm");
  }
  if (block.records.empty()) {
    throw InvalidInput("record_block: block has no records");
  }
  const Eigen::Index d = w_hat.size();
  if (ledger.sum_outer.dim() != 0 && ledger.sum_outer.dim() != d) {
    throw InvalidInput("record_block: prediction dimension " +
                       std::to_string(d) + " does not match ledger dimension " +
                       std::to_string(ledger.sum_outer.dim()));
  }
  if (!std::isfinite(diag.eta)) {
    throw InvalidInput("record_block: eta must be finite");
  }
  if (diag.alignment &&
      !(*diag.alignment >= 0.0 && *diag.alignment <= 1.0 + tol::kAlignment)) {
    throw InvalidInput("record_block: alignment must lie in [0, 1]");
  }
  if (diag.prefix_top_eigenvalue && !std::isfinite(*diag.prefix_top_eigenvalue)) {
    throw InvalidInput("record_block: prefix eigenvalue hint must be finite");
  }

  Matrix acc = ledger.sum_outer.dim() == 0 ? Matrix::Zero(d, d)
                                           : Matrix(ledger.sum_outer.mat());
  double payoff = 0.0;
  for (const StreamRecord& r : block.records) {
    if (r.x.size() != d) {
      throw InvalidInput("record_block: record dimension does not match prediction");
    }
    if (!r.x.allFinite()) {
      throw InvalidInput("record_block: record has non-finite entries");
    }
    const double proj = w_hat.dot(r.x);
    payoff += proj * proj;
    acc.selfadjointView<Eigen::Lower>().rankUpdate(r.x, 1.0);
  }
  Matrix full = acc.selfadjointView<Eigen::Lower>();
  ledger.sum_outer = SymMatrix(std::move(full));
  ledger.cumulative_payoff += payoff;
  ledger.n_seen += static_cast<std::int64_t>(block.records.size());

  DiagnosticsRecord rec;
  rec.t = static_cast<std::int64_t>(ledger.per_block.size()) + 1;
  rec.block_len = static_cast<std::int64_t>(block.records.size());
  rec.block_payoff = payoff;
  rec.eta = diag.eta;
  rec.alignment = diag.alignment;
  rec.rank_one_ok = diag.rank_one_ok;
  rec.prefix_n = ledger.n_seen;
  rec.prefix_payoff = ledger.cumulative_payoff;
  rec.prefix_top_eigenvalue = diag.prefix_top_eigenvalue
                                  ? *diag.prefix_top_eigenvalue
                                  : top_eigenvalue(ledger.sum_outer);
  ledger.per_block.push_back(std::move(rec));
  return ledger;
}

double regret(const RegretLedger& ledger) {
  if (ledger.n_seen < 1) {
    throw InvalidInput("regret: ledger has no records");
  }
  return top_eigenvalue(ledger.sum_outer) - ledger.cumulative_payoff;
}

std::vector<RegretPoint> average_regret_curve(const RegretLedger& ledger) {
  std::vector<RegretPoint> curve;
  curve.reserve(ledger.per_block.size());
  for (const DiagnosticsRecord& rec : ledger.per_block) {
    const double prefix_regret = rec.prefix_top_eigenvalue - rec.prefix_payoff;
    curve.push_back({rec.prefix_n,
                     prefix_regret / static_cast<double>(rec.prefix_n)});
  }
  return curve;
}

std::pair<double, Vector> best_in_hindsight(const RegretLedger& ledger) {
  if (ledger.n_seen < 1) {
    throw InvalidInput("best_in_hindsight: ledger has no records");
  }
  return top_eigenpair(ledger.sum_outer);
}

double rank_one_error_rate(const RegretLedger& ledger) {
  std::int64_t flagged = 0;
  std::int64_t failed = 0;
  for (const DiagnosticsRecord& rec : ledger.per_block) {
    if (!rec.rank_one_ok) continue;
    ++flagged;
    if (!*rec.rank_one_ok) ++failed;
  }
  if (flagged == 0) {
    throw InvalidInput("rank_one_error_rate: no block carries a rank-one flag");
  }
  return static_cast<double>(failed) / static_cast<double>(flagged);
}

}  // namespace streampca
