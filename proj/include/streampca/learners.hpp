#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "streampca/stream_model.hpp"
#include "streampca/symmat.hpp"

namespace streampca {

enum class LearnerKind {
  nonconvex_oga,
  rank_one_oga,
  convex_oga,
  fixed,
};

enum class EtaSchedule { constant, decaying };

// Hyperparameters shared by the learners. The decaying schedule uses
// eta_at(t) = 1/(alpha t + t0); the constant one ignores alpha/t0 for the
// rate. gamma_at(t) = sqrt(33) (eta_t * block_len * rv2)^2 tracks the
// one-power-step approximation error, so rv2 = (R+V)^2 must be set for it to
// mean anything; `gamma` caches gamma_at(1).
struct HyperParams {
  std::int64_t block_len = 1;
  EtaSchedule schedule = EtaSchedule::constant;
  double eta = 0;
  double alpha = 0;
  double t0 = 0;
  double gamma = 0;
  double rv2 = 0;
  double epsilon_slack = 0;
  double p = 0.05;
  double init_alignment_threshold = 0;

  double eta_at(std::int64_t t) const;
  double gamma_at(std::int64_t t) const;
  // Schedule sanity: constant needs eta > 0; decaying needs alpha > 0,
  // t0 >= 0 and eta_at(1) * alpha < 1. Violations raise InvalidInput.
  void validate() const;
};

// Iterate of one learner. w_hat is always unit; block counter t counts
// completed steps. convex_oga additionally carries its lifted iterate W
// (PSD, trace 1), of which w_hat is the top eigenvector.
struct LearnerState {
  LearnerKind kind = LearnerKind::nonconvex_oga;
  Vector w_hat;
  std::int64_t t = 0;
  std::optional<SymMatrix> W;
};

// Initial state at iterate w0 (must be unit). convex_oga starts at the lifted
// point w0 w0^T; `fixed` never moves.
LearnerState make_state(LearnerKind kind, const Vector& w0);

// One block step of projection-free gradient ascent on the sphere:
// w <- ((1 - eta alpha) w + eta sum_x x (x^T w)) / ||.||. O(len * d) time and
// O(d) extra space; the block's second-moment matrix is never formed.
// eta * alpha may be at most 1; a numerically zero update raises
// DegenerateUpdate.
LearnerState nonconvex_oga_step(const LearnerState& state, const Block& block,
                                double eta, double alpha);

struct RankOneStep {
  LearnerState state;
  // True when the certified-projection predicate held for (w, X) before the
  // step, i.e. the spectrahedron projection of the lifted update is exactly
  // rank one.
  bool certificate = false;
};

// One block step of the lifted update W' = (1 - eta alpha) w w^T + eta X with
// X = sum_x x x^T, returning the exact top eigenvector of W'. Computed on a
// d x (len+1) factor (Gram trick) when that is cheaper than forming W', so
// memory stays O(len * d).
RankOneStep rank_one_oga_step(const LearnerState& state, const Block& block,
                              double eta, double alpha);

// Certified-projection predicate: w^T X w >= (l1(X) + l2(X) + alpha)/2 - 1e-9.
// When it holds, the spectrahedron projection of (1 - eta alpha) w w^T + eta X
// is the rank-one matrix built from that top eigenvector.
bool rank_one_condition(const Vector& w, const SymMatrix& x, double eta,
                        double alpha);

// One block step on the spectrahedron: W' = project((1 - eta alpha) W + eta X).
// Deliberately the expensive baseline: forms the d x d matrix and
// eigendecomposes it every step. The returned w_hat is the top eigenvector of
// the new W.
LearnerState convex_oga_step(const LearnerState& state, const Block& block,
                             double eta, double alpha);

// Top eigenvector of the empirical second moment (1/n) sum_{i<n} x_i x_i^T,
// sign-canonical. All-zero samples raise DegenerateUpdate.
Vector warm_start(const std::vector<Vector>& samples, std::int64_t n);

// Samples needed for the warm start to land within the required alignment of
// the spike with probability 1 - p:
// n = ceil(131072 (R+V)^4 lambda1 ln(2 d / p) / (19 c delta^3)).
// Requires delta >= (32 lambda1 V^4 / c)^(1/3), else ModelViolation.
std::int64_t warm_start_sample_size(double radius, double v_bound,
                                    double lambda1, double delta, double c,
                                    double p, Eigen::Index d);

// The four scalars the hyperparameter derivations need.
struct ModelStats {
  double radius = 0;   // R, support bound of the signal part
  double v_bound = 0;  // V, perturbation magnitude
  double lambda1 = 0;
  double delta = 0;    // spectral gap of the signal covariance
};

ModelStats model_stats(const SpikedModel& model, const AdversarySpec& adv);

// Constant-rate parameters: eta = 1/(sqrt(T) len (R+V)^2) with alpha = 0,
// where len solves len = block_length_for(eps, p, d, floor(N/len), R) by
// fixed-point iteration and T = floor(N/len). eps ends up in epsilon_slack.
// eps <= 0 raises ModelViolation; an infeasible len (> N) raises
// InsufficientData.
HyperParams derive_theorem1_params(const ModelStats& stats, std::int64_t n_samples,
                                   Eigen::Index d, double p);

// Decaying-rate parameters: same eps and len, then
// alpha = len (delta^2 - V^4 - 2 V^2 lambda1) / (10 (delta + V^2)) and
// t0 = max{4 len lambda1 (V^2 + 4 eps)/eps, len (R+V)^2, 72 len lambda1,
// len (R+V)^4 / eps}, with eta_t = 1/(alpha t + t0).
HyperParams derive_theorem2_params(const ModelStats& stats, std::int64_t n_samples,
                                   Eigen::Index d, double p);

// Outcome of checking the five inequalities that make a parameter choice safe
// for the certified-projection analysis. Margins are signed distances to each
// bound; a condition holds iff its margin is >= 0.
struct GoodProjReport {
  bool epsilon_ok = false;
  bool eta_ok = false;
  bool gamma_ok = false;
  bool alpha_ok = false;
  bool init_ok = false;
  bool overall_ok = false;
  double epsilon_margin = 0;
  double eta_margin = 0;
  double gamma_margin = 0;
  double alpha_margin = 0;
  double init_margin = 0;
};

// Evaluates, at t = 1 (where the decaying schedule is tightest):
//   eps   <= (delta^2 - V^4 - 2 V^2 lambda1) / (72 lambda1)
//   eta   <= min{eps / (4 len lambda1 (V^2 + 4 eps)), 1/(len (R+V)^2)}
//   gamma <= min{eps / (4 lambda1), 18 eps eta len}
//   alpha <= len (delta^2 - V^4 - 2 V^2 lambda1) / (4 (delta + V^2))
//   init_alignment >= 1 - (delta - V^2 - alpha/len - 4 eps) / (2 lambda1)
// Never throws; nonsensical inputs surface as false conditions.
GoodProjReport good_proj_validate(const HyperParams& hp, const ModelStats& stats,
                                  double epsilon, double init_alignment);

// Bound on || w' w'^T - u u^T ||_F between the normalized one-step power
// update w' and the exact top eigenvector u of the lifted update:
// sqrt(33) (eta len (R+V)^2)^2. Requires eta <= 1/(3 len (R+V)^2) and
// alpha <= len (R+V)^2, else ModelViolation.
double power_step_gap_bound(double eta, std::int64_t block_len, double radius,
                            double v_bound, double alpha);

}  // namespace streampca
