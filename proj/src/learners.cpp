#include "streampca/learners.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "streampca/constants.hpp"

namespace streampca {

namespace {

const double kSqrt33 = std::sqrt(33.0);

void check_unit(const Vector& w, const char* who) {
  if (w.size() == 0) throw InvalidInput(std::string(who) + ": empty iterate");
  if (!w.allFinite()) throw InvalidInput(std::string(who) + ": non-finite iterate");
  if (std::abs(w.norm() - 1.0) > tol::kUnitNorm) {
    throw InvalidInput(std::string(who) + ": iterate norm " +
                       std::to_string(w.norm()) + " is not 1");
  }
}

void check_step_args(const LearnerState& state, LearnerKind expect,
                     const Block& block, double eta, double alpha,
                     const char* who) {
  if (state.kind != expect) {
    throw InvalidInput(std::string(who) + ": state has the wrong learner kind");
  }
  check_unit(state.w_hat, who);
  if (block.records.empty()) {
    throw InvalidInput(std::string(who) + ": empty block");
  }
  const Eigen::Index d = state.w_hat.size();
  for (const StreamRecord& r : block.records) {
    if (r.x.size() != d) {
      throw InvalidInput(std::string(who) + ": record dimension " +
                         std::to_string(r.x.size()) + " does not match iterate " +
                         std::to_string(d));
    }
    if (!r.x.allFinite()) {
      throw InvalidInput(std::string(who) + ": non-finite record");
    }
  }
  if (!(eta >= 0) || !std::isfinite(eta)) {
    throw InvalidInput(std::string(who) + ": eta must be finite and >= 0");
  }
  if (!(alpha >= 0) || !std::isfinite(alpha)) {
    throw InvalidInput(std::string(who) + ": alpha must be finite and >= 0");
  }
  if (eta * alpha > 1.0) {
    throw InvalidInput(std::string(who) + ": eta * alpha = " +
                       std::to_string(eta * alpha) + " exceeds 1");
  }
}

// sum_x x x^T for the block, materialized (dense learners only).
Matrix block_outer_sum(const Block& block, Eigen::Index d) {
  Matrix acc = Matrix::Zero(d, d);
  for (const StreamRecord& r : block.records) {
    acc.selfadjointView<Eigen::Lower>().rankUpdate(r.x, 1.0);
  }
  return acc.selfadjointView<Eigen::Lower>();
}

// Top two eigenvalues of a PSD matrix given its spectrum ascending, clamped
// at 0 (any eigenvalues the computed spectrum is missing are exact zeros).
std::pair<double, double> top_two(const Vector& ev) {
  const Eigen::Index m = ev.size();
  const double l1 = m >= 1 ? std::max(ev[m - 1], 0.0) : 0.0;
  const double l2 = m >= 2 ? std::max(ev[m - 2], 0.0) : 0.0;
  return {l1, l2};
}

Vector psd_eigenvalues(const Matrix& m, const char* who) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw InvalidInput(std::string(who) + ": eigensolver did not converge");
  }
  return solver.eigenvalues();
}

}  // namespace

double HyperParams::eta_at(std::int64_t t) const {
  if (t < 1) throw InvalidInput("HyperParams::eta_at: t must be >= 1");
  if (schedule == EtaSchedule::constant) return eta;
  return 1.0 / (alpha * static_cast<double>(t) + t0);
}

double HyperParams::gamma_at(std::int64_t t) const {
  const double step = eta_at(t) * static_cast<double>(block_len) * rv2;
  return kSqrt33 * step * step;
}

void HyperParams::validate() const {
  if (block_len < 1) {
    throw InvalidInput("HyperParams: block_len must be >= 1");
  }
  if (schedule == EtaSchedule::constant) {
    if (!(eta > 0) || !std::isfinite(eta)) {
      throw InvalidInput("HyperParams: constant schedule needs finite eta > 0");
    }
  } else {
    if (!(alpha > 0) || !std::isfinite(alpha)) {
      throw InvalidInput("HyperParams: decaying schedule needs finite alpha > 0");
    }
    if (!(t0 >= 0) || !std::isfinite(t0)) {
      throw InvalidInput("HyperParams: decaying schedule needs finite t0 >= 0");
    }
    if (!(eta_at(1) * alpha < 1.0)) {
      throw InvalidInput("HyperParams: decaying schedule needs eta_1 * alpha < 1"
                         " (t0 must be positive)");
    }
  }
}

LearnerState make_state(LearnerKind kind, const Vector& w0) {
  check_unit(w0, "make_state");
  LearnerState state;
  state.kind = kind;
  state.w_hat = w0;
  state.t = 0;
  if (kind == LearnerKind::convex_oga) {
    state.W = SymMatrix(w0 * w0.transpose());
  }
  return state;
}

LearnerState nonconvex_oga_step(const LearnerState& state, const Block& block,
                                double eta, double alpha) {
  check_step_args(state, LearnerKind::nonconvex_oga, block, eta, alpha,
                  "nonconvex_oga_step");
  const Eigen::Index d = state.w_hat.size();

  Vector s = Vector::Zero(d);
  for (const StreamRecord& r : block.records) {
    s.noalias() += r.x * r.x.dot(state.w_hat);
  }
  Vector u = (1.0 - eta * alpha) * state.w_hat + eta * s;
  const double nu = u.norm();
  if (nu < tol::kDegenerateNorm) {
    throw DegenerateUpdate("nonconvex_oga_step: update vector is numerically zero");
  }

  LearnerState out;
  out.kind = state.kind;
  out.w_hat = u / nu;
  out.t = state.t + 1;
  return out;
}

RankOneStep rank_one_oga_step(const LearnerState& state, const Block& block,
                              double eta, double alpha) {
  check_step_args(state, LearnerKind::rank_one_oga, block, eta, alpha,
                  "rank_one_oga_step");
  const Eigen::Index d = state.w_hat.size();
  const Eigen::Index len = static_cast<Eigen::Index>(block.records.size());

  double wxw = 0.0;
  for (const StreamRecord& r : block.records) {
    const double dot = r.x.dot(state.w_hat);
    wxw += dot * dot;
  }

  Vector w_next;
  double l1 = 0.0, l2 = 0.0;
  if (len + 1 < d) {
    // Factor route: W' = F F^T with F = [sqrt(1-eta alpha) w, sqrt(eta) x_j];
    // the top eigenpair comes from the (len+1)-dimensional Gram of F.
    Matrix xd(d, len);
    for (Eigen::Index j = 0; j < len; ++j) {
      xd.col(j) = block.records[static_cast<size_t>(j)].x;
    }
    Matrix f(d, len + 1);
    f.col(0) = std::sqrt(std::max(1.0 - eta * alpha, 0.0)) * state.w_hat;
    f.rightCols(len) = std::sqrt(eta) * xd;

    EigenDecomposition ed = eig_sym(SymMatrix::symmetrized(f.transpose() * f));
    Vector u = f * ed.eigenvectors.col(0);
    const double nu = u.norm();
    if (nu < tol::kDegenerateNorm) {
      throw DegenerateUpdate("rank_one_oga_step: lifted update is numerically zero");
    }
    w_next = sign_canonical(u / nu);

    const Vector ev = psd_eigenvalues(xd.transpose() * xd, "rank_one_oga_step");
    std::tie(l1, l2) = top_two(ev);
  } else {
    Matrix xsum = block_outer_sum(block, d);
    Matrix lifted = (1.0 - eta * alpha) * (state.w_hat * state.w_hat.transpose()) +
                    eta * xsum;
    auto [lam, u] = top_eigenpair(SymMatrix::symmetrized(lifted));
    if (std::sqrt(std::max(lam, 0.0)) < tol::kDegenerateNorm) {
      throw DegenerateUpdate("rank_one_oga_step: lifted update is numerically zero");
    }
    w_next = u;

    const Vector ev = psd_eigenvalues(xsum, "rank_one_oga_step");
    std::tie(l1, l2) = top_two(ev);
  }

  RankOneStep out;
  out.state.kind = state.kind;
  out.state.w_hat = std::move(w_next);
  out.state.t = state.t + 1;
  out.certificate = wxw >= (l1 + l2 + alpha) / 2.0 - tol::kCertSlack;
  return out;
}

bool rank_one_condition(const Vector& w, const SymMatrix& x, double eta,
                        double alpha) {
  check_unit(w, "rank_one_condition");
  if (x.dim() != w.size()) {
    throw InvalidInput("rank_one_condition: dimension mismatch");
  }
  if (!(eta > 0) || !std::isfinite(eta)) {
    throw InvalidInput("rank_one_condition: eta must be finite and > 0");
  }
  if (!(alpha >= 0) || !std::isfinite(alpha) || eta * alpha >= 1.0) {
    throw InvalidInput("rank_one_condition: need alpha >= 0 and eta * alpha < 1");
  }

  const Vector ev = psd_eigenvalues(x.mat(), "rank_one_condition");
  const double l1 = ev[x.dim() - 1];
  if (ev[0] < -tol::kPsdSlack * (1.0 + std::abs(l1))) {
    throw InvalidInput("rank_one_condition: matrix is not PSD within tolerance");
  }
  const double l2 = x.dim() >= 2 ? ev[x.dim() - 2] : 0.0;
  const double wxw = w.dot(x.mat() * w);
  return wxw >= (l1 + l2 + alpha) / 2.0 - tol::kCertSlack;
}

LearnerState convex_oga_step(const LearnerState& state, const Block& block,
                             double eta, double alpha) {
  check_step_args(state, LearnerKind::convex_oga, block, eta, alpha,
                  "convex_oga_step");
  if (!state.W) {
    throw InvalidInput("convex_oga_step: state is missing the lifted iterate");
  }
  const Eigen::Index d = state.w_hat.size();
  if (state.W->dim() != d) {
    throw InvalidInput("convex_oga_step: lifted iterate dimension mismatch");
  }
  if (std::abs(state.W->mat().trace() - 1.0) > tol::kTraceTol) {
    throw InvalidInput("convex_oga_step: lifted iterate trace is not 1");
  }

  Matrix xsum = block_outer_sum(block, d);
  Matrix lifted = (1.0 - eta * alpha) * state.W->mat() + eta * xsum;
  SpectrahedronProjection proj =
      spectrahedron_project_full(SymMatrix::symmetrized(lifted));

  LearnerState out;
  out.kind = state.kind;
  out.w_hat = proj.basis.col(0);
  out.t = state.t + 1;
  out.W = std::move(proj.matrix);
  return out;
}

Vector warm_start(const std::vector<Vector>& samples, std::int64_t n) {
  if (n < 1) throw InvalidInput("warm_start: n must be >= 1");
  if (n > static_cast<std::int64_t>(samples.size())) {
    throw InvalidInput("warm_start: n = " + std::to_string(n) + " exceeds the " +
                       std::to_string(samples.size()) + " available samples");
  }
  const Eigen::Index d = samples.front().size();
  if (d == 0) throw InvalidInput("warm_start: empty sample");

  Matrix acc = Matrix::Zero(d, d);
  for (std::int64_t i = 0; i < n; ++i) {
    const Vector& x = samples[static_cast<size_t>(i)];
    if (x.size() != d) throw InvalidInput("warm_start: mixed sample dimensions");
    if (!x.allFinite()) throw InvalidInput("warm_start: non-finite sample");
    acc.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0);
  }
  Matrix cov = acc.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n);
  if (cov.trace() <= 0.0) {
    throw DegenerateUpdate("warm_start: samples are numerically all zero");
  }
  return top_eigenpair(SymMatrix::symmetrized(cov)).second;
}

std::int64_t warm_start_sample_size(double radius, double v_bound,
                                    double lambda1, double delta, double c,
                                    double p, Eigen::Index d) {
  if (!(radius > 0) || !std::isfinite(radius)) {
    throw InvalidInput("warm_start_sample_size: radius must be finite and > 0");
  }
  if (!(v_bound >= 0) || !std::isfinite(v_bound)) {
    throw InvalidInput("warm_start_sample_size: v_bound must be finite and >= 0");
  }
  if (!(lambda1 > 0) || !std::isfinite(lambda1)) {
    throw InvalidInput("warm_start_sample_size: lambda1 must be finite and > 0");
  }
  if (!(delta > 0) || !std::isfinite(delta)) {
    throw InvalidInput("warm_start_sample_size: delta must be finite and > 0");
  }
  if (!(c > 0) || !(c <= 1)) {
    throw InvalidInput("warm_start_sample_size: c must be in (0, 1]");
  }
  if (!(p > 0) || !(p < 1)) {
    throw InvalidInput("warm_start_sample_size: p must be in (0, 1)");
  }
  if (d < 2) throw InvalidInput("warm_start_sample_size: d must be >= 2");

  const double floor_delta =
      std::cbrt(32.0 * lambda1 * std::pow(v_bound, 4) / c);
  if (delta < floor_delta) {
    throw ModelViolation(
        "warm_start_sample_size: needs delta >= (32 lambda1 V^4 / c)^(1/3) but " +
        std::to_string(delta) + " < " + std::to_string(floor_delta));
  }

  const double raw = 131072.0 * std::pow(radius + v_bound, 4) * lambda1 *
                     std::log(2.0 * static_cast<double>(d) / p) /
                     (19.0 * c * std::pow(delta, 3));
  if (!(raw < 9.0e18)) {
    throw InvalidInput("warm_start_sample_size: required count overflows");
  }
  return static_cast<std::int64_t>(std::ceil(raw));
}

ModelStats model_stats(const SpikedModel& model, const AdversarySpec& adv) {
  ModelStats stats;
  stats.radius = model.radius();
  stats.v_bound = effective_v(adv);
  stats.lambda1 = model.lambda1();
  stats.delta = model.gap();
  return stats;
}

namespace {

struct BlockPlan {
  std::int64_t len = 1;
  std::int64_t horizon = 1;
};

void check_derive_args(const ModelStats& stats, std::int64_t n_samples,
                       Eigen::Index d, double p, const char* who) {
  if (!(stats.radius > 0) || !std::isfinite(stats.radius)) {
    throw InvalidInput(std::string(who) + ": radius must be finite and > 0");
  }
  if (!(stats.v_bound >= 0) || !std::isfinite(stats.v_bound)) {
    throw InvalidInput(std::string(who) + ": v_bound must be finite and >= 0");
  }
  if (!(stats.lambda1 > 0) || !std::isfinite(stats.lambda1)) {
    throw InvalidInput(std::string(who) + ": lambda1 must be finite and > 0");
  }
  if (!(stats.delta > 0) || !std::isfinite(stats.delta)) {
    throw InvalidInput(std::string(who) + ": delta must be finite and > 0");
  }
  if (n_samples < 1) throw InvalidInput(std::string(who) + ": n_samples must be >= 1");
  if (d < 2) throw InvalidInput(std::string(who) + ": d must be >= 2");
  if (!(p > 0) || !(p < 1)) {
    throw InvalidInput(std::string(who) + ": p must be in (0, 1)");
  }
}

// delta^2 - V^2 (V^2 + 2 lambda1); positive iff the gap beats the
// perturbation, the common feasibility quantity of both derivations.
double gap_headroom(const ModelStats& stats, const char* who) {
  const double v2 = stats.v_bound * stats.v_bound;
  const double num = stats.delta * stats.delta - v2 * (v2 + 2.0 * stats.lambda1);
  if (!(num > 0)) {
    throw ModelViolation(std::string(who) +
                         ": delta^2 - V^2 (V^2 + 2 lambda1) = " +
                         std::to_string(num) + " is not positive");
  }
  return num;
}

// Joint solve of len = block_length_for(eps, p, d, floor(n/len), R). The map
// is antitone in len, so iterates either settle or fall into a two-cycle that
// brackets the fixed point; the larger cycle member stays feasible because
// the requirement shrinks as the horizon does.
BlockPlan solve_block_length(double epsilon, double p, Eigen::Index d,
                             std::int64_t n_samples, double radius,
                             const char* who) {
  std::int64_t len = 1;
  std::int64_t prev = -1;
  for (int iter = 0; iter < 64; ++iter) {
    if (len > n_samples) {
      throw InsufficientData(std::string(who) + ": needs blocks of length " +
                             std::to_string(len) + " but only " +
                             std::to_string(n_samples) + " samples are available");
    }
    const std::int64_t horizon = n_samples / len;
    const std::int64_t next = block_length_for(epsilon, p, d, horizon, radius);
    if (next == len) return {len, horizon};
    if (next == prev) {
      const std::int64_t pick = std::max(len, next);
      return {pick, n_samples / pick};
    }
    prev = len;
    len = next;
  }
  throw InsufficientData(std::string(who) + ": block length iteration did not settle");
}

}  // namespace

HyperParams derive_theorem1_params(const ModelStats& stats, std::int64_t n_samples,
                                   Eigen::Index d, double p) {
  const char* who = "derive_theorem1_params";
  check_derive_args(stats, n_samples, d, p, who);
  const double epsilon = gap_headroom(stats, who) / (72.0 * stats.lambda1);
  const BlockPlan plan = solve_block_length(epsilon, p, d, n_samples,
                                            stats.radius, who);

  HyperParams hp;
  hp.block_len = plan.len;
  hp.schedule = EtaSchedule::constant;
  hp.rv2 = (stats.radius + stats.v_bound) * (stats.radius + stats.v_bound);
  hp.eta = 1.0 / (std::sqrt(static_cast<double>(plan.horizon)) *
                  static_cast<double>(plan.len) * hp.rv2);
  hp.alpha = 0.0;
  hp.t0 = 0.0;
  hp.epsilon_slack = epsilon;
  hp.p = p;
  hp.gamma = hp.gamma_at(1);
  hp.init_alignment_threshold =
      1.0 - ((stats.delta - stats.v_bound * stats.v_bound) / (2.0 * stats.lambda1)) *
                (1.0 - stats.delta / (9.0 * stats.lambda1));
  hp.validate();
  return hp;
}

HyperParams derive_theorem2_params(const ModelStats& stats, std::int64_t n_samples,
                                   Eigen::Index d, double p) {
  const char* who = "derive_theorem2_params";
  check_derive_args(stats, n_samples, d, p, who);
  const double headroom = gap_headroom(stats, who);
  const double epsilon = headroom / (72.0 * stats.lambda1);
  const BlockPlan plan = solve_block_length(epsilon, p, d, n_samples,
                                            stats.radius, who);

  const double v2 = stats.v_bound * stats.v_bound;
  const double len = static_cast<double>(plan.len);
  const double rv2 = (stats.radius + stats.v_bound) * (stats.radius + stats.v_bound);

  HyperParams hp;
  hp.block_len = plan.len;
  hp.schedule = EtaSchedule::decaying;
  hp.rv2 = rv2;
  hp.alpha = len * headroom / (10.0 * (stats.delta + v2));
  hp.t0 = std::max({4.0 * len * stats.lambda1 * (v2 + 4.0 * epsilon) / epsilon,
                    len * rv2, 72.0 * len * stats.lambda1,
                    len * rv2 * rv2 / epsilon});
  hp.eta = 0.0;
  hp.epsilon_slack = epsilon;
  hp.p = p;
  hp.gamma = hp.gamma_at(1);
  hp.init_alignment_threshold =
      1.0 - ((stats.delta - v2) / (2.0 * stats.lambda1)) *
                (0.9 - stats.delta / (9.0 * stats.lambda1));
  hp.validate();
  return hp;
}

GoodProjReport good_proj_validate(const HyperParams& hp, const ModelStats& stats,
                                  double epsilon, double init_alignment) {
  const double lam = stats.lambda1;
  const double v2 = stats.v_bound * stats.v_bound;
  const double rv2 = (stats.radius + stats.v_bound) * (stats.radius + stats.v_bound);
  const double len = static_cast<double>(hp.block_len);
  const double headroom = stats.delta * stats.delta - v2 * (v2 + 2.0 * lam);
  // Garbage inputs (zero divisors and the like) flow through as inf/NaN and
  // surface as failed conditions; this function never throws.
  const double eta1 = hp.schedule == EtaSchedule::constant
                          ? hp.eta
                          : 1.0 / (hp.alpha + hp.t0);

  GoodProjReport rep;
  rep.epsilon_margin = headroom / (72.0 * lam) - epsilon;
  rep.eta_margin =
      std::min(epsilon / (4.0 * len * lam * (v2 + 4.0 * epsilon)), 1.0 / (len * rv2)) -
      eta1;
  rep.gamma_margin =
      std::min(epsilon / (4.0 * lam), 18.0 * epsilon * eta1 * len) - hp.gamma;
  rep.alpha_margin = len * headroom / (4.0 * (stats.delta + v2)) - hp.alpha;
  rep.init_margin =
      init_alignment - (1.0 - (stats.delta - v2 - hp.alpha / len - 4.0 * epsilon) /
                                  (2.0 * lam));

  rep.epsilon_ok = rep.epsilon_margin >= 0;
  rep.eta_ok = rep.eta_margin >= 0;
  rep.gamma_ok = rep.gamma_margin >= 0;
  rep.alpha_ok = rep.alpha_margin >= 0;
  rep.init_ok = rep.init_margin >= 0;
  rep.overall_ok =
      rep.epsilon_ok && rep.eta_ok && rep.gamma_ok && rep.alpha_ok && rep.init_ok;
  return rep;
}

double power_step_gap_bound(double eta, std::int64_t block_len, double radius,
                            double v_bound, double alpha) {
  if (block_len < 1) {
    throw InvalidInput("power_step_gap_bound: block_len must be >= 1");
  }
  if (!(radius >= 0) || !(v_bound >= 0) || !(radius + v_bound > 0) ||
      !std::isfinite(radius + v_bound)) {
    throw InvalidInput("power_step_gap_bound: radius + v_bound must be finite and > 0");
  }
  if (!(eta > 0) || !std::isfinite(eta)) {
    throw InvalidInput("power_step_gap_bound: eta must be finite and > 0");
  }
  if (!(alpha >= 0) || !std::isfinite(alpha)) {
    throw InvalidInput("power_step_gap_bound: alpha must be finite and >= 0");
  }

  const double rv2 = (radius + v_bound) * (radius + v_bound);
  const double len = static_cast<double>(block_len);
  if (eta > 1.0 / (3.0 * len * rv2)) {
    throw ModelViolation("power_step_gap_bound: needs eta <= 1/(3 len (R+V)^2) but " +
                         std::to_string(eta) + " > " +
                         std::to_string(1.0 / (3.0 * len * rv2)));
  }
  if (alpha > len * rv2) {
    throw ModelViolation("power_step_gap_bound: needs alpha <= len (R+V)^2 but " +
                         std::to_string(alpha) + " > " + std::to_string(len * rv2));
  }
  const double step = eta * len * rv2;
  return kSqrt33 * step * step;
}

}  // namespace streampca
