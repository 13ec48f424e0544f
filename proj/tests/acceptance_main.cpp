// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line with
// the measured numbers; the binary exits nonzero if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "streampca/config.hpp"
#include "streampca/errors.hpp"
#include "streampca/harness.hpp"
#include "streampca/learners.hpp"
#include "streampca/stream_model.hpp"
#include "streampca/symmat.hpp"

using namespace streampca;

namespace {

int failures = 0;

void report(int idx, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", idx,
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return std::string(buf);
}

Block block_of(const std::vector<Vector>& xs) {
  Block b;
  for (const Vector& x : xs) {
    StreamRecord r;
    r.x = x;
    r.q = x;
    r.v = Vector::Zero(x.size());
    b.records.push_back(std::move(r));
  }
  return b;
}

Matrix outer(const Vector& v) { return v * v.transpose(); }

Matrix sum_outer(const Block& b, Eigen::Index d) {
  Matrix acc = Matrix::Zero(d, d);
  for (const StreamRecord& r : b.records) acc += r.x * r.x.transpose();
  return acc;
}

Block random_ball_block(std::mt19937_64& g, int d, int len, double radius) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vector> xs;
  for (int i = 0; i < len; ++i) {
    Vector dir = oracle::random_unit(g, d);
    const double r = (i % 5 == 4) ? radius : radius * u(g);
    xs.push_back(r * dir);
  }
  return block_of(xs);
}

const LearnerReport* find_learner(const RunResult& result, const char* name) {
  for (const LearnerReport& lr : result.learners) {
    if (lr.name == name) return &lr;
  }
  return nullptr;
}

// Synthetic reproduction: every learning algorithm beats the recorded warm
// start, the blocked rank-one learner certifies at a plausible rate, and the
// average-regret curves shrink between n=1000 and the end of the stream.
void criterion_1() {
  const double kMaxSeconds = 600.0;
  const double kMaxErrorRate = 0.15;

  ExperimentConfig cfg =
      load_config(std::string(STREAMPCA_SOURCE_DIR) + "/configs/synthetic.conf");
  const auto t0 = std::chrono::steady_clock::now();
  RunResult result = run_experiment(cfg);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  const char* learning[] = {"oga_b1", "r1_b1", "br1_b10", "conv_b1"};
  const LearnerReport* base = find_learner(result, "base");
  if (!base) {
    report(1, false, "config lacks the base learner");
    return;
  }

  bool ok = seconds <= kMaxSeconds;
  std::string detail;
  for (const char* name : learning) {
    const LearnerReport* lr = find_learner(result, name);
    if (!lr) {
      report(1, false, fmt("config lacks learner %s", name));
      return;
    }
    ok = ok && lr->final_avg_regret < base->final_avg_regret;

    // locate the curve value at n = 1000
    double at_1000 = 0.0;
    bool found = false;
    for (size_t gi = 0; gi < lr->grid.size(); ++gi) {
      if (lr->grid[gi] == 1000) {
        at_1000 = lr->avg_regret_mean[gi];
        found = true;
        break;
      }
    }
    ok = ok && found && lr->avg_regret_mean.back() < at_1000;
    detail += fmt("%s %.4f (at n=1000: %.4f), ", name, lr->final_avg_regret,
                  found ? at_1000 : std::nan(""));
  }

  const LearnerReport* br1 = find_learner(result, "br1_b10");
  const double rate = br1->rank_one_error_rate.value_or(-1.0);
  ok = ok && rate >= 0.0 && rate <= kMaxErrorRate;

  detail += fmt("base %.4f; br1 certificate error rate %.4f; %.0f s",
                base->final_avg_regret, rate, seconds);
  report(1, ok, detail);
}

// Whenever the certificate accepts, the full spectrahedron projection of the
// lifted update must be indistinguishable from the top-eigenpair outer
// product.
void criterion_2() {
  const double kLambda2Tol = 1e-9;
  const double kFrobTol = 1e-7;

  auto g = oracle::rng(7321);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  int accepted = 0, attempts = 0, violations = 0;
  double worst_lambda2 = 0.0, worst_frob = 0.0;
  while (accepted < 1000 && attempts < 12000) {
    ++attempts;
    const int d = 2 + attempts % 7;
    const double scale = 0.2 + 2.8 * u(g);
    SymMatrix x{scale * oracle::random_spectrahedron_member(g, d)};
    EigenDecomposition ex = eig_sym(x);

    Vector w = ex.eigenvectors.col(0) + 0.25 * u(g) * oracle::gaussian_vector(g, d);
    w.normalize();

    const double wxw = w.dot(x.mat() * w);
    const double margin = wxw - (ex.eigenvalues[0] + ex.eigenvalues[1]) / 2.0;
    if (margin < 1e-4) continue;

    double eta = 0.05 + 1.95 * u(g);
    double alpha = std::min(u(g) * margin, 0.9 / eta);
    if (!rank_one_condition(w, x, eta, alpha)) continue;
    ++accepted;

    SymMatrix lifted =
        SymMatrix::symmetrized((1.0 - eta * alpha) * outer(w) + eta * x.mat());
    SymMatrix projected = spectrahedron_project(lifted);

    EigenDecomposition ep = eig_sym(projected);
    Vector top = top_eigenpair(lifted).second;
    const double frob = (projected.mat() - outer(top)).norm();
    worst_lambda2 = std::max(worst_lambda2, ep.eigenvalues[1]);
    worst_frob = std::max(worst_frob, frob);
    if (ep.eigenvalues[1] > kLambda2Tol || frob > kFrobTol) ++violations;
  }

  report(2, accepted >= 1000 && violations == 0,
         fmt("%d certified instances, %d violations; worst lambda2 %.2e, "
             "worst Frobenius gap %.2e",
             accepted, violations, worst_lambda2, worst_frob));
}

// One normalized power step stays within the stated Frobenius distance of the
// exact top eigenvector of the lifted update.
void criterion_3() {
  const double kSlack = 1e-9;

  auto g = oracle::rng(7331);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double radius = 1.2, v_bound = 0.8;
  const double rv2 = (radius + v_bound) * (radius + v_bound);

  int checked = 0, violations = 0;
  double worst_excess = -1.0;
  for (int rep = 0; rep < 600; ++rep) {
    const int d = 2 + rep % 5;
    const int len = 1 + (rep / 5) % 6;
    const double eta = (0.05 + 0.95 * u(g)) / (3.0 * len * rv2);
    const double alpha = u(g) * len * rv2;

    Block b = random_ball_block(g, d, len, radius + v_bound);
    Vector w = oracle::random_unit(g, d);

    LearnerState power =
        nonconvex_oga_step(make_state(LearnerKind::nonconvex_oga, w), b, eta, alpha);
    SymMatrix lifted = SymMatrix::symmetrized((1.0 - eta * alpha) * outer(w) +
                                              eta * sum_outer(b, d));
    Vector exact = top_eigenpair(lifted).second;

    const double gap = (outer(power.w_hat) - outer(exact)).norm();
    const double bound = power_step_gap_bound(eta, len, radius, v_bound, alpha);
    worst_excess = std::max(worst_excess, gap - bound);
    if (gap > bound + kSlack) ++violations;
    ++checked;
  }

  report(3, checked >= 500 && violations == 0,
         fmt("%d instances, %d violations; worst gap-minus-bound %.2e", checked,
             violations, worst_excess));
}

// Blockwise alignment growth: under the validated model, the squared
// alignment of the lifted update's top eigenvector obeys the stated lower
// bound whenever the iterate starts at least half aligned.
void criterion_4() {
  const double kTol = 1e-8;

  auto g = oracle::rng(7341);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  int checked = 0, violations = 0;
  double worst_slack = 1e300;
  for (int rep = 0; rep < 700 && checked < 640; ++rep) {
    const int d = (rep % 3 == 0) ? 2 : (rep % 3 == 1 ? 3 : 5);
    Vector lams(d);
    for (int i = 0; i < d; ++i) lams[i] = 2.0 * std::pow(0.3, i);
    SpikedModel model(lams, Matrix::Identity(d, d),
                      DistributionKind::bounded_uniform_mixture);

    AdversarySpec adv;
    if (rep % 2 == 1) {
      adv.kind = AdversaryKind::fixed_vector;
      adv.v_bound = 0.2;
      adv.direction = oracle::random_unit(g, d);
    }
    if (!validate_model(model, adv).gap_condition_ok) continue;

    const int len = 32 * (1 + rep % 3);
    StreamGenerator gen(model, adv, derive_seed(7341, static_cast<std::uint64_t>(rep)));
    Block b = gen.next_block(len);

    const double a = 0.5 + 0.48 * u(g);
    Vector perp = oracle::gaussian_vector(g, d);
    perp[0] = 0.0;
    if (perp.norm() < 1e-9) continue;
    perp.normalize();
    Vector w = std::sqrt(a) * model.spike() + std::sqrt(1.0 - a) * perp;

    const double eta = 1e-3 * std::pow(300.0, u(g));
    SymMatrix lifted = SymMatrix::symmetrized(outer(w) + eta * sum_outer(b, d));
    EigenDecomposition ew = eig_sym(lifted);
    const double gap_w = ew.eigenvalues[0] - ew.eigenvalues[1];
    if (gap_w <= 1e-12) continue;

    const double align_next =
        std::pow(model.spike().dot(ew.eigenvectors.col(0)), 2);
    const double dnorm = norms(residual_matrix(b, model)).spectral;
    const double vb = effective_v(adv);
    const double bracket = (1.0 - a) * model.gap() - a * vb * vb -
                           4.0 * dnorm / static_cast<double>(len);
    const double rhs = a + eta * static_cast<double>(len) * bracket / gap_w;
    worst_slack = std::min(worst_slack, align_next - rhs);
    if (align_next < rhs - kTol) ++violations;
    ++checked;
  }

  report(4, checked >= 500 && violations == 0,
         fmt("%d instances, %d violations; worst slack %.2e", checked,
             violations, worst_slack));
}

// The coarse matrix-Hoeffding block sizing must make large residual
// deviations rare; the Monte-Carlo rate should sit far under the target.
void criterion_5() {
  const double kEpsilon = 2.0;
  const double kTargetP = 0.05;

  Vector lams(2);
  lams << 1.0, 0.3;
  SpikedModel model(lams, Matrix::Identity(2, 2),
                    DistributionKind::bounded_uniform_mixture);
  AdversarySpec adv;

  const std::int64_t len =
      block_length_for(kEpsilon, kTargetP, 2, 1, model.radius());
  const double rate = empirical_hoeffding_check(model, adv, static_cast<long>(len),
                                                kEpsilon, 1000, 7351);
  report(5, rate <= kTargetP,
         fmt("block length %lld, observed rate %.4f (target <= %.2f)",
             static_cast<long long>(len), rate, kTargetP));
}

// Warm-start sizing at p = 0.1: the sampled initial vector reaches the
// alignment threshold in at least 90%% of replicates.
void criterion_6() {
  const double lam1 = 10.0, lam2 = 3.0, delta = 7.0;
  const double radius = std::sqrt(3.0 * (lam1 + lam2));
  const std::int64_t n =
      warm_start_sample_size(radius, 0.0, lam1, delta, 1.0, 0.1, 2);
  const double threshold = 1.0 - delta / (2.0 * lam1);  // 0.65

  const double s1 = std::sqrt(3.0 * lam1), s2 = std::sqrt(3.0 * lam2);
  std::vector<Vector> samples(static_cast<size_t>(n), Vector(2));

  int passed = 0;
  const int replicates = 200;
  for (int rep = 0; rep < replicates; ++rep) {
    std::mt19937_64 g(derive_seed(7361, static_cast<std::uint64_t>(rep)));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Vector& x : samples) {
      x[0] = s1 * u(g);
      x[1] = s2 * u(g);
    }
    Vector w = warm_start(samples, n);
    if (w[0] * w[0] >= threshold) ++passed;
  }

  report(6, passed >= 180,
         fmt("n = %lld samples, %d/%d replicates reached alignment %.2f",
             static_cast<long long>(n), passed, replicates, threshold));
}

// The closed-form spectrahedron projection agrees with the exhaustive
// active-set oracle.
void criterion_7() {
  const double kTol = 1e-8;

  auto g = oracle::rng(7371);
  double worst = 0.0;
  int violations = 0;
  for (int rep = 0; rep < 100; ++rep) {
    SymMatrix a{oracle::random_symmetric(g, 5, 1.0 + rep % 3)};
    SymMatrix fast = spectrahedron_project(a);

    EigenDecomposition ea = eig_sym(a);
    Eigen::VectorXd weights = oracle::simplex_project_bruteforce(ea.eigenvalues);
    Matrix slow = ea.eigenvectors * weights.asDiagonal() *
                  ea.eigenvectors.transpose();

    const double diff = (fast.mat() - slow).norm();
    worst = std::max(worst, diff);
    if (diff > kTol) ++violations;
  }

  report(7, violations == 0,
         fmt("100 instances, %d violations; worst Frobenius diff %.2e",
             violations, worst));
}

// While every block certifies, the rank-one iterate and the full convex
// iterate are the same algorithm.
void criterion_8() {
  const double kTol = 1e-7;

  Vector lams(5);
  lams << 3.0, 1.0, 0.5, 0.25, 0.125;
  SpikedModel model(lams, Matrix::Identity(5, 5),
                    DistributionKind::bounded_uniform_mixture);
  AdversarySpec adv;

  int certified = 0, steps = 0;
  double worst = 0.0;
  for (double alpha : {0.0, 0.3}) {
    StreamGenerator gen(model, adv, 7381);
    LearnerState r1 = make_state(LearnerKind::rank_one_oga, model.spike());
    LearnerState cv = make_state(LearnerKind::convex_oga, model.spike());
    const double eta = 0.02;

    for (int step = 0; step < 40; ++step) {
      Block b = gen.next_block(24);
      RankOneStep rs = rank_one_oga_step(r1, b, eta, alpha);
      cv = convex_oga_step(cv, b, eta, alpha);
      r1 = rs.state;
      ++steps;
      certified += rs.certificate ? 1 : 0;
      worst = std::max(worst, (cv.W->mat() - outer(r1.w_hat)).norm());
    }
  }

  report(8, certified == steps && worst <= kTol,
         fmt("%d/%d blocks certified; worst iterate Frobenius diff %.2e",
             certified, steps, worst));
}

}  // namespace

int main() {
  try {
    criterion_1();
  } catch (const std::exception& e) {
    report(1, false, fmt("exception: %s", e.what()));
  }
  try {
    criterion_2();
  } catch (const std::exception& e) {
    report(2, false, fmt("exception: %s", e.what()));
  }
  try {
    criterion_3();
  } catch (const std::exception& e) {
    report(3, false, fmt("exception: %s", e.what()));
  }
  try {
    criterion_4();
  } catch (const std::exception& e) {
    report(4, false, fmt("exception: %s", e.what()));
  }
  try {
    criterion_5();
  } catch (const std::exception& e) {
    report(5, false, fmt("exception: %s", e.what()));
  }
  try {
    criterion_6();
  } catch (const std::exception& e) {
    report(6, false, fmt("exception: %s", e.what()));
  }
  try {
    criterion_7();
  } catch (const std::exception& e) {
    report(7, false, fmt("exception: %s", e.what()));
  }
  try {
    criterion_8();
  } catch (const std::exception& e) {
    report(8, false, fmt("exception: %s", e.what()));
  }
  return failures == 0 ? 0 : 1;
}
