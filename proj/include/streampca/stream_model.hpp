#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "streampca/symmat.hpp"

namespace streampca {

// How the signal part q is distributed in the model eigenbasis. All kinds are
// zero mean with covariance B diag(lambda) B^T.
//   truncated_gaussian      Gaussian coefficients, rejection-resampled until
//                           ||q|| <= radius (bias negligible at the default
//                           radius).
//   raw_gaussian            Gaussian coefficients, unbounded support; the
//                           radius is nominal and the generator tracks the
//                           max observed norm as the effective bound.
//   bounded_uniform_mixture independent uniform coefficients scaled to match
//                           the covariance exactly; support is exactly
//                           bounded by sqrt(3 tr Q).
enum class DistributionKind {
  truncated_gaussian,
  raw_gaussian,
  bounded_uniform_mixture,
};

// Planted-spike covariance model. The basis is orthonormal, eigenvalues are
// positive and descending with a strict gap between the first two; the spike
// is the first basis column.
class SpikedModel {
 public:
  // radius = 0 picks the kind's default: 4 sqrt(tr Q) for the Gaussian kinds,
  // sqrt(3 tr Q) for the bounded kind.
  SpikedModel(Vector eigenvalues, Matrix basis, DistributionKind kind,
              double radius = 0);
  static SpikedModel with_random_basis(Vector eigenvalues, DistributionKind kind,
                                       std::uint64_t seed, double radius = 0);

  Eigen::Index dim() const { return eigenvalues_.size(); }
  const Vector& eigenvalues() const { return eigenvalues_; }
  const Matrix& basis() const { return basis_; }
  DistributionKind kind() const { return kind_; }
  double radius() const { return radius_; }

  Vector spike() const { return basis_.col(0); }
  SymMatrix covariance() const;
  double lambda1() const { return eigenvalues_[0]; }
  double lambda2() const { return eigenvalues_[1]; }
  double gap() const { return eigenvalues_[0] - eigenvalues_[1]; }
  double trace() const { return eigenvalues_.sum(); }

 private:
  Vector eigenvalues_;
  Matrix basis_;
  DistributionKind kind_;
  double radius_;
};

// Perturbation source added on top of q. The first four kinds emit
// ||v|| <= V exactly; gaussian_noise draws v from a zero-mean Gaussian with
// its own eigenvalue schedule and random basis, so its norm is unbounded and
// V is reported as sqrt(mu_1), an effective scale rather than a bound.
enum class AdversaryKind {
  none,
  fixed_vector,
  rotating,
  greedy_orthogonal,
  gaussian_noise,
};

struct AdversarySpec {
  AdversaryKind kind = AdversaryKind::none;
  double v_bound = 0;           // V (ignored for none and gaussian_noise)
  Vector direction;             // fixed_vector: emitted as V * direction/||direction||
  long rotation_period = 1;     // rotating: full turn every this many records
  std::uint64_t seed = 0;       // gaussian_noise basis draw
  Vector noise_eigenvalues;     // gaussian_noise: mu, descending non-negative
  double requested_norm = -1;   // greedy_orthogonal: emitted norm is
                                // min(V, requested); negative means V
};

// Effective perturbation magnitude used by the gap condition.
double effective_v(const AdversarySpec& adv);

// One stream element. x = q + v holds exactly by construction; q and v are
// retained for diagnostics. Records loaded from an unsplit file carry
// split_known = false and are rejected by split-dependent diagnostics.
struct StreamRecord {
  Vector x;
  Vector q;
  Vector v;
  bool split_known = true;
};

struct Block {
  std::vector<StreamRecord> records;
  long index = 0;  // 1-based position within its stream, 0 for standalone
};

struct ModelCheckReport {
  bool gap_condition_ok = false;
  // delta - V sqrt(2 lambda1 + V^2); positive iff the gap condition holds.
  double slack = 0;
  // (delta^2 - V^2 (V^2 + 2 lambda1)) / (72 lambda1): the step/blocking
  // analysis has room to work iff this is positive (equivalent to slack > 0).
  double epsilon_available = 0;
  std::vector<std::string> messages;
};

ModelCheckReport validate_model(const SpikedModel& model, const AdversarySpec& adv);

// Stateful sampler for one stream: owns the signal and perturbation RNG
// streams (seeded deterministically from `seed`), the rotating phase and the
// greedy reference. Identical (model, adv, seed) reproduce streams
// bit-identically.
class StreamGenerator {
 public:
  StreamGenerator(const SpikedModel& model, const AdversarySpec& adv,
                  std::uint64_t seed);

  Block next_block(long block_len);

  // Reference direction the greedy_orthogonal adversary avoids; defaults to
  // the model spike.
  void set_reference(const Vector& w);

  long samples_emitted() const { return counter_; }
  // Max ||q|| seen so far; the effective support radius for raw_gaussian.
  double max_observed_norm() const { return max_norm_; }
  const SpikedModel& model() const { return model_; }

 private:
  Vector sample_q();
  Vector sample_v();

  SpikedModel model_;
  AdversarySpec adv_;
  std::mt19937_64 rng_q_;
  std::mt19937_64 rng_v_;
  Matrix noise_basis_;   // gaussian_noise only
  Vector fixed_v_;       // fixed_vector only
  Vector reference_;
  long counter_ = 0;
  long blocks_ = 0;
  double max_norm_ = 0;
};

// One-shot convenience: a fresh generator (fresh phase/reference) sampling a
// single standalone block.
Block sample_block(const SpikedModel& model, const AdversarySpec& adv,
                   long block_len, std::uint64_t seed);

// D = sum q q^T - l Q + sum (q v^T + v q^T), the deviation of the block's
// signal second moment from its expectation plus the signal/perturbation
// cross term. The block's observed sum X = sum x x^T decomposes as
// X = l Q + sum v v^T + D.
SymMatrix residual_matrix(const Block& block, const SpikedModel& model);

// Smallest block length making Pr(||D/l|| >= epsilon) <= p simultaneously
// over `horizon` blocks, via the matrix concentration bound
// 2 d horizon exp(-epsilon^2 l / (128 R^4)):
// l = ceil(128 R^4 ln(2 d horizon / p) / epsilon^2).
std::int64_t block_length_for(double epsilon, double p, Eigen::Index d,
                              std::int64_t horizon, double radius);

// Monte Carlo estimate of Pr(||D/l||_2 >= epsilon) over `trials` fresh
// blocks; deterministic given seed.
double empirical_hoeffding_check(const SpikedModel& model, const AdversarySpec& adv,
                                 long block_len, double epsilon, long trials,
                                 std::uint64_t seed);

// SplitMix64 step; used to derive independent sub-stream seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream_id);

}  // namespace streampca
