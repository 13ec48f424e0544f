#include "streampca/stream_model.hpp"

#include <cmath>
#include <sstream>

#include "streampca/constants.hpp"

namespace streampca {

namespace {

Matrix random_orthonormal_basis(Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  }
  return q;
}

void check_adversary(const AdversarySpec& adv, Eigen::Index d) {
  if (!std::isfinite(adv.v_bound) || adv.v_bound < 0) {
    throw InvalidInput("adversary: V must be finite and non-negative");
  }
  switch (adv.kind) {
    case AdversaryKind::none:
      break;
    case AdversaryKind::fixed_vector:
      if (adv.direction.size() != d) {
        throw InvalidInput("adversary: direction dimension mismatch");
      }
      if (!adv.direction.allFinite() || adv.direction.norm() == 0.0) {
        throw InvalidInput("adversary: direction must be finite and nonzero");
      }
      break;
    case AdversaryKind::rotating:
      if (adv.rotation_period < 1) {
        throw InvalidInput("adversary: rotation period must be >= 1");
      }
      break;
    case AdversaryKind::greedy_orthogonal:
      if (adv.requested_norm >= 0 && !std::isfinite(adv.requested_norm)) {
        throw InvalidInput("adversary: requested norm must be finite");
      }
      break;
    case AdversaryKind::gaussian_noise:
      if (adv.noise_eigenvalues.size() != d) {
        throw InvalidInput("adversary: noise eigenvalue count != d");
      }
      if (!adv.noise_eigenvalues.allFinite() ||
          adv.noise_eigenvalues.minCoeff() < 0) {
        throw InvalidInput("adversary: noise eigenvalues must be finite and >= 0");
      }
      break;
  }
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream_id) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream_id + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

SpikedModel::SpikedModel(Vector eigenvalues, Matrix basis, DistributionKind kind,
                         double radius)
    : eigenvalues_(std::move(eigenvalues)),
      basis_(std::move(basis)),
      kind_(kind),
      radius_(radius) {
  const Eigen::Index d = eigenvalues_.size();
  if (d < 2) throw InvalidInput("SpikedModel: need dimension >= 2");
  if (basis_.rows() != d || basis_.cols() != d) {
    throw InvalidInput("SpikedModel: basis shape does not match eigenvalues");
  }
  if (!eigenvalues_.allFinite() || !basis_.allFinite()) {
    throw InvalidInput("SpikedModel: non-finite entries");
  }
  if (eigenvalues_.minCoeff() <= 0) {
    throw ModelViolation("SpikedModel: eigenvalues must be positive");
  }
  for (Eigen::Index i = 0; i + 1 < d; ++i) {
    if (eigenvalues_[i] < eigenvalues_[i + 1]) {
      throw ModelViolation("SpikedModel: eigenvalues must be descending");
    }
  }
  if (!(eigenvalues_[0] > eigenvalues_[1])) {
    throw ModelViolation("SpikedModel: lambda1 > lambda2 must hold strictly");
  }
  const double ortho =
      (basis_.transpose() * basis_ - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
  if (ortho > tol::kOrthonormal) {
    throw InvalidInput("SpikedModel: basis is not orthonormal (deviation " +
                       std::to_string(ortho) + ")");
  }

  const double tr = eigenvalues_.sum();
  const double bounded_support = std::sqrt(3.0 * tr);
  if (radius_ == 0) {
    radius_ = (kind_ == DistributionKind::bounded_uniform_mixture)
                  ? bounded_support
                  : 4.0 * std::sqrt(tr);
  }
  if (!std::isfinite(radius_) || radius_ <= 0) {
    throw InvalidInput("SpikedModel: radius must be positive");
  }
  if (kind_ == DistributionKind::bounded_uniform_mixture &&
      radius_ < bounded_support * (1.0 - 1e-12)) {
    throw InvalidInput(
        "SpikedModel: radius below the sqrt(3 tr Q) support of the bounded kind");
  }
}

SpikedModel SpikedModel::with_random_basis(Vector eigenvalues, DistributionKind kind,
                                           std::uint64_t seed, double radius) {
  const Eigen::Index d = eigenvalues.size();
  if (d < 2) throw InvalidInput("SpikedModel: need dimension >= 2");
  return SpikedModel(std::move(eigenvalues), random_orthonormal_basis(d, seed),
                     kind, radius);
}

SymMatrix SpikedModel::covariance() const {
  Matrix q = basis_ * eigenvalues_.asDiagonal() * basis_.transpose();
  return SymMatrix::symmetrized(q);
}

double effective_v(const AdversarySpec& adv) {
  switch (adv.kind) {
    case AdversaryKind::none:
      return 0.0;
    case AdversaryKind::gaussian_noise:
      return adv.noise_eigenvalues.size() > 0
                 ? std::sqrt(adv.noise_eigenvalues.maxCoeff())
                 : 0.0;
    default:
      return adv.v_bound;
  }
}

ModelCheckReport validate_model(const SpikedModel& model, const AdversarySpec& adv) {
  check_adversary(adv, model.dim());

  const double lambda1 = model.lambda1();
  const double delta = model.gap();
  const double v = effective_v(adv);

  ModelCheckReport report;
  report.slack = delta - v * std::sqrt(2.0 * lambda1 + v * v);
  report.epsilon_available =
      (delta * delta - v * v * (v * v + 2.0 * lambda1)) / (72.0 * lambda1);
  report.gap_condition_ok = report.slack > 0;

  if (!report.gap_condition_ok) {
    report.messages.push_back(
        "gap condition failed: delta <= V sqrt(2 lambda1 + V^2) (delta=" +
        fmt(delta) + ", V sqrt(2 lambda1 + V^2)=" + fmt(delta - report.slack) + ")");
  }
  if (model.kind() == DistributionKind::raw_gaussian) {
    report.messages.push_back(
        "raw_gaussian signal support is unbounded; radius R=" + fmt(model.radius()) +
        " is nominal, effective R is the generator's max observed norm");
  }
  if (adv.kind == AdversaryKind::gaussian_noise) {
    report.messages.push_back(
        "gaussian_noise perturbation norm is unbounded; V=sqrt(mu1)=" + fmt(v) +
        " is an effective scale, not a bound");
  }
  return report;
}

StreamGenerator::StreamGenerator(const SpikedModel& model, const AdversarySpec& adv,
                                 std::uint64_t seed)
    : model_(model),
      adv_(adv),
      rng_q_(derive_seed(seed, 0)),
      rng_v_(derive_seed(seed, 1)) {
  check_adversary(adv_, model_.dim());
  if (adv_.kind == AdversaryKind::gaussian_noise) {
    noise_basis_ = random_orthonormal_basis(model_.dim(), adv_.seed);
  }
  if (adv_.kind == AdversaryKind::fixed_vector) {
    fixed_v_ = adv_.v_bound * adv_.direction / adv_.direction.norm();
  }
  reference_ = model_.spike();
}

void StreamGenerator::set_reference(const Vector& w) {
  if (w.size() != model_.dim()) {
    throw InvalidInput("set_reference: dimension mismatch");
  }
  const double n = w.norm();
  if (!w.allFinite() || n < tol::kDegenerateNorm) {
    throw InvalidInput("set_reference: reference must be finite and nonzero");
  }
  reference_ = w / n;
}

Vector StreamGenerator::sample_q() {
  const Eigen::Index d = model_.dim();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Vector z(d);

  for (;;) {
    if (model_.kind() == DistributionKind::bounded_uniform_mixture) {
      for (Eigen::Index i = 0; i < d; ++i) {
        z[i] = std::sqrt(3.0 * model_.eigenvalues()[i]) * uniform(rng_q_);
      }
    } else {
      for (Eigen::Index i = 0; i < d; ++i) {
        z[i] = std::sqrt(model_.eigenvalues()[i]) * normal(rng_q_);
      }
    }
    Vector q = model_.basis() * z;
    if (model_.kind() == DistributionKind::truncated_gaussian &&
        q.norm() > model_.radius()) {
      continue;  // rejection keeps the support inside the radius
    }
    max_norm_ = std::max(max_norm_, q.norm());
    return q;
  }
}

Vector StreamGenerator::sample_v() {
  const Eigen::Index d = model_.dim();
  switch (adv_.kind) {
    case AdversaryKind::none:
      return Vector::Zero(d);
    case AdversaryKind::fixed_vector:
      return fixed_v_;
    case AdversaryKind::rotating: {
      const double theta = 2.0 * M_PI *
                           static_cast<double>(counter_ % adv_.rotation_period) /
                           static_cast<double>(adv_.rotation_period);
      Vector v = Vector::Zero(d);
      v[0] = adv_.v_bound * std::cos(theta);
      v[1] = adv_.v_bound * std::sin(theta);
      return v;
    }
    case AdversaryKind::greedy_orthogonal: {
      std::normal_distribution<double> normal(0.0, 1.0);
      const double target = adv_.requested_norm < 0
                                ? adv_.v_bound
                                : std::min(adv_.v_bound, adv_.requested_norm);
      for (;;) {
        Vector g(d);
        for (Eigen::Index i = 0; i < d; ++i) g[i] = normal(rng_v_);
        Vector u = g - g.dot(reference_) * reference_;
        const double n = u.norm();
        if (n > 1e-12 * g.norm()) return (target / n) * u;
      }
    }
    case AdversaryKind::gaussian_noise: {
      std::normal_distribution<double> normal(0.0, 1.0);
      Vector z(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        z[i] = std::sqrt(adv_.noise_eigenvalues[i]) * normal(rng_v_);
      }
      return noise_basis_ * z;
    }
  }
  throw InvalidInput("sample_v: unknown adversary kind");
}

Block StreamGenerator::next_block(long block_len) {
  if (block_len < 1) throw InvalidInput("next_block: block length must be >= 1");
  Block block;
  block.index = ++blocks_;
  block.records.reserve(static_cast<size_t>(block_len));
  for (long i = 0; i < block_len; ++i) {
    StreamRecord rec;
    rec.q = sample_q();
    rec.v = sample_v();
    rec.x = rec.q + rec.v;
    block.records.push_back(std::move(rec));
    ++counter_;
  }
  return block;
}

Block sample_block(const SpikedModel& model, const AdversarySpec& adv,
                   long block_len, std::uint64_t seed) {
  StreamGenerator gen(model, adv, seed);
  Block block = gen.next_block(block_len);
  block.index = 0;
  return block;
}

SymMatrix residual_matrix(const Block& block, const SpikedModel& model) {
  if (block.records.empty()) throw InvalidInput("residual_matrix: empty block");
  const Eigen::Index d = model.dim();
  Matrix acc = -static_cast<double>(block.records.size()) * model.covariance().mat();
  for (const StreamRecord& rec : block.records) {
    if (rec.q.size() != d || rec.v.size() != d) {
      throw InvalidInput("residual_matrix: record dimension mismatch");
    }
    if (!rec.split_known) {
      throw InvalidInput("residual_matrix: block lacks the q/v split");
    }
    acc.noalias() += rec.q * rec.q.transpose();
    acc.noalias() += rec.q * rec.v.transpose();
    acc.noalias() += rec.v * rec.q.transpose();
  }
  return SymMatrix::symmetrized(acc);
}

std::int64_t block_length_for(double epsilon, double p, Eigen::Index d,
                              std::int64_t horizon, double radius) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    throw InvalidInput("block_length_for: epsilon must be positive");
  }
  if (!(p > 0 && p < 1)) {
    throw InvalidInput("block_length_for: p must lie in (0, 1)");
  }
  if (d < 1) throw InvalidInput("block_length_for: d must be >= 1");
  if (horizon < 1) throw InvalidInput("block_length_for: horizon must be >= 1");
  if (!(radius > 0) || !std::isfinite(radius)) {
    throw InvalidInput("block_length_for: radius must be positive");
  }
  const double r4 = radius * radius * radius * radius;
  const double value = 128.0 * r4 *
                       std::log(2.0 * static_cast<double>(d) *
                                static_cast<double>(horizon) / p) /
                       (epsilon * epsilon);
  if (!(value < 9.0e18)) {
    throw InvalidInput("block_length_for: required block length overflows");
  }
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(value)));
}

double empirical_hoeffding_check(const SpikedModel& model, const AdversarySpec& adv,
                                 long block_len, double epsilon, long trials,
                                 std::uint64_t seed) {
  if (block_len < 1) throw InvalidInput("empirical_hoeffding_check: block_len >= 1");
  if (trials < 1) throw InvalidInput("empirical_hoeffding_check: trials >= 1");
  if (!(epsilon > 0)) {
    throw InvalidInput("empirical_hoeffding_check: epsilon must be positive");
  }
  StreamGenerator gen(model, adv, seed);
  long exceed = 0;
  for (long t = 0; t < trials; ++t) {
    Block block = gen.next_block(block_len);
    const double dev = norms(residual_matrix(block, model)).spectral /
                       static_cast<double>(block_len);
    if (dev >= epsilon) ++exceed;
  }
  return static_cast<double>(exceed) / static_cast<double>(trials);
}

}  // namespace streampca
