#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "streampca/errors.hpp"
#include "streampca/stream_model.hpp"

using namespace streampca;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

SpikedModel small_model(DistributionKind kind, std::uint64_t seed = 5) {
  Vector ev(3);
  ev << 2.0, 0.8, 0.3;
  return SpikedModel::with_random_basis(ev, kind, seed);
}

}  // namespace

TEST_CASE("SpikedModel construction enforces its invariants") {
  Vector ev = vec2(2.0, 1.0);
  CHECK_NOTHROW(SpikedModel(ev, Matrix::Identity(2, 2),
                            DistributionKind::bounded_uniform_mixture));

  CHECK_THROWS_AS(SpikedModel(vec2(1.0, 1.0), Matrix::Identity(2, 2),
                              DistributionKind::raw_gaussian),
                  ModelViolation);
  CHECK_THROWS_AS(SpikedModel(vec2(1.0, 2.0), Matrix::Identity(2, 2),
                              DistributionKind::raw_gaussian),
                  ModelViolation);
  CHECK_THROWS_AS(SpikedModel(vec2(1.0, -0.5), Matrix::Identity(2, 2),
                              DistributionKind::raw_gaussian),
                  ModelViolation);

  Matrix skewed(2, 2);
  skewed << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(SpikedModel(ev, skewed, DistributionKind::raw_gaussian),
                  InvalidInput);

  Vector one(1);
  one << 1.0;
  CHECK_THROWS_AS(SpikedModel(one, Matrix::Identity(1, 1),
                              DistributionKind::raw_gaussian),
                  InvalidInput);

  // Defaults: 4 sqrt(tr Q) for Gaussian kinds, sqrt(3 tr Q) for bounded.
  SpikedModel g(ev, Matrix::Identity(2, 2), DistributionKind::truncated_gaussian);
  CHECK(g.radius() == doctest::Approx(4.0 * std::sqrt(3.0)).epsilon(1e-12));
  SpikedModel b(ev, Matrix::Identity(2, 2), DistributionKind::bounded_uniform_mixture);
  CHECK(b.radius() == doctest::Approx(std::sqrt(9.0)).epsilon(1e-12));
  CHECK_THROWS_AS(SpikedModel(ev, Matrix::Identity(2, 2),
                              DistributionKind::bounded_uniform_mixture, 1.0),
                  InvalidInput);

  SpikedModel r1 = SpikedModel::with_random_basis(ev, DistributionKind::raw_gaussian, 42);
  SpikedModel r2 = SpikedModel::with_random_basis(ev, DistributionKind::raw_gaussian, 42);
  CHECK((r1.basis() - r2.basis()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r1.basis().transpose() * r1.basis() - Matrix::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("validate_model: gap condition slack and epsilon") {
  // No perturbation: slack equals the eigenvalue gap.
  SpikedModel m(vec2(2.0, 1.0), Matrix::Identity(2, 2),
                DistributionKind::bounded_uniform_mixture);
  ModelCheckReport r0 = validate_model(m, AdversarySpec{});
  CHECK(r0.gap_condition_ok);
  CHECK(r0.slack == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r0.epsilon_available == doctest::Approx(1.0 / 144.0).epsilon(1e-14));

  // lambda1 = 15, lambda2 = 4.5, V = sqrt(3):
  // slack = 10.5 - sqrt(99), eps = (110.25 - 99)/1080.
  Vector ev(3);
  ev << 15.0, 4.5, 1.35;
  SpikedModel wide(ev, Matrix::Identity(3, 3), DistributionKind::raw_gaussian);
  AdversarySpec adv;
  adv.kind = AdversaryKind::fixed_vector;
  adv.v_bound = std::sqrt(3.0);
  adv.direction = Vector::Unit(3, 1);
  ModelCheckReport rp = validate_model(wide, adv);
  CHECK(rp.gap_condition_ok);
  CHECK(rp.slack == doctest::Approx(10.5 - std::sqrt(99.0)).epsilon(1e-12));
  CHECK(rp.slack == doctest::Approx(0.5501256289338).epsilon(1e-9));
  CHECK(rp.epsilon_available == doctest::Approx(11.25 / 1080.0).epsilon(1e-12));

  // Tiny gap, big perturbation: fails.
  SpikedModel weak(vec2(1.0, 0.99), Matrix::Identity(2, 2),
                   DistributionKind::raw_gaussian);
  AdversarySpec strong;
  strong.kind = AdversaryKind::fixed_vector;
  strong.v_bound = 1.0;
  strong.direction = Vector::Unit(2, 0);
  ModelCheckReport rw = validate_model(weak, strong);
  CHECK_FALSE(rw.gap_condition_ok);
  CHECK(rw.slack < 0);
  CHECK_FALSE(rw.messages.empty());

  // Unbounded kinds are flagged.
  ModelCheckReport rraw = validate_model(wide, AdversarySpec{});
  bool flagged = false;
  for (const auto& msg : rraw.messages) {
    if (msg.find("raw_gaussian") != std::string::npos) flagged = true;
  }
  CHECK(flagged);
}

TEST_CASE("effective_v per adversary kind") {
  AdversarySpec none;
  none.v_bound = 3.0;  // ignored for kind none
  CHECK(effective_v(none) == 0.0);

  AdversarySpec gn;
  gn.kind = AdversaryKind::gaussian_noise;
  gn.noise_eigenvalues = vec2(3.0, 0.9);
  CHECK(effective_v(gn) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));

  AdversarySpec fv;
  fv.kind = AdversaryKind::fixed_vector;
  fv.v_bound = 0.25;
  fv.direction = vec2(1, 0);
  CHECK(effective_v(fv) == 0.25);
}

TEST_CASE("streams are deterministic given the seed") {
  SpikedModel m = small_model(DistributionKind::truncated_gaussian);
  AdversarySpec adv;
  adv.kind = AdversaryKind::greedy_orthogonal;
  adv.v_bound = 0.3;

  StreamGenerator g1(m, adv, 99);
  StreamGenerator g2(m, adv, 99);
  for (int t = 0; t < 5; ++t) {
    Block b1 = g1.next_block(7);
    Block b2 = g2.next_block(7);
    for (size_t i = 0; i < b1.records.size(); ++i) {
      CHECK((b1.records[i].x - b2.records[i].x).cwiseAbs().maxCoeff() == 0.0);
      CHECK((b1.records[i].q - b2.records[i].q).cwiseAbs().maxCoeff() == 0.0);
      CHECK((b1.records[i].v - b2.records[i].v).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  StreamGenerator g3(m, adv, 100);
  Block b3 = g3.next_block(7);
  Block b1 = StreamGenerator(m, adv, 99).next_block(7);
  CHECK((b1.records[0].q - b3.records[0].q).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("adversary emissions") {
  SpikedModel m = small_model(DistributionKind::bounded_uniform_mixture);

  SUBCASE("none: v is exactly zero") {
    Block b = sample_block(m, AdversarySpec{}, 20, 1);
    for (const auto& rec : b.records) {
      CHECK(rec.v.cwiseAbs().maxCoeff() == 0.0);
      CHECK((rec.x - rec.q).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  SUBCASE("fixed_vector: constant V * unit direction") {
    AdversarySpec adv;
    adv.kind = AdversaryKind::fixed_vector;
    adv.v_bound = 0.5;
    adv.direction = 2.0 * Vector::Unit(3, 0);  // normalization happens inside
    Block b = sample_block(m, adv, 10, 2);
    for (const auto& rec : b.records) {
      CHECK(rec.v[0] == doctest::Approx(0.5).epsilon(1e-15));
      CHECK(rec.v[1] == 0.0);
      CHECK(rec.v[2] == 0.0);
    }
  }

  SUBCASE("rotating: unit-period phase and exact norm") {
    AdversarySpec adv;
    adv.kind = AdversaryKind::rotating;
    adv.v_bound = 0.25;
    adv.rotation_period = 8;
    StreamGenerator gen(m, adv, 3);
    Block b = gen.next_block(16);
    for (const auto& rec : b.records) {
      CHECK(rec.v.norm() == doctest::Approx(0.25).epsilon(1e-12));
    }
    CHECK((b.records[0].v - b.records[8].v).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((b.records[0].v - b.records[4].v).norm() > 0.4);  // opposite phase
  }

  SUBCASE("greedy_orthogonal: orthogonal to the reference, exact norm") {
    AdversarySpec adv;
    adv.kind = AdversaryKind::greedy_orthogonal;
    adv.v_bound = 0.4;
    StreamGenerator gen(m, adv, 4);
    Block b = gen.next_block(25);
    for (const auto& rec : b.records) {
      CHECK(std::abs(rec.v.dot(m.spike())) < 1e-9);
      CHECK(rec.v.norm() == doctest::Approx(0.4).epsilon(1e-12));
    }

    auto rng = oracle::rng(77);
    Vector ref = oracle::random_unit(rng, 3);
    gen.set_reference(ref);
    Block b2 = gen.next_block(25);
    for (const auto& rec : b2.records) {
      CHECK(std::abs(rec.v.dot(ref)) < 1e-9);
    }

    adv.requested_norm = 0.1;  // below V: honored
    StreamGenerator gen2(m, adv, 4);
    CHECK(gen2.next_block(1).records[0].v.norm() ==
          doctest::Approx(0.1).epsilon(1e-12));
    adv.requested_norm = 5.0;  // above V: clamped to V
    StreamGenerator gen3(m, adv, 4);
    CHECK(gen3.next_block(1).records[0].v.norm() ==
          doctest::Approx(0.4).epsilon(1e-12));
  }

  SUBCASE("gaussian_noise: reproducible, covariance close to its schedule") {
    AdversarySpec adv;
    adv.kind = AdversaryKind::gaussian_noise;
    adv.seed = 11;
    Vector mu(3);
    mu << 1.5, 0.6, 0.2;
    adv.noise_eigenvalues = mu;

    StreamGenerator gen(m, adv, 5);
    const long n = 20000;
    Block b = gen.next_block(n);
    Matrix cov = Matrix::Zero(3, 3);
    for (const auto& rec : b.records) {
      cov.noalias() += rec.v * rec.v.transpose();
    }
    cov /= static_cast<double>(n);
    // Compare spectra (basis is random): within 10% of mu_1.
    SymMatrix c = SymMatrix::symmetrized(cov);
    EigenDecomposition ed = eig_sym(c);
    CHECK((ed.eigenvalues - mu).cwiseAbs().maxCoeff() < 0.1 * mu[0]);
  }
}

TEST_CASE("signal distribution sanity and bounded support") {
  SUBCASE("truncated_gaussian: empirical mean and covariance") {
    Vector ev(5);
    ev << 3.0, 1.0, 0.5, 0.25, 0.1;
    SpikedModel m = SpikedModel::with_random_basis(
        ev, DistributionKind::truncated_gaussian, 21);
    const long n = 10000;
    Block b = sample_block(m, AdversarySpec{}, n, 6);

    Vector mean = Vector::Zero(5);
    Matrix cov = Matrix::Zero(5, 5);
    for (const auto& rec : b.records) {
      CHECK(rec.q.norm() <= m.radius() + 1e-9);
      mean += rec.q;
      cov.noalias() += rec.q * rec.q.transpose();
    }
    mean /= static_cast<double>(n);
    cov /= static_cast<double>(n);
    CHECK(mean.norm() <= 4.0 * m.radius() / std::sqrt(static_cast<double>(n)));
    const double dev =
        norms(SymMatrix::symmetrized(cov - m.covariance().mat())).spectral;
    CHECK(dev < 0.1 * m.lambda1());
  }

  SUBCASE("bounded_uniform_mixture: exact support bound, covariance matches") {
    Vector ev(4);
    ev << 2.0, 1.0, 0.5, 0.2;
    SpikedModel m = SpikedModel::with_random_basis(
        ev, DistributionKind::bounded_uniform_mixture, 22);
    const long n = 20000;
    Block b = sample_block(m, AdversarySpec{}, n, 7);
    Matrix cov = Matrix::Zero(4, 4);
    for (const auto& rec : b.records) {
      CHECK(rec.q.norm() <= m.radius() + 1e-9);
      cov.noalias() += rec.q * rec.q.transpose();
    }
    cov /= static_cast<double>(n);
    const double dev =
        norms(SymMatrix::symmetrized(cov - m.covariance().mat())).spectral;
    CHECK(dev < 0.1 * m.lambda1());
  }

  SUBCASE("x = q + v exactly, ||x|| <= R + V for bounded kinds") {
    SpikedModel m = small_model(DistributionKind::truncated_gaussian, 23);
    AdversarySpec adv;
    adv.kind = AdversaryKind::rotating;
    adv.v_bound = 0.7;
    adv.rotation_period = 5;
    Block b = sample_block(m, adv, 500, 8);
    for (const auto& rec : b.records) {
      CHECK((rec.x - (rec.q + rec.v)).cwiseAbs().maxCoeff() == 0.0);
      CHECK(rec.x.norm() <= m.radius() + adv.v_bound + 1e-9);
    }
  }

  SUBCASE("raw_gaussian: effective radius tracked") {
    SpikedModel m = small_model(DistributionKind::raw_gaussian, 24);
    StreamGenerator gen(m, AdversarySpec{}, 9);
    gen.next_block(1000);
    CHECK(gen.max_observed_norm() > 0.0);
    CHECK(gen.samples_emitted() == 1000);
  }
}

TEST_CASE("residual_matrix") {
  SUBCASE("all-zero signal gives -l Q") {
    // Effectively a point mass at zero (eigenvalues must stay positive).
    SpikedModel m(vec2(1.0, 0.5), Matrix::Identity(2, 2),
                  DistributionKind::bounded_uniform_mixture);
    Block b;
    for (int i = 0; i < 3; ++i) {
      StreamRecord rec;
      rec.q = Vector::Zero(2);
      rec.v = Vector::Zero(2);
      rec.x = Vector::Zero(2);
      b.records.push_back(rec);
    }
    SymMatrix d = residual_matrix(b, m);
    CHECK((d.mat() + 3.0 * m.covariance().mat()).cwiseAbs().maxCoeff() < 1e-14);
  }

  SUBCASE("single record q = e1, v = e2 against a rank-one-ish Q") {
    // Q = diag(1, ~0): the second eigenvalue must be positive, so use a
    // negligible one and compare within 1e-12.
    SpikedModel m(vec2(1.0, 1e-300), Matrix::Identity(2, 2),
                  DistributionKind::raw_gaussian);
    Block b;
    StreamRecord rec;
    rec.q = vec2(1, 0);
    rec.v = vec2(0, 1);
    rec.x = rec.q + rec.v;
    b.records.push_back(rec);
    SymMatrix d = residual_matrix(b, m);
    Matrix want(2, 2);
    want << 0, 1, 1, 0;
    CHECK((d.mat() - want).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("decomposition identity X = l Q + sum vv^T + D") {
    SpikedModel m = small_model(DistributionKind::truncated_gaussian, 31);
    AdversarySpec adv;
    adv.kind = AdversaryKind::greedy_orthogonal;
    adv.v_bound = 0.6;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Block b = sample_block(m, adv, 11, 100 + seed);
      SymMatrix d = residual_matrix(b, m);
      Matrix x_sum = Matrix::Zero(3, 3);
      Matrix v_sum = Matrix::Zero(3, 3);
      for (const auto& rec : b.records) {
        x_sum.noalias() += rec.x * rec.x.transpose();
        v_sum.noalias() += rec.v * rec.v.transpose();
      }
      Matrix rhs = 11.0 * m.covariance().mat() + v_sum + d.mat();
      const double scale = 1.0 + x_sum.cwiseAbs().maxCoeff();
      CHECK((x_sum - rhs).cwiseAbs().maxCoeff() < 1e-10 * scale);
    }
  }

  SUBCASE("errors") {
    SpikedModel m = small_model(DistributionKind::raw_gaussian, 32);
    Block empty;
    CHECK_THROWS_AS(residual_matrix(empty, m), InvalidInput);

    Block wrong;
    StreamRecord rec;
    rec.q = vec2(1, 0);
    rec.v = vec2(0, 0);
    rec.x = rec.q;
    wrong.records.push_back(rec);
    CHECK_THROWS_AS(residual_matrix(wrong, m), InvalidInput);

    Block unsplit = sample_block(m, AdversarySpec{}, 2, 1);
    for (auto& r : unsplit.records) r.split_known = false;
    CHECK_THROWS_AS(residual_matrix(unsplit, m), InvalidInput);
  }
}

TEST_CASE("block_length_for: frozen values, scaling, errors") {
  // 128 * ln(80) / 0.25 = 512 ln 80 = 2243.5976... -> 2244.
  CHECK(block_length_for(0.5, 0.05, 2, 1, 1.0) == 2244);
  // R doubled: 16x the real value, 35897.56... -> 35898.
  CHECK(block_length_for(0.5, 0.05, 2, 1, 2.0) == 35898);
  // epsilon = 1: 128 ln 80 = 560.899... -> 561.
  CHECK(block_length_for(1.0, 0.05, 2, 1, 1.0) == 561);

  // Monotonicity in the union-bound horizon and dimension.
  CHECK(block_length_for(0.5, 0.05, 2, 10, 1.0) > 2244);
  CHECK(block_length_for(0.5, 0.05, 20, 1, 1.0) > 2244);

  CHECK_THROWS_AS(block_length_for(0.0, 0.05, 2, 1, 1.0), InvalidInput);
  CHECK_THROWS_AS(block_length_for(-1.0, 0.05, 2, 1, 1.0), InvalidInput);
  CHECK_THROWS_AS(block_length_for(0.5, 0.0, 2, 1, 1.0), InvalidInput);
  CHECK_THROWS_AS(block_length_for(0.5, 1.0, 2, 1, 1.0), InvalidInput);
  CHECK_THROWS_AS(block_length_for(0.5, 0.05, 0, 1, 1.0), InvalidInput);
  CHECK_THROWS_AS(block_length_for(0.5, 0.05, 2, 0, 1.0), InvalidInput);
  CHECK_THROWS_AS(block_length_for(0.5, 0.05, 2, 1, 0.0), InvalidInput);
}

TEST_CASE("empirical_hoeffding_check") {
  SUBCASE("near point mass at zero never deviates") {
    SpikedModel tiny(vec2(1e-300, 5e-301), Matrix::Identity(2, 2),
                     DistributionKind::bounded_uniform_mixture);
    CHECK(empirical_hoeffding_check(tiny, AdversarySpec{}, 4, 1e-6, 200, 1) == 0.0);
  }

  SUBCASE("single sample always deviates at epsilon ~ 0") {
    SpikedModel m(vec2(1.0, 0.5), Matrix::Identity(2, 2),
                  DistributionKind::bounded_uniform_mixture);
    CHECK(empirical_hoeffding_check(m, AdversarySpec{}, 1, 1e-12, 500, 2) >= 0.999);
  }

  SUBCASE("the derived block length meets its failure budget") {
    SpikedModel m(vec2(1.0, 0.5), Matrix::Identity(2, 2),
                  DistributionKind::bounded_uniform_mixture);
    AdversarySpec adv;
    adv.kind = AdversaryKind::fixed_vector;
    adv.v_bound = 0.5;
    adv.direction = vec2(0, 1);
    const double eps = 1.0;
    const double p = 0.05;
    const std::int64_t l = block_length_for(eps, p, 2, 1, m.radius());
    const long trials = 300;
    const double rate = empirical_hoeffding_check(m, adv, l, eps, trials, 3);
    CHECK(rate <= p + 3.0 * std::sqrt(p / static_cast<double>(trials)));
  }

  SUBCASE("errors") {
    SpikedModel m(vec2(1.0, 0.5), Matrix::Identity(2, 2),
                  DistributionKind::bounded_uniform_mixture);
    CHECK_THROWS_AS(empirical_hoeffding_check(m, AdversarySpec{}, 0, 1.0, 10, 1),
                    InvalidInput);
    CHECK_THROWS_AS(empirical_hoeffding_check(m, AdversarySpec{}, 1, 0.0, 10, 1),
                    InvalidInput);
    CHECK_THROWS_AS(empirical_hoeffding_check(m, AdversarySpec{}, 1, 1.0, 0, 1),
                    InvalidInput);
  }
}

TEST_CASE("adversary spec validation") {
  SpikedModel m = small_model(DistributionKind::raw_gaussian, 41);

  AdversarySpec bad_dir;
  bad_dir.kind = AdversaryKind::fixed_vector;
  bad_dir.v_bound = 1.0;
  bad_dir.direction = Vector::Zero(3);
  CHECK_THROWS_AS(validate_model(m, bad_dir), InvalidInput);

  AdversarySpec bad_dim;
  bad_dim.kind = AdversaryKind::gaussian_noise;
  bad_dim.noise_eigenvalues = vec2(1.0, 0.5);
  CHECK_THROWS_AS(validate_model(m, bad_dim), InvalidInput);

  AdversarySpec neg;
  neg.kind = AdversaryKind::rotating;
  neg.v_bound = -0.5;
  CHECK_THROWS_AS(validate_model(m, neg), InvalidInput);

  AdversarySpec period;
  period.kind = AdversaryKind::rotating;
  period.rotation_period = 0;
  CHECK_THROWS_AS(validate_model(m, period), InvalidInput);
}

TEST_CASE("derive_seed separates sub-streams") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}
