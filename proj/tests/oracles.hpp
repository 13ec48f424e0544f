#pragma once

// Hand-written reference implementations used only by tests. These are kept
// deliberately naive (closed forms and exhaustive searches) so they cannot
// share a bug with the library code they check.

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Eig2 {
  double lambda1, lambda2;   // descending
  Eigen::Vector2d u1, u2;    // unit eigenvectors (sign not canonicalized)
};

// Closed-form eigendecomposition of [[a, b], [b, c]] via the characteristic
// polynomial.
inline Eig2 eig2x2(double a, double b, double c) {
  Eig2 out;
  const double mean = 0.5 * (a + c);
  const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  out.lambda1 = mean + disc;
  out.lambda2 = mean - disc;
  auto unit_for = [&](double lam) {
    // (A - lam I) u = 0; pick the better-conditioned row.
    Eigen::Vector2d u;
    if (std::abs(b) > 1e-300) {
      u << lam - c, b;
    } else if (a >= c) {
      u = (lam == out.lambda1) ? Eigen::Vector2d(1, 0) : Eigen::Vector2d(0, 1);
      return u;
    } else {
      u = (lam == out.lambda1) ? Eigen::Vector2d(0, 1) : Eigen::Vector2d(1, 0);
      return u;
    }
    return Eigen::Vector2d(u / u.norm());
  };
  out.u1 = unit_for(out.lambda1);
  out.u2 = unit_for(out.lambda2);
  return out;
}

// Euclidean projection of v onto the probability simplex by exhaustive
// active-set search: try every nonempty support set, keep the feasible
// candidate closest to v.
inline VectorXd simplex_project_bruteforce(const VectorXd& v) {
  const int n = static_cast<int>(v.size());
  VectorXd best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    double sum = 0;
    int k = 0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        sum += v[i];
        ++k;
      }
    }
    const double shift = (sum - 1.0) / k;
    VectorXd cand = VectorXd::Zero(n);
    bool feasible = true;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        cand[i] = v[i] - shift;
        if (cand[i] < -1e-12) feasible = false;
      }
    }
    if (!feasible) continue;
    for (int i = 0; i < n; ++i) cand[i] = std::max(cand[i], 0.0);
    const double dist = (cand - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = cand;
    }
  }
  return best;
}

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline VectorXd gaussian_vector(std::mt19937_64& g, int d) {
  std::normal_distribution<double> nd(0.0, 1.0);
  VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = nd(g);
  return v;
}

inline VectorXd random_unit(std::mt19937_64& g, int d) {
  VectorXd v = gaussian_vector(g, d);
  while (v.norm() < 1e-12) v = gaussian_vector(g, d);
  return v / v.norm();
}

inline MatrixXd random_symmetric(std::mt19937_64& g, int d, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = nd(g);
  return 0.5 * (m + m.transpose());
}

// Random point of {PSD, trace 1}: normalized Gram matrix of a Gaussian.
inline MatrixXd random_spectrahedron_member(std::mt19937_64& g, int d) {
  MatrixXd a(d, d);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = nd(g);
  MatrixXd p = a * a.transpose();
  p = 0.5 * (p + p.transpose());
  return p / p.trace();
}

// Random orthonormal basis via QR of a Gaussian matrix.
inline MatrixXd random_orthonormal(std::mt19937_64& g, int d) {
  MatrixXd a(d, d);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = nd(g);
  Eigen::HouseholderQR<MatrixXd> qr(a);
  MatrixXd q = qr.householderQ();
  MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i) {
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  }
  return q;
}

}  // namespace oracle
