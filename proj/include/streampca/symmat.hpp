#pragma once

#include <Eigen/Dense>

#include <utility>

#include "streampca/errors.hpp"

namespace streampca {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Value type for dense real symmetric matrices. The explicit constructor
// rejects matrices that are not symmetric to within
// 1e-12 * (1 + max|a_ij|) or that contain non-finite entries; symmetrized()
// accepts anything finite and averages A with its transpose.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Matrix m);

  static SymMatrix symmetrized(const Matrix& m);
  static SymMatrix zero(Eigen::Index d);
  static SymMatrix identity(Eigen::Index d);

  const Matrix& mat() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  struct Unchecked {};
  SymMatrix(Matrix m, Unchecked) : m_(std::move(m)) {}

  Matrix m_;
};

// Full eigendecomposition, eigenvalues descending, eigenvectors as
// sign-canonical orthonormal columns (column i pairs with eigenvalue i).
struct EigenDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;
};

struct MatrixNorms {
  double frobenius = 0;
  double spectral = 0;
};

// Flips v so its first coordinate with magnitude > 1e-12 is non-negative.
Vector sign_canonical(Vector v);

// Deterministic symmetric eigendecomposition. Determinism given A comes from
// the fixed backend plus the sign convention; exactly-tied eigenvalues order
// their (sign-canonical) eigenvectors lexicographically.
EigenDecomposition eig_sym(const SymMatrix& a);

// Largest eigenvalue and its sign-canonical eigenvector.
std::pair<double, Vector> top_eigenpair(const SymMatrix& a);

// Largest eigenvalue only; cheaper than eig_sym (no eigenvectors).
double top_eigenvalue(const SymMatrix& a);

// Euclidean projection onto the probability simplex {x >= 0, sum x = 1}
// by the sorted water-filling rule.
Vector simplex_project(const Vector& v);

// Euclidean projection onto {W symmetric PSD, tr W = 1}: eigendecompose and
// water-fill the spectrum.
SymMatrix spectrahedron_project(const SymMatrix& w);

// Projection together with the spectral pieces it was built from, for callers
// that also need the projected spectrum or the eigenbasis of the input
// (weights are descending and sum to 1; basis columns come from eig_sym).
struct SpectrahedronProjection {
  SymMatrix matrix;
  Vector weights;
  Matrix basis;
};

SpectrahedronProjection spectrahedron_project_full(const SymMatrix& w);

MatrixNorms norms(const SymMatrix& a);

}  // namespace streampca
