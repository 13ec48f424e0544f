#include "streampca/symmat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "streampca/constants.hpp"

namespace streampca {

namespace {

void require_finite(const Matrix& m, const char* who) {
  if (!m.allFinite()) {
    throw InvalidInput(std::string(who) + ": non-finite entries");
  }
}

// Lexicographic "<" on already sign-canonicalized columns; used only to fix
// the order of exactly tied eigenvalues.
bool lex_less(const Matrix& vecs, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index i = 0; i < vecs.rows(); ++i) {
    if (vecs(i, a) != vecs(i, b)) return vecs(i, a) < vecs(i, b);
  }
  return false;
}

}  // namespace

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) {
    throw InvalidInput("SymMatrix: matrix is not square");
  }
  require_finite(m_, "SymMatrix");
  const double scale = 1.0 + (m_.size() > 0 ? m_.cwiseAbs().maxCoeff() : 0.0);
  const double skew =
      m_.size() > 0 ? (m_ - m_.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (skew > tol::kSymmetry * scale) {
    throw InvalidInput("SymMatrix: asymmetry " + std::to_string(skew) +
                       " exceeds tolerance");
  }
}

SymMatrix SymMatrix::symmetrized(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw InvalidInput("SymMatrix::symmetrized: matrix is not square");
  }
  require_finite(m, "SymMatrix::symmetrized");
  Matrix s = 0.5 * (m + m.transpose());
  return SymMatrix(std::move(s), Unchecked{});
}

SymMatrix SymMatrix::zero(Eigen::Index d) {
  return SymMatrix(Matrix::Zero(d, d), Unchecked{});
}

SymMatrix SymMatrix::identity(Eigen::Index d) {
  return SymMatrix(Matrix::Identity(d, d), Unchecked{});
}

Vector sign_canonical(Vector v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > tol::kSignEps) {
      if (v[i] < 0) v = -v;
      return v;
    }
  }
  return v;
}

EigenDecomposition eig_sym(const SymMatrix& a) {
  if (a.dim() == 0) throw InvalidInput("eig_sym: empty matrix");
  require_finite(a.mat(), "eig_sym");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.mat());
  if (solver.info() != Eigen::Success) {
    throw InvalidInput("eig_sym: eigensolver did not converge");
  }

  const Eigen::Index d = a.dim();
  EigenDecomposition out;
  out.eigenvalues.resize(d);
  out.eigenvectors.resize(d, d);
  // Backend sorts ascending; flip to descending and canonicalize signs.
  for (Eigen::Index i = 0; i < d; ++i) {
    out.eigenvalues[i] = solver.eigenvalues()[d - 1 - i];
    out.eigenvectors.col(i) = sign_canonical(solver.eigenvectors().col(d - 1 - i));
  }

  // Exact eigenvalue ties: order the tied columns lexicographically so the
  // output is a deterministic function of A alone.
  Eigen::Index run_start = 0;
  while (run_start < d) {
    Eigen::Index run_end = run_start + 1;
    while (run_end < d && out.eigenvalues[run_end] == out.eigenvalues[run_start]) {
      ++run_end;
    }
    if (run_end - run_start > 1) {
      std::vector<Eigen::Index> order(static_cast<size_t>(run_end - run_start));
      std::iota(order.begin(), order.end(), run_start);
      std::stable_sort(order.begin(), order.end(),
                       [&](Eigen::Index x, Eigen::Index y) {
                         return lex_less(out.eigenvectors, x, y);
                       });
      Matrix tmp(d, run_end - run_start);
      for (Eigen::Index k = 0; k < run_end - run_start; ++k) {
        tmp.col(k) = out.eigenvectors.col(order[static_cast<size_t>(k)]);
      }
      out.eigenvectors.middleCols(run_start, run_end - run_start) = tmp;
    }
    run_start = run_end;
  }
  return out;
}

std::pair<double, Vector> top_eigenpair(const SymMatrix& a) {
  EigenDecomposition ed = eig_sym(a);
  return {ed.eigenvalues[0], ed.eigenvectors.col(0)};
}

double top_eigenvalue(const SymMatrix& a) {
  if (a.dim() == 0) throw InvalidInput("top_eigenvalue: empty matrix");
  require_finite(a.mat(), "top_eigenvalue");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.mat(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw InvalidInput("top_eigenvalue: eigensolver did not converge");
  }
  return solver.eigenvalues()[a.dim() - 1];
}

Vector simplex_project(const Vector& v) {
  const Eigen::Index n = v.size();
  if (n == 0) throw InvalidInput("simplex_project: empty input");
  if (!v.allFinite()) throw InvalidInput("simplex_project: non-finite entries");

  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());

  // Water level: largest j with u_j > (sum_{i<=j} u_i - 1)/j keeps its mass.
  double cum = 0.0;
  double level = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cum += u[static_cast<size_t>(j)];
    const double cand = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<size_t>(j)] - cand > 0.0) level = cand;
  }
  return (v.array() - level).max(0.0).matrix();
}

SpectrahedronProjection spectrahedron_project_full(const SymMatrix& w) {
  EigenDecomposition ed = eig_sym(w);
  Vector lam = simplex_project(ed.eigenvalues);

  const Eigen::Index d = w.dim();
  Matrix p = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (lam[i] > 0.0) {
      p.noalias() += lam[i] * ed.eigenvectors.col(i) * ed.eigenvectors.col(i).transpose();
    }
  }
  return {SymMatrix::symmetrized(p), std::move(lam), std::move(ed.eigenvectors)};
}

SymMatrix spectrahedron_project(const SymMatrix& w) {
  return spectrahedron_project_full(w).matrix;
}

MatrixNorms norms(const SymMatrix& a) {
  if (a.dim() == 0) throw InvalidInput("norms: empty matrix");
  require_finite(a.mat(), "norms");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.mat(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw InvalidInput("norms: eigensolver did not converge");
  }
  MatrixNorms out;
  out.frobenius = a.mat().norm();
  out.spectral = std::max(std::abs(solver.eigenvalues()[0]),
                          std::abs(solver.eigenvalues()[a.dim() - 1]));
  return out;
}

}  // namespace streampca
