#pragma once

// Numerical tolerances used across the library. Everything tolerance-like is
// pinned here so tests and implementation agree on one set of numbers.

namespace streampca::tol {

// Symmetry check: max |a_ij - a_ji| <= kSymmetry * (1 + max |a_ij|).
inline constexpr double kSymmetry = 1e-12;

// Sign canonicalization: first coordinate with |v_i| > kSignEps decides the
// sign of an eigenvector.
inline constexpr double kSignEps = 1e-12;

// Eigenpair residual guarantee: ||A u - lambda u|| <= kEigResidual * (1 + |lambda|).
inline constexpr double kEigResidual = 1e-8;

// Basis orthonormality: ||B^T B - I||_max <= kOrthonormal.
inline constexpr double kOrthonormal = 1e-8;

// An update whose unnormalized norm falls below this is degenerate.
inline constexpr double kDegenerateNorm = 1e-14;

// Spectrahedron membership slack: trace within kTraceTol of 1, eigenvalues
// >= -kPsdSlack.
inline constexpr double kTraceTol = 1e-9;
inline constexpr double kPsdSlack = 1e-9;

// Rank-one certificate slack: w'Xw >= (l1 + l2 + alpha)/2 - kCertSlack.
inline constexpr double kCertSlack = 1e-9;

// Adversary emission checks: orthogonality and norm bound slack.
inline constexpr double kAdversary = 1e-9;

// Unit-norm slack accepted on caller-supplied vectors.
inline constexpr double kUnitNorm = 1e-9;

// Squared-alignment values may exceed 1 by at most this much.
inline constexpr double kAlignment = 1e-9;

}  // namespace streampca::tol
