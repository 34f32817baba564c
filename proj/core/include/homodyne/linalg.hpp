#pragma once

#include "homodyne/tensor.hpp"

namespace homodyne {

/// Dense direct solve A x = b at full precision (LU with partial pivoting).
/// Throws std::invalid_argument on shape mismatch, std::runtime_error when
/// the factorization signals a singular matrix.
ComplexVector solve_direct(const ComplexMatrix& A, const ComplexVector& b);

/// Reciprocal-condition-based estimate of cond_1(A); large values mean
/// near-singular (1/rcond of the LU factorization).
double condition_estimate(const ComplexMatrix& A);

/// True when A is real symmetric positive definite: symmetric within
/// `sym_tol` (relative), all imaginary parts zero, and a Cholesky probe
/// succeeds.
bool is_real_spd(const ComplexMatrix& A, double sym_tol = 1e-12);

/// Smallest eigenvalue of a real symmetric matrix (digital probe).
double min_eigenvalue_sym(const ComplexMatrix& A);

}  // namespace homodyne
