#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "homodyne/backend.hpp"
#include "homodyne/tensor.hpp"

namespace homodyne {

/// Inner solver selection for iterative refinement.
enum class InnerKind { Pcg, Gmres };

/// Mixed-precision refinement settings.  The outer loop runs in exact digital
/// arithmetic to `outer_tol`; each correction is solved through the analog
/// backend to `inner_tol` (relative to the current residual).
struct RefineConfig {
  double outer_tol = 1e-3;
  double inner_tol = 0.1;
  std::size_t max_outer = 20;
  std::size_t max_inner = 200;
  InnerKind inner_kind = InnerKind::Gmres;
  /// Jacobi (diagonal) preconditioning for the PCG inner solver; off by
  /// default so MVM counts are directly comparable across runs.
  bool jacobi = false;

  void validate() const;
};

/// Per-correction record: the digitally measured relative residual entering
/// the iteration, the inner iterations spent on the correction, and the
/// cumulative MVM ledger after it.
struct OuterRecord {
  std::size_t outer_iter = 0;  // 1-based correction index
  double residual = 0.0;
  std::size_t inner_iters = 0;
  std::uint64_t digital_mvms = 0;
  std::uint64_t analog_mvms = 0;
};

struct SolverTrace {
  std::vector<OuterRecord> outer;
  ComplexVector solution;
  bool converged = false;
  double final_residual = 0.0;
  /// Corrections applied (the paper's "outer iterations").
  std::size_t outer_iterations = 0;
  /// High-precision digital MVMs spent on outer residuals: corrections + 1.
  std::uint64_t digital_mvms = 0;
  /// Logical inner MVMs: one per PCG iteration / Arnoldi step.
  std::uint64_t inner_mvms = 0;
  /// Physical analog passes reported by the backend (bit-slicing issues 4
  /// per logical MVM; an exact inner backend issues none).
  std::uint64_t analog_mvms = 0;
  std::uint64_t analog_ops = 0;
  std::string backend_name;

  /// analog / (analog + digital) MVM fraction of the whole run.
  double analog_fraction() const;
};

/// Progress record of one inner solve.
struct InnerTrace {
  std::size_t iterations = 0;
  double final_residual = 0.0;  // relative to the inner rhs
  std::vector<double> history;  // relative residual after each iteration
  bool breakdown_exact = false; // GMRES happy breakdown
};

/// Iterative refinement: x_{k+1} = x_k + solve(A z = b - A x_k).  Outer
/// residuals are computed digitally (one digital MVM per check, including the
/// final converged check); inner solves route every product through
/// `backend`.  Non-convergence within max_outer is reported in the trace, not
/// thrown.
SolverTrace refine(const ComplexMatrix& A, const ComplexVector& b,
                   MvmBackend& backend, const RefineConfig& cfg);

/// Conjugate gradient for real SPD systems; every A.p product goes through
/// `backend` (imaginary readout discarded — the system is real).  Starts from
/// zero, stops at relative recurrence residual <= tol or max_iter.  When
/// `check_spd` is set, a digital Cholesky probe validates the matrix first
/// and throws on failure.
ComplexVector pcg_solve(const ComplexMatrix& A, const ComplexVector& rhs,
                        MvmBackend& backend, double tol, std::size_t max_iter,
                        InnerTrace* trace = nullptr, bool check_spd = true,
                        bool jacobi = false);

/// Full (non-restarted by default) GMRES with modified Gram-Schmidt Arnoldi;
/// every A.v product goes through `backend`, the Givens least squares stays
/// digital.  Starts from zero.  `restart` > 0 enables restarted cycles of
/// that dimension.
ComplexVector gmres_solve(const ComplexMatrix& A, const ComplexVector& rhs,
                          MvmBackend& backend, double tol,
                          std::size_t max_iter, InnerTrace* trace = nullptr,
                          std::size_t restart = 0);

/// Digital relative residual ||b - A x|| / ||b||.  A zero b makes the norm
/// absolute; `absolute` (optional) reports when that happened.
double residual_norm(const ComplexMatrix& A, const ComplexVector& x,
                     const ComplexVector& b, bool* absolute = nullptr);

}  // namespace homodyne
