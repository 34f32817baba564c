#include "homodyne/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "homodyne/linalg.hpp"

namespace homodyne {

void RefineConfig::validate() const {
  if (!(inner_tol > 0.0) || inner_tol >= 1.0)
    throw std::invalid_argument("RefineConfig: inner_tol must be in (0, 1)");
  if (!(outer_tol > 0.0))
    throw std::invalid_argument("RefineConfig: outer_tol must be > 0");
  if (max_outer < 1 || max_inner < 1)
    throw std::invalid_argument("RefineConfig: iteration caps must be >= 1");
}

double SolverTrace::analog_fraction() const {
  const double total =
      static_cast<double>(analog_mvms) + static_cast<double>(digital_mvms);
  return total > 0.0 ? static_cast<double>(analog_mvms) / total : 0.0;
}

namespace {

std::vector<double> require_real(const ComplexVector& v, const char* what) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].imag() != 0.0)
      throw std::invalid_argument(std::string(what) + ": expected real data");
    out[i] = v[i].real();
  }
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

cplx cdot(const ComplexVector& a, const ComplexVector& b) {
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

}  // namespace

ComplexVector pcg_solve(const ComplexMatrix& A, const ComplexVector& rhs,
                        MvmBackend& backend, double tol, std::size_t max_iter,
                        InnerTrace* trace, bool check_spd, bool jacobi) {
  if (A.rows != A.cols || rhs.size() != A.rows)
    throw std::invalid_argument("pcg_solve: shape mismatch");
  if (check_spd && !is_real_spd(A))
    throw std::invalid_argument("pcg_solve: " + std::to_string(A.rows) + "x" +
                                std::to_string(A.cols) +
                                " matrix failed the real-SPD probe");

  InnerTrace local;
  InnerTrace& tr = trace ? *trace : local;
  tr = InnerTrace{};

  const std::size_t n = A.rows;
  const std::vector<double> b = require_real(rhs, "pcg_solve rhs");
  const double bnorm = norm(b);
  ComplexVector x(n, cplx(0.0, 0.0));
  if (bnorm == 0.0) return x;

  std::vector<double> jac;
  if (jacobi) {
    jac.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = A(i, i).real();
      if (!(d > 0.0))
        throw std::invalid_argument(
            "pcg_solve: Jacobi preconditioner needs a positive diagonal");
      jac[i] = 1.0 / d;
    }
  }
  const auto precond = [&](const std::vector<double>& r) {
    if (!jacobi) return r;
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = jac[i] * r[i];
    return z;
  };

  std::vector<double> xr(n, 0.0);
  std::vector<double> r = b;
  std::vector<double> z = precond(r);
  std::vector<double> p = z;
  double rz = dot(r, z);
  double rel = 1.0;

  for (std::size_t iter = 0; iter < max_iter && rel > tol; ++iter) {
    ComplexVector pc(n);
    for (std::size_t i = 0; i < n; ++i) pc[i] = cplx(p[i], 0.0);
    const ComplexVector Apc = backend.multiply(A, pc);
    // Real system: the imaginary readout carries only noise; discard it.
    std::vector<double> Ap(n);
    for (std::size_t i = 0; i < n; ++i) Ap[i] = Apc[i].real();

    const double pAp = dot(p, Ap);
    ++tr.iterations;
    if (!(pAp > 0.0)) {
      // Noise-degenerated curvature estimate: no usable step along p.
      tr.history.push_back(rel);
      break;
    }
    const double alpha = rz / pAp;
    for (std::size_t i = 0; i < n; ++i) {
      xr[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    rel = norm(r) / bnorm;
    tr.history.push_back(rel);
    if (rel <= tol) break;

    z = precond(r);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }

  tr.final_residual = rel;
  for (std::size_t i = 0; i < n; ++i) x[i] = cplx(xr[i], 0.0);
  return x;
}

namespace {

/// One (possibly restarted) GMRES cycle starting from the residual `r`.
/// Updates x in place; returns the relative recurrence residual.  `happy`
/// reports exact Arnoldi termination.
double gmres_cycle(const ComplexMatrix& A, const ComplexVector& r,
                   double bnorm, MvmBackend& backend, double tol,
                   std::size_t max_dim, ComplexVector& x, InnerTrace& tr,
                   bool& happy) {
  const std::size_t n = A.rows;
  const double rnorm = norm2(r);
  double rel = rnorm / bnorm;
  if (rnorm == 0.0) {
    happy = true;
    return 0.0;
  }

  std::vector<ComplexVector> V;
  V.reserve(max_dim + 1);
  {
    ComplexVector v0(n);
    for (std::size_t i = 0; i < n; ++i) v0[i] = r[i] / rnorm;
    V.push_back(std::move(v0));
  }

  std::vector<ComplexVector> R;  // rotated Hessenberg columns
  std::vector<double> cs;
  ComplexVector sn;
  ComplexVector g{cplx(rnorm, 0.0)};

  std::size_t dims = 0;
  happy = false;
  for (std::size_t j = 0; j < max_dim && rel > tol; ++j) {
    ComplexVector w = backend.multiply(A, V[j]);
    ++tr.iterations;

    ComplexVector h(j + 2, cplx(0.0, 0.0));
    for (std::size_t i = 0; i <= j; ++i) {
      h[i] = cdot(V[i], w);
      for (std::size_t k = 0; k < n; ++k) w[k] -= h[i] * V[i][k];
    }
    const double wnorm = norm2(w);
    h[j + 1] = cplx(wnorm, 0.0);

    double col_scale = wnorm;
    for (std::size_t i = 0; i <= j; ++i)
      col_scale = std::max(col_scale, std::abs(h[i]));
    const bool breakdown = wnorm <= 1e-12 * std::max(col_scale, 1e-300);

    if (!breakdown) {
      ComplexVector v(n);
      for (std::size_t k = 0; k < n; ++k) v[k] = w[k] / wnorm;
      V.push_back(std::move(v));
    }

    // Apply the accumulated Givens rotations, then a new one zeroing h[j+1].
    for (std::size_t i = 0; i < j; ++i) {
      const cplx tmp = cs[i] * h[i] + sn[i] * h[i + 1];
      h[i + 1] = -std::conj(sn[i]) * h[i] + cs[i] * h[i + 1];
      h[i] = tmp;
    }
    {
      const cplx a = h[j];
      const cplx bb = h[j + 1];
      const double denom = std::sqrt(std::norm(a) + std::norm(bb));
      double c;
      cplx s;
      if (denom == 0.0) {
        c = 1.0;
        s = cplx(0.0, 0.0);
      } else if (std::abs(a) == 0.0) {
        c = 0.0;
        s = std::conj(bb) / std::abs(bb);
      } else {
        c = std::abs(a) / denom;
        s = std::conj(bb) * (a / std::abs(a)) / denom;
      }
      h[j] = c * a + s * bb;
      h[j + 1] = cplx(0.0, 0.0);
      cs.push_back(c);
      sn.push_back(s);

      g.push_back(-std::conj(s) * g[j]);
      g[j] = c * g[j];
    }

    R.push_back(std::move(h));
    dims = j + 1;
    rel = std::abs(g[j + 1]) / bnorm;
    tr.history.push_back(rel);

    if (breakdown) {
      happy = true;
      break;
    }
  }

  if (dims > 0) {
    // Back-substitute R y = g and accumulate x += V y.
    ComplexVector y(dims, cplx(0.0, 0.0));
    for (std::size_t ii = dims; ii-- > 0;) {
      cplx s = g[ii];
      for (std::size_t k = ii + 1; k < dims; ++k) s -= R[k][ii] * y[k];
      y[ii] = s / R[ii][ii];
    }
    for (std::size_t k = 0; k < dims; ++k)
      for (std::size_t i = 0; i < n; ++i) x[i] += y[k] * V[k][i];
  }
  return rel;
}

}  // namespace

ComplexVector gmres_solve(const ComplexMatrix& A, const ComplexVector& rhs,
                          MvmBackend& backend, double tol,
                          std::size_t max_iter, InnerTrace* trace,
                          std::size_t restart) {
  if (A.rows != A.cols || rhs.size() != A.rows)
    throw std::invalid_argument("gmres_solve: shape mismatch");

  InnerTrace local;
  InnerTrace& tr = trace ? *trace : local;
  tr = InnerTrace{};

  const std::size_t n = A.rows;
  ComplexVector x(n, cplx(0.0, 0.0));
  const double bnorm = norm2(rhs);
  if (bnorm == 0.0) return x;

  const std::size_t cycle_dim = restart == 0 ? max_iter : restart;
  ComplexVector r = rhs;  // zero initial guess: residual costs no MVM
  bool first = true;
  double rel = 1.0;
  bool happy = false;

  while (tr.iterations < max_iter) {
    if (!first) {
      // Restarted cycle: recompute the residual through the backend (counted
      // as an iteration — it is a full MVM).
      const ComplexVector Ax = backend.multiply(A, x);
      ++tr.iterations;
      for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - Ax[i];
    }
    const std::size_t budget =
        std::min(cycle_dim, max_iter - std::min(tr.iterations, max_iter));
    if (budget == 0) break;
    rel = gmres_cycle(A, r, bnorm, backend, tol, budget, x, tr, happy);
    first = false;
    if (happy) {
      if (rel > 1e-8 && rel > tol)
        throw std::runtime_error(
            "gmres_solve: Arnoldi breakdown with nonzero residual");
      break;
    }
    if (rel <= tol) break;
  }

  tr.final_residual = rel;
  tr.breakdown_exact = happy;
  return x;
}

double residual_norm(const ComplexMatrix& A, const ComplexVector& x,
                     const ComplexVector& b, bool* absolute) {
  if (A.cols != x.size() || A.rows != b.size())
    throw std::invalid_argument("residual_norm: shape mismatch");
  const ComplexVector Ax = mvm_exact(A, x);
  ComplexVector r(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) r[i] = b[i] - Ax[i];
  const double rn = norm2(r);
  const double bn = norm2(b);
  if (bn == 0.0) {
    if (absolute) *absolute = true;
    return rn;
  }
  if (absolute) *absolute = false;
  return rn / bn;
}

SolverTrace refine(const ComplexMatrix& A, const ComplexVector& b,
                   MvmBackend& backend, const RefineConfig& cfg) {
  cfg.validate();
  if (A.rows != A.cols || b.size() != A.rows)
    throw std::invalid_argument("refine: shape mismatch");
  if (cfg.inner_kind == InnerKind::Pcg && !is_real_spd(A))
    throw std::invalid_argument("refine: " + std::to_string(A.rows) + "x" +
                                std::to_string(A.cols) +
                                " matrix failed the real-SPD probe required "
                                "by the PCG inner solver");

  SolverTrace trace;
  trace.backend_name = backend.name();
  const BackendCounters start = backend.counters();

  const double bnorm = norm2(b);
  const bool absolute = bnorm == 0.0;
  ComplexVector x(A.rows, cplx(0.0, 0.0));

  for (std::size_t k = 0;; ++k) {
    const ComplexVector Ax = mvm_exact(A, x);
    ++trace.digital_mvms;
    ComplexVector t(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) t[i] = b[i] - Ax[i];
    const double rel = absolute ? norm2(t) : norm2(t) / bnorm;

    if (rel <= cfg.outer_tol) {
      trace.converged = true;
      trace.final_residual = rel;
      break;
    }
    if (k >= cfg.max_outer) {
      trace.converged = false;
      trace.final_residual = rel;
      break;
    }

    InnerTrace inner;
    const ComplexVector z =
        cfg.inner_kind == InnerKind::Pcg
            ? pcg_solve(A, t, backend, cfg.inner_tol, cfg.max_inner, &inner,
                        /*check_spd=*/false, cfg.jacobi)
            : gmres_solve(A, t, backend, cfg.inner_tol, cfg.max_inner, &inner);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += z[i];

    trace.inner_mvms += inner.iterations;
    ++trace.outer_iterations;
    const BackendCounters now = backend.counters();
    trace.outer.push_back(OuterRecord{trace.outer_iterations, rel,
                                      inner.iterations, trace.digital_mvms,
                                      now.analog_mvms - start.analog_mvms});
  }

  const BackendCounters end = backend.counters();
  trace.analog_mvms = end.analog_mvms - start.analog_mvms;
  trace.analog_ops = end.analog_ops - start.analog_ops;
  trace.solution = std::move(x);
  return trace;
}

}  // namespace homodyne
