#include "homodyne/linalg.hpp"

#include <stdexcept>

#include <Eigen/Dense>

namespace homodyne {

namespace {

Eigen::MatrixXcd to_eigen(const ComplexMatrix& A) {
  Eigen::MatrixXcd M(static_cast<Eigen::Index>(A.rows),
                     static_cast<Eigen::Index>(A.cols));
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = A(i, j);
  return M;
}

}  // namespace

ComplexVector solve_direct(const ComplexMatrix& A, const ComplexVector& b) {
  if (A.rows != A.cols || A.rows != b.size())
    throw std::invalid_argument("solve_direct: shape mismatch");
  const Eigen::MatrixXcd M = to_eigen(A);
  Eigen::VectorXcd rhs(static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < b.size(); ++i)
    rhs(static_cast<Eigen::Index>(i)) = b[i];

  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
  if (lu.rcond() < 1e-15)
    throw std::runtime_error("solve_direct: matrix numerically singular");
  const Eigen::VectorXcd x = lu.solve(rhs);

  ComplexVector out(b.size());
  for (std::size_t i = 0; i < b.size(); ++i)
    out[i] = x(static_cast<Eigen::Index>(i));
  return out;
}

double condition_estimate(const ComplexMatrix& A) {
  if (A.rows != A.cols || A.empty())
    throw std::invalid_argument("condition_estimate: square matrix required");
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(to_eigen(A));
  const double rcond = lu.rcond();
  if (rcond <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / rcond;
}

bool is_real_spd(const ComplexMatrix& A, double sym_tol) {
  if (A.rows != A.cols || A.empty()) return false;
  double max_abs = 0.0;
  for (cplx v : A.data) max_abs = std::max(max_abs, std::abs(v));
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t j = 0; j < A.cols; ++j) {
      if (A(i, j).imag() != 0.0) return false;
      if (std::abs(A(i, j).real() - A(j, i).real()) > sym_tol * max_abs)
        return false;
    }
  }
  Eigen::MatrixXd M(static_cast<Eigen::Index>(A.rows),
                    static_cast<Eigen::Index>(A.cols));
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          A(i, j).real();
  const Eigen::LLT<Eigen::MatrixXd> llt(M);
  return llt.info() == Eigen::Success;
}

double min_eigenvalue_sym(const ComplexMatrix& A) {
  if (A.rows != A.cols || A.empty())
    throw std::invalid_argument("min_eigenvalue_sym: square matrix required");
  Eigen::MatrixXd M(static_cast<Eigen::Index>(A.rows),
                    static_cast<Eigen::Index>(A.cols));
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          A(i, j).real();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      M, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("min_eigenvalue_sym: eigensolver failed");
  return es.eigenvalues().minCoeff();
}

}  // namespace homodyne
