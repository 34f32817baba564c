#include "homodyne/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace homodyne {

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = cplx{1.0, 0.0};
  return m;
}

PolarSample to_polar(cplx z) {
  if (z == cplx{0.0, 0.0}) return {0.0, 0.0};
  double amp = std::abs(z);
  double ph = std::arg(z);  // [-pi, pi]; -pi only for negative-zero imag
  if (ph <= -std::numbers::pi) ph = std::numbers::pi;
  return {amp, ph};
}

cplx from_polar(const PolarSample& p) {
  return std::polar(p.amplitude, p.phase);
}

double max_component(const ComplexVector& v) {
  double m = 0.0;
  for (const cplx& z : v) m = std::max({m, std::fabs(z.real()), std::fabs(z.imag())});
  return m;
}

double max_component(const ComplexMatrix& A) {
  double m = 0.0;
  for (const cplx& z : A.data) m = std::max({m, std::fabs(z.real()), std::fabs(z.imag())});
  return m;
}

namespace {

// Smallest power of two >= m. Power-of-two factors keep rescale/descale
// bit-exact (exponent-only arithmetic).
double pow2_ceil(double m) {
  if (m <= 0.0 || !std::isfinite(m)) return 1.0;
  int exp = 0;
  double frac = std::frexp(m, &exp);  // m = frac * 2^exp, frac in [0.5, 1)
  if (frac == 0.5) --exp;             // m already a power of two
  return std::ldexp(1.0, exp);
}

}  // namespace

std::pair<ComplexVector, ScaleInfo> normalize_range(const ComplexVector& v) {
  ScaleInfo info{pow2_ceil(max_component(v))};
  ComplexVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = info.rescale(v[i]);
  return {std::move(out), info};
}

std::pair<ComplexMatrix, ScaleInfo> normalize_range(const ComplexMatrix& A) {
  ScaleInfo info{pow2_ceil(max_component(A))};
  ComplexMatrix out(A.rows, A.cols);
  for (std::size_t i = 0; i < A.data.size(); ++i) out.data[i] = info.rescale(A.data[i]);
  return {std::move(out), info};
}

ComplexVector mvm_exact(const ComplexMatrix& A, const ComplexVector& x) {
  if (A.cols != x.size())
    throw std::invalid_argument("mvm_exact: A has " + std::to_string(A.cols) +
                                " columns but x has " + std::to_string(x.size()) + " entries");
  ComplexVector y(A.rows, cplx{0.0, 0.0});
  for (std::size_t i = 0; i < A.rows; ++i) {
    cplx acc{0.0, 0.0};
    const cplx* row = A.data.data() + i * A.cols;
    for (std::size_t j = 0; j < A.cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

bool all_finite(const ComplexVector& v) {
  return std::all_of(v.begin(), v.end(),
                     [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

bool all_finite(const ComplexMatrix& A) {
  return std::all_of(A.data.begin(), A.data.end(),
                     [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

double norm2(const ComplexVector& v) {
  double s = 0.0;
  for (const cplx& z : v) s += std::norm(z);
  return std::sqrt(s);
}

}  // namespace homodyne
