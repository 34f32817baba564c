#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace homodyne {

using cplx = std::complex<double>;

/// Dense complex vector. Solvers and the emulator treat it as an immutable
/// value; entries must stay finite.
using ComplexVector = std::vector<cplx>;

/// Dense row-major complex matrix.
struct ComplexMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<cplx> data;

  ComplexMatrix() = default;
  ComplexMatrix(std::size_t r, std::size_t c, cplx fill = cplx{0.0, 0.0})
      : rows(r), cols(c), data(r * c, fill) {}

  static ComplexMatrix identity(std::size_t n);

  cplx& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<const cplx> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  bool empty() const { return data.empty(); }
};

/// Amplitude/phase view of one complex sample. Phase is canonicalized to
/// (-pi, pi]; amplitude is non-negative.
struct PolarSample {
  double amplitude = 0.0;
  double phase = 0.0;
};

PolarSample to_polar(cplx z);
cplx from_polar(const PolarSample& p);

/// Scale factor mapping operand entries into the encoder full-scale [-1, 1].
/// The factor is a power of two so descale(rescale(v)) restores every entry
/// bit-exactly; the largest |Re|/|Im| component lands in (1/2, 1].
struct ScaleInfo {
  double scale = 1.0;

  cplx rescale(cplx v) const { return v / scale; }
  cplx descale(cplx v) const { return v * scale; }
};

/// Largest |Re| or |Im| component over the operand.
double max_component(const ComplexVector& v);
double max_component(const ComplexMatrix& A);

std::pair<ComplexVector, ScaleInfo> normalize_range(const ComplexVector& v);
std::pair<ComplexMatrix, ScaleInfo> normalize_range(const ComplexMatrix& A);

/// Noiseless reference product y = A x in 64-bit arithmetic.
/// Throws std::invalid_argument on dimension mismatch.
ComplexVector mvm_exact(const ComplexMatrix& A, const ComplexVector& x);

bool all_finite(const ComplexVector& v);
bool all_finite(const ComplexMatrix& A);

double norm2(const ComplexVector& v);

}  // namespace homodyne
