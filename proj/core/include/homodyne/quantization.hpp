#pragma once

#include <cstdint>
#include <vector>

#include "homodyne/tensor.hpp"

namespace homodyne {

/// Symmetric uniform quantizer: bits includes the sign, so the codebook is
/// {-L..L} * step with L = 2^(bits-1) - 1 levels per sign.
struct QuantSpec {
  int bits = 8;
  double full_scale = 1.0;

  int levels() const { return (1 << (bits - 1)) - 1; }
  double step() const { return full_scale / levels(); }
};

/// Nearest codebook level, rounding half away from zero. Inputs beyond
/// full_scale saturate; `saturations` (when given) counts the clips.
double quantize_uniform(double x, const QuantSpec& spec, std::uint64_t* saturations = nullptr);

ComplexVector quantize_uniform(const ComplexVector& v, const QuantSpec& spec,
                               std::uint64_t* saturations = nullptr);
ComplexMatrix quantize_uniform(const ComplexMatrix& A, const QuantSpec& spec,
                               std::uint64_t* saturations = nullptr);

/// Base-256 decomposition of a 16-bit value: value = high * 256 + low with
/// low in [0, 255]. Signed values use floor division, so high may be -128.
struct BitSlicedInt {
  int high = 0;
  int low = 0;

  int value() const { return high * 256 + low; }
};

/// Throws std::out_of_range when |x| > 32767.
BitSlicedInt slice16(int x);

class MvmBackend;  // backend.hpp

/// 16-bit integer MVM recombined from four 8-bit-operand products executed
/// through `backend`:
///   y = 2^16 (Wh xh) + 2^8 (Wh xl + Wl xh) + (Wl xl).
/// Row-major W of shape rows x cols; entries and x in [-32767, 32767].
/// With an exact backend the result equals the direct integer product.
std::vector<std::int64_t> bitsliced_mvm(const std::vector<int>& W, std::size_t rows,
                                        std::size_t cols, const std::vector<int>& x,
                                        MvmBackend& backend);

/// One coordinate of the sparse half of a split.
struct SparseEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  cplx value{0.0, 0.0};
};

enum class SplitKind { Band, Threshold };

/// Exact decomposition A = sparse + dense with disjoint supports. The dense
/// matrix holds zeros at every sparse position.
struct SparseDenseSplit {
  std::vector<SparseEntry> sparse;
  ComplexMatrix dense;
  SplitKind kind = SplitKind::Band;
  double parameter = 0.0;  // n_diagonals for Band, fraction for Threshold

  ComplexMatrix reconstruct() const;

  /// Sparse entries as a fraction of all M*N entries.
  double sparse_fraction() const;

  /// Largest |.| magnitude left in the dense remainder.
  double dense_max_abs() const;

  /// y = sparse * x, evaluated entry-wise.
  ComplexVector sparse_mvm(const ComplexVector& x) const;
};

/// Keeps the |row - col| <= (n_diagonals-1)/2 band as the sparse part.
/// n_diagonals must be odd and at most 2*min(M,N)-1.
SparseDenseSplit split_band(const ComplexMatrix& A, int n_diagonals);

/// Keeps the ceil(fraction * M * N) largest-|.| entries as the sparse part,
/// ties broken in row-major order.
SparseDenseSplit split_threshold(const ComplexMatrix& A, double fraction);

}  // namespace homodyne
