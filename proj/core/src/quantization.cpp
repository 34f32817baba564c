#include "homodyne/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "homodyne/backend.hpp"

namespace homodyne {

double quantize_uniform(double x, const QuantSpec& spec, std::uint64_t* saturations) {
  const double step = spec.step();
  const int levels = spec.levels();
  double k = std::round(x / step);  // std::round = half away from zero
  if (k > levels) {
    k = levels;
    if (saturations) ++*saturations;
  } else if (k < -levels) {
    k = -levels;
    if (saturations) ++*saturations;
  }
  return k * step;
}

ComplexVector quantize_uniform(const ComplexVector& v, const QuantSpec& spec,
                               std::uint64_t* saturations) {
  ComplexVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = cplx{quantize_uniform(v[i].real(), spec, saturations),
                  quantize_uniform(v[i].imag(), spec, saturations)};
  return out;
}

ComplexMatrix quantize_uniform(const ComplexMatrix& A, const QuantSpec& spec,
                               std::uint64_t* saturations) {
  ComplexMatrix out(A.rows, A.cols);
  for (std::size_t i = 0; i < A.data.size(); ++i)
    out.data[i] = cplx{quantize_uniform(A.data[i].real(), spec, saturations),
                       quantize_uniform(A.data[i].imag(), spec, saturations)};
  return out;
}

BitSlicedInt slice16(int x) {
  if (x > 32767 || x < -32767)
    throw std::out_of_range("slice16: value " + std::to_string(x) + " outside [-32767, 32767]");
  // C++20 guarantees arithmetic shift, i.e. floor division by 256.
  return {x >> 8, x & 0xff};
}

std::vector<std::int64_t> bitsliced_mvm(const std::vector<int>& W, std::size_t rows,
                                        std::size_t cols, const std::vector<int>& x,
                                        MvmBackend& backend) {
  if (W.size() != rows * cols)
    throw std::invalid_argument("bitsliced_mvm: W size does not match rows*cols");
  if (x.size() != cols) throw std::invalid_argument("bitsliced_mvm: x length != cols");

  ComplexMatrix wh(rows, cols), wl(rows, cols);
  for (std::size_t i = 0; i < W.size(); ++i) {
    BitSlicedInt s = slice16(W[i]);
    wh.data[i] = cplx(static_cast<double>(s.high), 0.0);
    wl.data[i] = cplx(static_cast<double>(s.low), 0.0);
  }
  ComplexVector xh(cols), xl(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    BitSlicedInt s = slice16(x[j]);
    xh[j] = cplx(static_cast<double>(s.high), 0.0);
    xl[j] = cplx(static_cast<double>(s.low), 0.0);
  }

  // Per-term noise scales keep the 2^16-weighted product at 16-bit SNR on
  // noisy backends; exact backends ignore them.
  ComplexVector yhh = backend.multiply(wh, xh, 1.0 / 256.0);
  ComplexVector yhl = backend.multiply(wh, xl, 1.0 / 16.0);
  ComplexVector ylh = backend.multiply(wl, xh, 1.0 / 16.0);
  ComplexVector yll = backend.multiply(wl, xl, 1.0);

  std::vector<std::int64_t> y(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = 65536.0 * yhh[i].real();
    acc += 256.0 * (yhl[i].real() + ylh[i].real());
    acc += yll[i].real();
    y[i] = std::llround(acc);
  }
  return y;
}

ComplexMatrix SparseDenseSplit::reconstruct() const {
  ComplexMatrix out = dense;
  for (const SparseEntry& e : sparse) out(e.row, e.col) = e.value;
  return out;
}

double SparseDenseSplit::sparse_fraction() const {
  const double total = static_cast<double>(dense.rows) * static_cast<double>(dense.cols);
  return total > 0.0 ? static_cast<double>(sparse.size()) / total : 0.0;
}

double SparseDenseSplit::dense_max_abs() const {
  double m = 0.0;
  for (const cplx& z : dense.data) m = std::max(m, std::abs(z));
  return m;
}

ComplexVector SparseDenseSplit::sparse_mvm(const ComplexVector& x) const {
  if (x.size() != dense.cols) throw std::invalid_argument("sparse_mvm: dimension mismatch");
  ComplexVector y(dense.rows, cplx{0.0, 0.0});
  for (const SparseEntry& e : sparse) y[e.row] += e.value * x[e.col];
  return y;
}

SparseDenseSplit split_band(const ComplexMatrix& A, int n_diagonals) {
  if (n_diagonals % 2 == 0) throw std::invalid_argument("split_band: n_diagonals must be odd");
  const std::size_t min_dim = std::min(A.rows, A.cols);
  if (n_diagonals < 1 || static_cast<std::size_t>(n_diagonals) > 2 * min_dim - 1)
    throw std::invalid_argument("split_band: n_diagonals out of range");

  const std::size_t half = static_cast<std::size_t>((n_diagonals - 1) / 2);
  SparseDenseSplit split;
  split.kind = SplitKind::Band;
  split.parameter = n_diagonals;
  split.dense = A;
  for (std::size_t i = 0; i < A.rows; ++i) {
    const std::size_t lo = i > half ? i - half : 0;
    const std::size_t hi = std::min(A.cols, i + half + 1);
    for (std::size_t j = lo; j < hi; ++j) {
      split.sparse.push_back({i, j, A(i, j)});
      split.dense(i, j) = cplx{0.0, 0.0};
    }
  }
  return split;
}

SparseDenseSplit split_threshold(const ComplexMatrix& A, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split_threshold: fraction must be in (0, 1)");
  const std::size_t total = A.rows * A.cols;
  std::size_t count = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(total)));
  count = std::min(std::max<std::size_t>(count, 1), total);

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::nth_element(order.begin(), order.begin() + count, order.end(),
                   [&](std::size_t a, std::size_t b) {
                     const double ma = std::abs(A.data[a]), mb = std::abs(A.data[b]);
                     return ma != mb ? ma > mb : a < b;  // row-major tie-break
                   });
  std::sort(order.begin(), order.begin() + count);  // deterministic emission order

  SparseDenseSplit split;
  split.kind = SplitKind::Threshold;
  split.parameter = fraction;
  split.dense = A;
  split.sparse.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t idx = order[k];
    const std::size_t i = idx / A.cols, j = idx % A.cols;
    split.sparse.push_back({i, j, A.data[idx]});
    split.dense.data[idx] = cplx{0.0, 0.0};
  }
  return split;
}

}  // namespace homodyne
