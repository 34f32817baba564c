#include "homodyne/backend.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "homodyne/rng.hpp"

namespace homodyne {

ComplexVector ExactBackend::multiply(const ComplexMatrix& A,
                                     const ComplexVector& x,
                                     double /*sigma_scale*/) {
  ++counters_.digital_mvms;
  return mvm_exact(A, x);
}

AnalogBackend::AnalogBackend(EmulatorConfig cfg) : cfg_(cfg) {
  cfg_.validate();
}

ComplexVector AnalogBackend::multiply(const ComplexMatrix& A,
                                      const ComplexVector& x,
                                      double sigma_scale) {
  if (!(sigma_scale >= 0.0))
    throw std::invalid_argument("AnalogBackend: sigma_scale must be >= 0");
  EmulatorConfig call_cfg = cfg_;
  call_cfg.sigma = cfg_.sigma * sigma_scale;
  AnalogResult r = analog_mvm(A, x, call_cfg, calls_++);
  ++counters_.analog_mvms;
  counters_.analog_ops += r.analog_ops;
  saturations_ += r.saturations;
  return std::move(r.value);
}

namespace {

bool any_imag(const ComplexVector& v) {
  return std::any_of(v.begin(), v.end(),
                     [](cplx z) { return z.imag() != 0.0; });
}

bool any_imag(const ComplexMatrix& m) {
  return std::any_of(m.data.begin(), m.data.end(),
                     [](cplx z) { return z.imag() != 0.0; });
}

/// Accumulate operands that are already encoder codes, adding readout noise
/// but performing no further encoding.
ComplexVector noisy_accumulate(const ComplexMatrix& codes,
                               const ComplexVector& x_codes,
                               const EmulatorConfig& cfg, double sigma_eff,
                               std::uint64_t stream) {
  ComplexVector y = mvm_exact(codes, x_codes);
  if (sigma_eff > 0.0) {
    const double full_scale = max_component(y);
    if (full_scale > 0.0) {
      auto rng = make_rng(cfg.seed, stream);
      std::normal_distribution<double> noise(0.0, sigma_eff * full_scale);
      for (auto& v : y) {
        const double re = v.real() + noise(rng);
        double im = v.imag();
        if (cfg.mode == EncodingMode::Complex) im += noise(rng);
        v = cplx(re, im);
      }
    }
  }
  return y;
}

/// Split every component of a 16-bit-quantized operand into high/low byte
/// planes: value = high * 256 + low with high in [-128, 127], low in [0, 255].
template <typename T>
std::pair<T, T> slice_components(const T& codes);

template <>
std::pair<ComplexVector, ComplexVector> slice_components(
    const ComplexVector& codes) {
  ComplexVector high(codes.size()), low(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const auto re = slice16(static_cast<int>(codes[i].real()));
    const auto im = slice16(static_cast<int>(codes[i].imag()));
    high[i] = cplx(re.high, im.high);
    low[i] = cplx(re.low, im.low);
  }
  return {std::move(high), std::move(low)};
}

template <>
std::pair<ComplexMatrix, ComplexMatrix> slice_components(
    const ComplexMatrix& codes) {
  ComplexMatrix high(codes.rows, codes.cols), low(codes.rows, codes.cols);
  for (std::size_t i = 0; i < codes.data.size(); ++i) {
    const auto re = slice16(static_cast<int>(codes.data[i].real()));
    const auto im = slice16(static_cast<int>(codes.data[i].imag()));
    high.data[i] = cplx(re.high, im.high);
    low.data[i] = cplx(re.low, im.low);
  }
  return {std::move(high), std::move(low)};
}

}  // namespace

BitslicedBackend::BitslicedBackend(EmulatorConfig cfg) : cfg_(cfg) {
  cfg_.validate();
}

ComplexVector BitslicedBackend::multiply(const ComplexMatrix& A,
                                         const ComplexVector& x,
                                         double sigma_scale) {
  if (!(sigma_scale >= 0.0))
    throw std::invalid_argument("BitslicedBackend: sigma_scale must be >= 0");
  if (A.cols != x.size())
    throw std::invalid_argument("BitslicedBackend: dimension mismatch");
  if (x.size() > cfg_.max_vector_len)
    throw std::length_error(
        "BitslicedBackend: input vector exceeds the integration window");
  if (!all_finite(A) || !all_finite(x))
    throw std::invalid_argument("BitslicedBackend: non-finite operand");
  if (cfg_.mode == EncodingMode::RealOnly && (any_imag(A) || any_imag(x)))
    throw std::invalid_argument(
        "BitslicedBackend: complex operand in real-only encoding mode");

  auto [a_scaled, a_info] = normalize_range(A);
  auto [x_scaled, x_info] = normalize_range(x);

  const QuantSpec word{16, 1.0};
  const double levels = static_cast<double>(word.levels());

  // Integer codes of the 16-bit quantization (|code| <= 32767).
  ComplexMatrix a_codes(A.rows, A.cols);
  for (std::size_t i = 0; i < a_codes.data.size(); ++i)
    a_codes.data[i] = cplx(std::round(a_scaled.data[i].real() * levels),
                           std::round(a_scaled.data[i].imag() * levels));
  ComplexVector x_codes(x.size());
  for (std::size_t i = 0; i < x_codes.size(); ++i)
    x_codes[i] = cplx(std::round(x_scaled[i].real() * levels),
                      std::round(x_scaled[i].imag() * levels));

  auto [a_high, a_low] = slice_components(a_codes);
  auto [x_high, x_low] = slice_components(x_codes);

  const std::uint64_t base_stream = calls_ * 4;
  ++calls_;
  const double s = cfg_.sigma * sigma_scale;
  const ComplexVector y_hh =
      noisy_accumulate(a_high, x_high, cfg_, s / 256.0, base_stream + 0);
  const ComplexVector y_hl =
      noisy_accumulate(a_high, x_low, cfg_, s / 16.0, base_stream + 1);
  const ComplexVector y_lh =
      noisy_accumulate(a_low, x_high, cfg_, s / 16.0, base_stream + 2);
  const ComplexVector y_ll =
      noisy_accumulate(a_low, x_low, cfg_, s, base_stream + 3);

  counters_.analog_mvms += 4;
  counters_.analog_ops += 4 * static_cast<std::uint64_t>(A.rows) * A.cols;

  const double undo = a_info.scale * x_info.scale / (levels * levels);
  ComplexVector y(A.rows);
  for (std::size_t n = 0; n < y.size(); ++n)
    y[n] = (65536.0 * y_hh[n] + 256.0 * (y_hl[n] + y_lh[n]) + y_ll[n]) * undo;
  return y;
}

SplitBackend::SplitBackend(SparseDenseSplit split, MvmBackend& inner)
    : split_(std::move(split)), inner_(inner) {
  if (split_.dense.empty())
    throw std::invalid_argument("SplitBackend: empty split");
}

std::string SplitBackend::name() const { return "split(" + inner_.name() + ")"; }

ComplexVector SplitBackend::multiply(const ComplexMatrix& A,
                                     const ComplexVector& x,
                                     double sigma_scale) {
  if (A.rows != split_.dense.rows || A.cols != split_.dense.cols)
    throw std::invalid_argument(
        "SplitBackend: matrix shape does not match the split");

  const BackendCounters before = inner_.counters();
  ComplexVector y = inner_.multiply(split_.dense, x, sigma_scale);
  const BackendCounters after = inner_.counters();
  counters_.digital_mvms += after.digital_mvms - before.digital_mvms;
  counters_.analog_mvms += after.analog_mvms - before.analog_mvms;
  counters_.analog_ops += after.analog_ops - before.analog_ops;

  const ComplexVector ys = split_.sparse_mvm(x);
  sparse_ops_ += split_.sparse.size();
  for (std::size_t n = 0; n < y.size(); ++n) y[n] += ys[n];
  return y;
}

}  // namespace homodyne
