#include "homodyne/emulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "homodyne/quantization.hpp"
#include "homodyne/rng.hpp"

namespace homodyne {

void EmulatorConfig::validate() const {
  if (bits < 2 || bits > 24)
    throw std::invalid_argument("EmulatorConfig: bits must be in [2, 24]");
  if (!(sigma >= 0.0) || sigma >= 1.0)
    throw std::invalid_argument("EmulatorConfig: sigma must be in [0, 1)");
  if (max_vector_len == 0)
    throw std::invalid_argument("EmulatorConfig: max_vector_len must be >= 1");
}

namespace {

bool has_imag(const ComplexVector& v) {
  return std::any_of(v.begin(), v.end(),
                     [](cplx z) { return z.imag() != 0.0; });
}

bool has_imag(const ComplexMatrix& m) {
  return std::any_of(m.data.begin(), m.data.end(),
                     [](cplx z) { return z.imag() != 0.0; });
}

}  // namespace

AnalogResult analog_mvm(const ComplexMatrix& A, const ComplexVector& x,
                        const EmulatorConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  if (A.cols != x.size())
    throw std::invalid_argument("analog_mvm: dimension mismatch");
  if (x.size() > cfg.max_vector_len)
    throw std::length_error(
        "analog_mvm: input vector exceeds the integration window");
  if (!all_finite(A) || !all_finite(x))
    throw std::invalid_argument("analog_mvm: non-finite operand");
  if (cfg.mode == EncodingMode::RealOnly && (has_imag(A) || has_imag(x)))
    throw std::invalid_argument(
        "analog_mvm: complex operand in real-only encoding mode");

  auto [a_scaled, a_info] = normalize_range(A);
  auto [x_scaled, x_info] = normalize_range(x);

  const QuantSpec spec{cfg.bits, 1.0};
  AnalogResult out;
  const ComplexMatrix a_code = quantize_uniform(a_scaled, spec, &out.saturations);
  const ComplexVector x_code = quantize_uniform(x_scaled, spec, &out.saturations);

  out.value = mvm_exact(a_code, x_code);
  out.analog_ops = static_cast<std::uint64_t>(A.rows) * A.cols;

  if (cfg.sigma > 0.0) {
    // Readout noise scales with the full-scale of the output batch: the
    // detector range is set once per batch, so every channel sees the same
    // absolute noise level.
    const double full_scale = max_component(out.value);
    if (full_scale > 0.0) {
      auto rng = make_rng(cfg.seed, stream);
      std::normal_distribution<double> noise(0.0, cfg.sigma * full_scale);
      for (auto& y : out.value) {
        const double re = y.real() + noise(rng);
        double im = y.imag();
        if (cfg.mode == EncodingMode::Complex) im += noise(rng);
        y = cplx(re, im);
      }
    }
  }

  const double undo = a_info.scale * x_info.scale;
  for (auto& y : out.value) y *= undo;
  return out;
}

double bits_from_sigma(double sigma) {
  if (!(sigma > 0.0) || sigma >= 1.0)
    throw std::domain_error("bits_from_sigma: sigma must be in (0, 1)");
  return std::log2(1.0 / sigma) + 1.0;
}

double sigma_from_bits(double bits) {
  if (!(bits >= 1.0))
    throw std::domain_error("sigma_from_bits: bits must be >= 1");
  return std::exp2(1.0 - bits);
}

namespace {

/// Stats of an already-normalized error sample.
ErrorStats stats_from_errors(const std::vector<double>& e) {
  const double n = static_cast<double>(e.size());
  const double mean = std::accumulate(e.begin(), e.end(), 0.0) / n;
  double var = 0.0;
  for (double v : e) var += (v - mean) * (v - mean);
  var /= n;

  ErrorStats s;
  s.sigma = std::sqrt(var);
  s.mse = s.sigma * s.sigma;
  // 24 bits is the resolution floor of the bookkeeping, reached at sigma = 0.
  s.bits = s.sigma <= sigma_from_bits(24.0) ? 24.0
                                            : std::log2(1.0 / s.sigma) + 1.0;
  return s;
}

}  // namespace

ErrorStats error_stats(const std::vector<double>& measured,
                       const std::vector<double>& truth) {
  if (measured.size() != truth.size())
    throw std::invalid_argument("error_stats: length mismatch");
  if (measured.size() < 2)
    throw std::invalid_argument("error_stats: need at least 2 samples");

  double full_scale = 0.0;
  for (double t : truth) full_scale = std::max(full_scale, std::abs(t));
  const double norm = full_scale > 0.0 ? full_scale : 1.0;

  std::vector<double> e(measured.size());
  for (std::size_t i = 0; i < e.size(); ++i)
    e[i] = (measured[i] - truth[i]) / norm;
  return stats_from_errors(e);
}

ChannelErrorStats error_stats(const ComplexVector& measured,
                              const ComplexVector& truth) {
  if (measured.size() != truth.size())
    throw std::invalid_argument("error_stats: length mismatch");
  if (measured.size() < 2)
    throw std::invalid_argument("error_stats: need at least 2 samples");

  const double full_scale = max_component(truth);
  const double norm = full_scale > 0.0 ? full_scale : 1.0;

  std::vector<double> er(measured.size()), ei(measured.size());
  for (std::size_t i = 0; i < measured.size(); ++i) {
    er[i] = (measured[i].real() - truth[i].real()) / norm;
    ei[i] = (measured[i].imag() - truth[i].imag()) / norm;
  }

  ChannelErrorStats s;
  s.real_part = stats_from_errors(er);
  s.imag_part = stats_from_errors(ei);
  s.full_scale = norm;
  return s;
}

namespace {

// Readout-noise operating points measured on the physical link.  "-cal"
// entries apply the per-channel transfer-function equalization described in
// equalizer.hpp; the bare 128gsps entry is the calibrated figure at the
// fastest sampler.
constexpr std::pair<const char*, double> kSigmaPresets[] = {
    {"10msps", 0.0039},        {"50msps", 0.0078},
    {"50msps-cal", 0.0025},    {"500msps", 0.0517},
    {"500msps-cal", 0.0063},   {"5gsps", 0.086},
    {"5gsps-cal", 0.018},      {"40gsps", 0.0568},
    {"40gsps-cal", 0.0172},    {"128gsps-uncal", 0.10},
    {"128gsps", 0.04},
};

}  // namespace

std::optional<double> sigma_preset(std::string_view name) {
  for (const auto& [key, value] : kSigmaPresets)
    if (name == key) return value;
  return std::nullopt;
}

std::vector<std::pair<std::string, double>> sigma_presets() {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(std::size(kSigmaPresets));
  for (const auto& [key, value] : kSigmaPresets) out.emplace_back(key, value);
  return out;
}

}  // namespace homodyne
