#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "homodyne/tensor.hpp"

namespace homodyne {

/// Which quadratures the emulated link carries.  RealOnly rejects operands
/// with nonzero imaginary parts; Complex encodes both quadratures and draws
/// independent readout noise on each.
enum class EncodingMode { RealOnly, Complex };

/// Operating point of the emulated analog matrix-vector engine.
///
/// `bits` is the DAC/encoder word length applied to both operands after range
/// normalization.  `sigma` is the additive readout-noise level expressed as a
/// fraction of the output batch full-scale (0 disables noise).
/// `max_vector_len` models the integration window: input vectors longer than
/// this are rejected rather than silently chunked.
struct EmulatorConfig {
  int bits = 12;
  double sigma = 0.0;
  EncodingMode mode = EncodingMode::Complex;
  std::size_t max_vector_len = 784;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when outside the supported envelope
  /// (bits in [2, 24], sigma in [0, 1), max_vector_len >= 1).
  void validate() const;
};

struct AnalogResult {
  ComplexVector value;
  /// Multiply-accumulate count performed in the analog domain (rows * cols).
  std::uint64_t analog_ops = 0;
  /// Encoder saturation events across both quantized operands.
  std::uint64_t saturations = 0;
};

/// One emulated analog matrix-vector product.
///
/// Pipeline: range-normalize both operands (power-of-two scale so the undo
/// step is bit-exact), quantize each to `cfg.bits`, accumulate exactly,
/// add white Gaussian readout noise with std `cfg.sigma` times the output
/// batch full-scale (per quadrature in Complex mode), then undo the scaling.
/// `stream` selects a deterministic noise stream derived from (cfg.seed,
/// stream); the same (operands, config, stream) always reproduces the same
/// output.
AnalogResult analog_mvm(const ComplexMatrix& A, const ComplexVector& x,
                        const EmulatorConfig& cfg, std::uint64_t stream = 0);

/// Effective bit precision of a relative error level: log2(1/sigma) + 1,
/// the extra bit accounting for sign.  Requires sigma in (0, 1).
double bits_from_sigma(double sigma);

/// Inverse of bits_from_sigma: sigma = 2^(1 - bits).  Requires bits >= 1.
double sigma_from_bits(double bits);

/// Error statistics of a measurement against ground truth, normalized by the
/// truth full-scale (max absolute component).  `sigma` is the standard
/// deviation of the normalized error, `mse` its square, and `bits` the
/// equivalent precision, clipped to 24 when the error is at or below the
/// 24-bit floor.
struct ErrorStats {
  double sigma = 0.0;
  double mse = 0.0;
  double bits = 0.0;
};

ErrorStats error_stats(const std::vector<double>& measured,
                       const std::vector<double>& truth);

/// Complex overload: real and imaginary parts are scored separately but share
/// one full-scale, the max over max(|Re|, |Im|) of the truth vector.
struct ChannelErrorStats {
  ErrorStats real_part;
  ErrorStats imag_part;
  double full_scale = 0.0;
};

ChannelErrorStats error_stats(const ComplexVector& measured,
                              const ComplexVector& truth);

/// Named operating points measured on the physical link at different sampler
/// rates ("50msps", "50msps-cal", "500msps", ..., "128gsps"), mapping to
/// readout-noise sigma.  Returns nullopt for unknown names.
std::optional<double> sigma_preset(std::string_view name);

/// All preset (name, sigma) pairs in a stable order.
std::vector<std::pair<std::string, double>> sigma_presets();

}  // namespace homodyne
