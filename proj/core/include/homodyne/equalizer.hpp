#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "homodyne/emulator.hpp"
#include "homodyne/tensor.hpp"

namespace homodyne {

/// In-place radix-2 FFT (inverse applies the 1/N factor).  Length must be a
/// power of two; throws std::invalid_argument otherwise.
void fft_pow2(ComplexVector& data, bool inverse = false);

/// FFT of a real sequence (power-of-two length).
ComplexVector fft_real(const std::vector<double>& x);

/// Linear distortion model for the encoding path: an FIR impulse response,
/// an optional discrete echo (impedance-mismatch reflection), and additive
/// Gaussian noise at the output.  All filtering is circular over the block.
struct ChannelEcho {
  std::size_t delay = 0;  // in symbols
  double amplitude = 0.0;
};

struct ChannelModel {
  std::vector<double> impulse{1.0};
  std::optional<ChannelEcho> echo;
  double noise_std = 0.0;

  /// Throws std::invalid_argument when impulse is empty, |echo amplitude|
  /// >= 1, or noise_std < 0.
  void validate() const;

  /// The default distorted channel used by the demo pipeline: a 5-tap
  /// lowpass, an echo at 3 symbols with amplitude 0.25, and noise std 0.004,
  /// tuned so uncompensated encoding error lands in the 5-6% regime.
  static ChannelModel default_synthetic();
};

/// Probing plan for transfer-function measurement.  Block length must be a
/// power of two >= 8 so measurement and compensation share radix-2 transforms.
struct ProbeConfig {
  std::size_t n_datasets = 100;
  std::size_t symbols_per_dataset = 1024;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Frequency response of the channel, one complex gain per DFT bin of the
/// probe block.
struct TransferFunction {
  std::vector<cplx> gains;
  /// Bins whose averaged probe excitation was below threshold; their gain is
  /// pinned to 1.
  std::size_t unexcited_bins = 0;

  std::size_t n_taps() const { return gains.size(); }

  /// Throws std::invalid_argument when gains are empty or non-finite, or the
  /// DC gain magnitude falls outside (0, 10].
  void validate() const;
};

/// Fraction of max|H| below which inverse-filter gains are clamped rather
/// than inverted, bounding noise amplification on dead bins.
inline constexpr double kInverseFloorFraction = 0.05;

/// Push one block through the channel: circular FIR convolution, plus the
/// echo tap, plus white Gaussian output noise drawn from `seed`.
std::vector<double> apply_channel(const std::vector<double>& x,
                                  const ChannelModel& ch, std::uint64_t seed);

/// Averaged transfer function from random probe blocks: the mean over
/// datasets of DFT(channel(x)) / DFT(x) with x uniform in [-1, 1].
/// Deterministic given probe.seed (per-dataset derived streams).
TransferFunction measure_transfer(const ChannelModel& ch,
                                  const ProbeConfig& probe);

/// Models a detector calibrated only over part of the band: bins whose
/// normalized frequency exceeds `fraction` of Nyquist keep gain 1
/// (uncompensated).  fraction >= 1 returns H unchanged.
TransferFunction limit_bandwidth(TransferFunction H, double fraction);

/// Inverse filter: IDFT(DFT(x) / H), segmented into n_taps-length blocks
/// (zero-padded at the tail, output trimmed to the input length).  Gains with
/// magnitude below kInverseFloorFraction * max|H| are clamped to the floor
/// magnitude at their own phase before division; `clamped` (optional) counts
/// how many bins the floor touched.
std::vector<double> precompensate(const std::vector<double>& x,
                                  const TransferFunction& H,
                                  std::size_t* clamped = nullptr);

/// Held-out test waveform: sign-preserving ninth-power shaping of uniform
/// symbols, giving the heavy-tailed amplitude profile of natural operand
/// streams (mostly small values, occasional near-full-scale peaks).
std::vector<double> default_test_payload(std::size_t n, std::uint64_t seed);

/// End-to-end equalization study on held-out data: encode the payload through
/// the raw channel and through precompensation + channel (same channel noise
/// realization, so the comparison is a controlled A/B), score both against the
/// clean payload, and emit the frequency-domain traces of the first block.
struct EqualizationReport {
  ErrorStats before;
  ErrorStats after;
  /// Per-bin magnitudes over the first processed block.
  std::vector<double> h_mag;
  std::vector<double> spectrum_input;
  std::vector<double> spectrum_before;
  std::vector<double> spectrum_after;
  /// Per-sample received-minus-sent errors relative to the payload full
  /// scale (same normalization the ErrorStats use).
  std::vector<double> errors_before;
  std::vector<double> errors_after;
  std::size_t clamped_bins = 0;
  std::size_t unexcited_bins = 0;
};

/// bandwidth_limit > 0 passes the measured response through limit_bandwidth
/// before precompensation.
EqualizationReport equalization_report(const ChannelModel& ch,
                                       const ProbeConfig& probe,
                                       const std::vector<double>& payload,
                                       double bandwidth_limit = 0.0);

}  // namespace homodyne
