#include "homodyne/equalizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "homodyne/rng.hpp"

namespace homodyne {

void fft_pow2(ComplexVector& data, bool inverse) {
  const std::size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft_pow2: length must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi /
                       static_cast<double>(len);
    const cplx wlen = std::polar(1.0, ang);
    for (std::size_t i = 0; i < n; i += len) {
      cplx w{1.0, 0.0};
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cplx u = data[i + k];
        const cplx v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& z : data) z *= scale;
  }
}

ComplexVector fft_real(const std::vector<double>& x) {
  ComplexVector z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = cplx(x[i], 0.0);
  fft_pow2(z);
  return z;
}

void ChannelModel::validate() const {
  if (impulse.empty())
    throw std::invalid_argument("ChannelModel: impulse response needs >= 1 tap");
  for (double t : impulse)
    if (!std::isfinite(t))
      throw std::invalid_argument("ChannelModel: non-finite impulse tap");
  if (echo && !(std::abs(echo->amplitude) < 1.0))
    throw std::invalid_argument("ChannelModel: |echo amplitude| must be < 1");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
    throw std::invalid_argument("ChannelModel: noise_std must be >= 0");
}

ChannelModel ChannelModel::default_synthetic() {
  ChannelModel ch;
  ch.impulse = {0.92, 0.08, 0.04, 0.02, 0.01};
  ch.echo = ChannelEcho{3, 0.25};
  ch.noise_std = 0.004;
  return ch;
}

void ProbeConfig::validate() const {
  if (n_datasets < 1)
    throw std::invalid_argument("ProbeConfig: n_datasets must be >= 1");
  if (symbols_per_dataset < 8 ||
      (symbols_per_dataset & (symbols_per_dataset - 1)) != 0)
    throw std::invalid_argument(
        "ProbeConfig: symbols_per_dataset must be a power of two >= 8");
}

void TransferFunction::validate() const {
  if (gains.empty())
    throw std::invalid_argument("TransferFunction: no gains");
  for (cplx g : gains)
    if (!std::isfinite(g.real()) || !std::isfinite(g.imag()))
      throw std::invalid_argument("TransferFunction: non-finite gain");
  const double dc = std::abs(gains.front());
  if (!(dc > 0.0) || dc > 10.0)
    throw std::invalid_argument(
        "TransferFunction: DC gain magnitude must lie in (0, 10]");
}

std::vector<double> apply_channel(const std::vector<double>& x,
                                  const ChannelModel& ch, std::uint64_t seed) {
  ch.validate();
  if (x.empty()) throw std::invalid_argument("apply_channel: empty input");

  const std::size_t n = x.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t k = 0; k < ch.impulse.size(); ++k) {
    const double tap = ch.impulse[k];
    if (tap == 0.0) continue;
    const std::size_t d = k % n;
    for (std::size_t i = 0; i < n; ++i) y[i] += tap * x[(i + n - d) % n];
  }
  if (ch.echo && ch.echo->amplitude != 0.0) {
    const std::size_t d = ch.echo->delay % n;
    for (std::size_t i = 0; i < n; ++i)
      y[i] += ch.echo->amplitude * x[(i + n - d) % n];
  }
  if (ch.noise_std > 0.0) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> noise(0.0, ch.noise_std);
    for (auto& v : y) v += noise(rng);
  }
  return y;
}

TransferFunction measure_transfer(const ChannelModel& ch,
                                  const ProbeConfig& probe) {
  ch.validate();
  probe.validate();

  const std::size_t n = probe.symbols_per_dataset;
  ComplexVector ratio_sum(n, cplx(0.0, 0.0));
  std::vector<double> excitation(n, 0.0);

  for (std::size_t d = 0; d < probe.n_datasets; ++d) {
    auto rng = make_rng(probe.seed, 2 * d);
    std::uniform_real_distribution<double> symbol(-1.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = symbol(rng);

    const std::vector<double> y =
        apply_channel(x, ch, derive_seed(probe.seed, 2 * d + 1));
    const ComplexVector X = fft_real(x);
    const ComplexVector Y = fft_real(y);
    // Excitation-weighted mean of the per-dataset ratios Y/X.  A random
    // probe occasionally leaves a bin almost unexcited; an unweighted ratio
    // average picks up a 1/|X| tail there (infinite variance, so the
    // estimate stops improving like 1/sqrt(datasets)).  Weighting each
    // dataset's ratio by its own |X| caps that tail: the numerator becomes
    // a finite-variance sum and the denominator a concentrated positive sum.
    for (std::size_t k = 0; k < n; ++k) {
      const double mag = std::abs(X[k]);
      excitation[k] += mag;
      if (mag > 0.0) ratio_sum[k] += mag * (Y[k] / X[k]);
    }
  }

  const double max_excitation =
      *std::max_element(excitation.begin(), excitation.end());

  TransferFunction H;
  H.gains.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (excitation[k] < 1e-6 * max_excitation) {
      H.gains[k] = cplx(1.0, 0.0);
      ++H.unexcited_bins;
    } else {
      H.gains[k] = ratio_sum[k] / excitation[k];
    }
  }
  H.validate();
  return H;
}

TransferFunction limit_bandwidth(TransferFunction H, double fraction) {
  H.validate();
  if (!(fraction >= 0.0))
    throw std::invalid_argument("limit_bandwidth: fraction must be >= 0");
  if (fraction >= 1.0) return H;

  const std::size_t n = H.gains.size();
  const double nyquist = static_cast<double>(n) / 2.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double f = static_cast<double>(std::min(k, n - k)) / nyquist;
    if (f > fraction) H.gains[k] = cplx(1.0, 0.0);
  }
  return H;
}

std::vector<double> precompensate(const std::vector<double>& x,
                                  const TransferFunction& H,
                                  std::size_t* clamped) {
  H.validate();
  if (x.empty()) throw std::invalid_argument("precompensate: empty input");

  const std::size_t n = H.n_taps();
  double max_mag = 0.0;
  for (cplx g : H.gains) max_mag = std::max(max_mag, std::abs(g));
  const double floor_mag = kInverseFloorFraction * max_mag;

  std::size_t n_clamped = 0;
  std::vector<double> out(x.size());
  for (std::size_t start = 0; start < x.size(); start += n) {
    const std::size_t len = std::min(n, x.size() - start);
    ComplexVector X(n, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < len; ++i) X[i] = cplx(x[start + i], 0.0);
    fft_pow2(X);
    for (std::size_t k = 0; k < n; ++k) {
      cplx g = H.gains[k];
      const double mag = std::abs(g);
      if (mag < floor_mag) {
        ++n_clamped;
        g = mag > 0.0 ? g * (floor_mag / mag) : cplx(floor_mag, 0.0);
      }
      X[k] /= g;
    }
    fft_pow2(X, true);
    for (std::size_t i = 0; i < len; ++i) out[start + i] = X[i].real();
  }
  if (clamped) *clamped = n_clamped;
  return out;
}

std::vector<double> default_test_payload(std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed, 0x70617921ULL);
  std::uniform_real_distribution<double> symbol(-1.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) {
    const double u = symbol(rng);
    const double u2 = u * u;
    v = u * u2 * u2 * u2 * u2;  // u^9: heavy-tailed, sign-preserving
  }
  return x;
}

EqualizationReport equalization_report(const ChannelModel& ch,
                                       const ProbeConfig& probe,
                                       const std::vector<double>& payload,
                                       double bandwidth_limit) {
  if (payload.size() < 2)
    throw std::invalid_argument("equalization_report: payload too short");

  TransferFunction H = measure_transfer(ch, probe);
  if (bandwidth_limit > 0.0) H = limit_bandwidth(H, bandwidth_limit);
  const std::size_t n = H.n_taps();

  // Held-out channel-noise streams, disjoint from the probe's streams.
  const std::uint64_t test_seed = derive_seed(probe.seed, 0x7e5700ULL);

  std::vector<double> x_pad = payload;
  x_pad.resize((payload.size() + n - 1) / n * n, 0.0);

  EqualizationReport report;
  const std::vector<double> x_pre = precompensate(x_pad, H, &report.clamped_bins);

  // Blocks are transmitted as separate frames; the raw and compensated paths
  // share each frame's noise realization so the comparison is paired.
  std::vector<double> y_before(x_pad.size()), y_after(x_pad.size());
  for (std::size_t b = 0; b * n < x_pad.size(); ++b) {
    const std::vector<double> xb(x_pad.begin() + b * n,
                                 x_pad.begin() + (b + 1) * n);
    const std::vector<double> pb(x_pre.begin() + b * n,
                                 x_pre.begin() + (b + 1) * n);
    const std::uint64_t frame_seed = derive_seed(test_seed, b);
    const std::vector<double> yb = apply_channel(xb, ch, frame_seed);
    const std::vector<double> ya = apply_channel(pb, ch, frame_seed);
    std::copy(yb.begin(), yb.end(), y_before.begin() + b * n);
    std::copy(ya.begin(), ya.end(), y_after.begin() + b * n);
  }

  const std::vector<double> mb(y_before.begin(),
                               y_before.begin() + payload.size());
  const std::vector<double> ma(y_after.begin(),
                               y_after.begin() + payload.size());
  report.before = error_stats(mb, payload);
  report.after = error_stats(ma, payload);

  double full_scale = 0.0;
  for (double v : payload) full_scale = std::max(full_scale, std::abs(v));
  if (full_scale == 0.0) full_scale = 1.0;
  report.errors_before.resize(payload.size());
  report.errors_after.resize(payload.size());
  for (std::size_t i = 0; i < payload.size(); ++i) {
    report.errors_before[i] = (mb[i] - payload[i]) / full_scale;
    report.errors_after[i] = (ma[i] - payload[i]) / full_scale;
  }

  const ComplexVector X =
      fft_real({x_pad.begin(), x_pad.begin() + n});
  const ComplexVector Yb =
      fft_real({y_before.begin(), y_before.begin() + n});
  const ComplexVector Ya =
      fft_real({y_after.begin(), y_after.begin() + n});
  report.h_mag.resize(n);
  report.spectrum_input.resize(n);
  report.spectrum_before.resize(n);
  report.spectrum_after.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    report.h_mag[k] = std::abs(H.gains[k]);
    report.spectrum_input[k] = std::abs(X[k]);
    report.spectrum_before[k] = std::abs(Yb[k]);
    report.spectrum_after[k] = std::abs(Ya[k]);
  }
  report.unexcited_bins = H.unexcited_bins;
  return report;
}

}  // namespace homodyne
