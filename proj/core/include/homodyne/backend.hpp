#pragma once

#include <cstdint>
#include <string>

#include "homodyne/emulator.hpp"
#include "homodyne/quantization.hpp"
#include "homodyne/tensor.hpp"

namespace homodyne {

/// Work ledger shared by all backends.  A "digital" MVM is a full-precision
/// host-side product; an "analog" MVM is one pass through the emulated core
/// (a bit-sliced multiply issues four).  analog_ops counts multiply-accumulate
/// operations performed in the analog domain.
struct BackendCounters {
  std::uint64_t digital_mvms = 0;
  std::uint64_t analog_mvms = 0;
  std::uint64_t analog_ops = 0;
};

/// Pluggable matrix-vector multiply engine.  Solvers are written against this
/// interface so the same algorithm can run exactly, through the noisy analog
/// emulator, through the bit-sliced pipeline, or with a sparse/dense split.
///
/// `sigma_scale` multiplies the backend's configured readout-noise level for
/// this one call (1 = nominal).  Exact backends ignore it.
class MvmBackend {
 public:
  virtual ~MvmBackend() = default;

  virtual ComplexVector multiply(const ComplexMatrix& A, const ComplexVector& x,
                                 double sigma_scale = 1.0) = 0;

  virtual std::string name() const = 0;

  const BackendCounters& counters() const { return counters_; }
  void reset_counters() { counters_ = {}; }

 protected:
  BackendCounters counters_;
};

/// Full-precision reference backend; every multiply is digital and noiseless.
class ExactBackend final : public MvmBackend {
 public:
  ComplexVector multiply(const ComplexMatrix& A, const ComplexVector& x,
                         double sigma_scale = 1.0) override;
  std::string name() const override { return "exact"; }
};

/// Routes every multiply through the emulated analog core.  Each call uses a
/// fresh deterministic noise stream (seed, call index), so rerunning an
/// identical sequence of multiplies reproduces identical results.
class AnalogBackend final : public MvmBackend {
 public:
  explicit AnalogBackend(EmulatorConfig cfg);

  ComplexVector multiply(const ComplexMatrix& A, const ComplexVector& x,
                         double sigma_scale = 1.0) override;
  std::string name() const override { return "analog"; }

  const EmulatorConfig& config() const { return cfg_; }
  std::uint64_t calls() const { return calls_; }
  std::uint64_t saturations() const { return saturations_; }

 private:
  EmulatorConfig cfg_;
  std::uint64_t calls_ = 0;
  std::uint64_t saturations_ = 0;
};

/// 16-bit operands on an 8-bit core: operands are quantized to 16-bit integer
/// codes, each code is split into a signed high byte and unsigned low byte,
/// and the product is assembled from four 8-bit analog passes
///   y = 2^16 (Ah xh) + 2^8 (Ah xl + Al xh) + Al xl.
/// The byte slices are themselves the DAC codes, so the four passes skip the
/// encoder requantization and only add readout noise.  Per-term noise is
/// scaled by (1/256, 1/16, 1/16, 1): high-order passes integrate longer, which
/// is what makes the recombined word resolve ~16 bits.
class BitslicedBackend final : public MvmBackend {
 public:
  explicit BitslicedBackend(EmulatorConfig cfg);

  ComplexVector multiply(const ComplexMatrix& A, const ComplexVector& x,
                         double sigma_scale = 1.0) override;
  std::string name() const override { return "bitsliced"; }

  const EmulatorConfig& config() const { return cfg_; }
  std::uint64_t calls() const { return calls_; }

 private:
  EmulatorConfig cfg_;
  std::uint64_t calls_ = 0;
};

/// Splits the operator into a hard-to-quantize sparse part, applied digitally,
/// and a well-conditioned dense remainder routed through an inner backend:
///   A x = S x (digital scatter-add) + D x (inner).
/// The split is fixed at construction; multiply() checks only that the passed
/// matrix has the split's shape and then substitutes S + D for it.  Inner
/// analog work is mirrored into this backend's counters so a solver holding
/// the split sees the whole ledger.
class SplitBackend final : public MvmBackend {
 public:
  SplitBackend(SparseDenseSplit split, MvmBackend& inner);

  ComplexVector multiply(const ComplexMatrix& A, const ComplexVector& x,
                         double sigma_scale = 1.0) override;
  std::string name() const override;

  const SparseDenseSplit& split() const { return split_; }
  MvmBackend& inner() { return inner_; }
  /// Multiply-accumulate operations spent on the digital sparse part.
  std::uint64_t sparse_ops() const { return sparse_ops_; }

 private:
  SparseDenseSplit split_;
  MvmBackend& inner_;
  std::uint64_t sparse_ops_ = 0;
};

}  // namespace homodyne
