#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "homodyne/tensor.hpp"

namespace homodyne {

/// Electrostatic charge distribution on a straight thin wire held at a fixed
/// potential, discretized by midpoint collocation into a dense real system.
struct WireChargeProblem {
  double length = 1.0;       // meters
  double radius = 1e-3;      // meters
  std::size_t segments = 100;
  double potential = 1.0;    // volts
  double eps0 = 8.8541878128e-12;  // F/m

  void validate() const;
};

/// Coupling coefficient between match point m and source segment n:
/// (1 / 4 pi eps0) * integral over segment n of dx' / sqrt((z_m - x')^2 + a^2),
/// evaluated in closed form via the asinh antiderivative.  Depends only on
/// |m - n| (symmetric Toeplitz).
double charge_matrix_entry(const WireChargeProblem& p, std::size_t m,
                           std::size_t n);

/// Assembles the full system: A (N x N real SPD Toeplitz) and b = V * ones.
std::pair<ComplexMatrix, ComplexVector> assemble_charge_system(
    const WireChargeProblem& p);

/// Thin-wire EFIE (Pocklington form with the reduced kernel) for a
/// center-fed dipole spanning [-L, L]: match points at segment midpoints,
/// pulse basis, one-point source quadrature, and the d^2/dz^2 term by central
/// finite difference on the match grid — all of which keep the matrix
/// Toeplitz.
struct WireEfieProblem {
  double half_length = 0.25;          // meters (quarter wavelength at k0)
  double radius = 0.25 / 200.0;       // meters
  std::size_t match_points = 101;     // odd, feed at center
  double k0 = 2.0 * 3.14159265358979323846;  // rad/m (1 m wavelength)
  double z0 = 376.730313668;          // ohms
  double feed_voltage = 1.0;          // volts

  void validate() const;
  double segment_length() const {
    return 2.0 * half_length / static_cast<double>(match_points);
  }
};

/// Reduced kernel sampled on the match grid: g(k) = e^{-j k0 R} / (4 pi R)
/// with R = sqrt((k dz)^2 + a^2).
cplx efie_kernel(const WireEfieProblem& p, std::ptrdiff_t k);

/// Full matrix entry (depends on |m - n| only).
cplx efie_matrix_entry(const WireEfieProblem& p, std::size_t m, std::size_t n);

ComplexMatrix assemble_efie_matrix(const WireEfieProblem& p);

/// Delta-gap excitation: V / dz at the center match point, zero elsewhere.
/// Throws on even match-point counts.
ComplexVector delta_gap_rhs(const WireEfieProblem& p);

/// Synthetic high-dynamic-range system standing in for large scattering
/// matrices: an O(1) banded core, a log-uniform off-band tail spanning
/// `dynamic_range_db`, and ceil(3e-5 N^2) injected dominant outliers.
struct SyntheticHDRSystem {
  std::size_t size = 512;
  double dynamic_range_db = 80.0;
  std::size_t band_width = 8;  // half-bandwidth of the O(1) core
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthSystem {
  ComplexMatrix A;
  ComplexVector b;  // random unit-norm
  double condition_estimate = 0.0;
  std::uint64_t outliers = 0;
  int attempts = 1;  // reseed attempts consumed (max 5)
};

/// Throws std::runtime_error if five reseeds all leave the condition
/// estimate at or above 1e12.
SynthSystem synth_hdr_system(const SyntheticHDRSystem& cfg);

/// Replayable binary system format ("HOMS" v1, little-endian): header with
/// magic, version, rows, cols, followed by the matrix entries row-major as
/// (re, im) doubles and the rhs entries as (re, im) doubles.
void save_system(const std::string& path, const ComplexMatrix& A,
                 const ComplexVector& b);
std::pair<ComplexMatrix, ComplexVector> load_system(const std::string& path);

/// Inspection-grade CSV (RFC 4180): one matrix row per line, each entry as a
/// re column followed by an im column.
void save_matrix_csv(const std::string& path, const ComplexMatrix& A);

}  // namespace homodyne
