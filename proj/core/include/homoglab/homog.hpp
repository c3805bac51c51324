#pragma once

// Effective coefficients: the 1D harmonic mean, the periodization estimator
// built on the discrete cell problem, energy/flux consistency, SPD checks
// and Voigt-Reuss bounds.

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "homoglab/fem2d.hpp"
#include "homoglab/fields.hpp"

namespace homoglab::homog {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

enum class Provenance { formula, periodization };

struct EffectiveTensor {
  int dim = 2;           // 1: only value[0][0] is meaningful
  Mat2 value{};          // symmetrized (A + A^T) / 2
  Mat2 raw{};            // column j = cell average of A (grad chi_j + e_j)
  Mat2 standard_error{};
  double asymmetry = 0.0;           // |raw12 - raw21|
  double relative_asymmetry = 0.0;  // asymmetry / max |raw_ij|
  Provenance provenance = Provenance::periodization;
  int tiles = 0;                    // torus side L
  int realizations = 1;             // ensemble size M
  int elements_per_tile = 0;

  /// Eigenvalues of the symmetrized value, ascending.
  Vec2 eigenvalues() const noexcept;
  static EffectiveTensor scalar(double a, Provenance p);
};

/// (sum p_i / kappa_i)^-1
double harmonic_mean_1d(const fields::TileLaw& law) noexcept;
/// (int_0^period 1/a)^-1 * period, by adaptive Gauss quadrature.
double harmonic_mean_1d(const std::function<double(double)>& a, double period = 1.0, double tol = 1e-14);

struct VoigtReussBounds {
  double harmonic = 0.0;
  double arithmetic = 0.0;
};

VoigtReussBounds voigt_reuss_bounds(const fields::TileLaw& law) noexcept;
template <int Dim>
VoigtReussBounds voigt_reuss_bounds(const fields::CheckerboardSpec<Dim>& spec) noexcept {
  return voigt_reuss_bounds(spec.law);
}
/// Bounds for an equal-weight sample, e.g. the realized tiles of one cell.
VoigtReussBounds voigt_reuss_bounds(std::span<const double> values);

/// Tile values of the realization on the torus tiles [0, L)^2, index i + j L.
std::vector<double> cell_tile_values(const fields::Checkerboard2D& realization, int tiles);

fem2d::PeriodicCellProblem cell_problem(const fields::Checkerboard2D& realization, int tiles, int elements_per_tile,
                                        Vec2 xi);

struct Corrector {
  int tiles = 0;
  int elements_per_tile = 0;
  Vec2 xi{};
  std::vector<double> chi;                 // periodic nodal field, mean zero
  std::vector<Vec2> element_gradient;      // mean of grad chi per element
  long iterations = 0;
  double residual = 0.0;

  /// Cell average of grad chi.
  Vec2 mean_gradient() const noexcept;
};

Corrector corrector_solve(const fem2d::PeriodicCellProblem& problem, double tol = 1e-10);
/// Throws ValidationError for L < 2 or xi = 0.
Corrector corrector_solve(const fields::Checkerboard2D& realization, int tiles, Vec2 xi, int elements_per_tile = 4,
                          double tol = 1e-10);

/// Cell average of A (grad chi + xi).
Vec2 cell_average_flux(const fem2d::PeriodicCellProblem& problem, const Corrector& corrector);

EffectiveTensor effective_tensor_from_cell(const std::vector<fem2d::SymTensor2>& coefficient, int tiles,
                                           int elements_per_tile, double tol = 1e-10);
EffectiveTensor effective_tensor_single(const fields::Checkerboard2D& realization, int tiles,
                                        int elements_per_tile = 4, double tol = 1e-10);

struct EnsembleOptions {
  int tiles = 8;
  int realizations = 16;
  fields::Seed seed0{};
  int elements_per_tile = 4;
  double tol = 1e-10;
  unsigned workers = 0;  // 0: worker_count()
};

struct MemberFailure {
  std::size_t index;
  fields::Seed seed;
  std::string message;
};

struct EnsembleMember {
  std::size_t index;
  fields::Seed seed;
  EffectiveTensor tensor;
  VoigtReussBounds cell_bounds;
};

struct EnsembleEstimate {
  EffectiveTensor mean;
  std::vector<EnsembleMember> members;  // successful members, ordered by index
  std::vector<MemberFailure> failures;
};

/// Realization k uses Seed{seed0 + k}. Failed members are recorded and
/// skipped; throws NumericalError if fewer than M/2 succeed and
/// ValidationError for M < 2.
EnsembleEstimate effective_tensor_ensemble(const fields::Checkerboard2DSpec& spec, const EnsembleOptions& options);

struct EnergyConsistency {
  double flux_value = 0.0;         // xi . <A (grad chi + xi)>
  double energy_value = 0.0;       // <(xi + grad chi) . A (xi + grad chi)>
  double gap = 0.0;                // |flux - energy| / |energy|
  double zero_trial_energy = 0.0;  // J_xi(0) = <xi . A xi>
};

EnergyConsistency energy_consistency(const Corrector& corrector, const fem2d::PeriodicCellProblem& problem);

struct SpdReport {
  bool pass = true;
  double symmetry_gap = 0.0;  // relative, pre-symmetrization
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double lower_margin = 0.0;  // nu1 - min eigenvalue when violated, else 0
  double upper_margin = 0.0;  // max eigenvalue - nu2 when violated, else 0
  std::vector<std::string> violations;
};

SpdReport spd_check(const EffectiveTensor& a, const fields::EllipticityBounds& bounds, double tol = 1e-8,
                    double symmetry_tol = 1e-6);

/// 1D periodization: periodic P1 cell problem on L tiles of the realization,
/// returning the cell-averaged flux <a (chi' + 1)>.
double periodization_1d(const fields::Checkerboard1D& realization, int tiles, int elements_per_tile = 4,
                        double tol = 1e-12);

/// Harmonic mean of the realization's tiles 0..L-1.
double realized_harmonic_mean_1d(const fields::Checkerboard1D& realization, int tiles);

}  // namespace homoglab::homog
