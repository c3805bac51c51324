#pragma once

// Essentially exact solver for -(a u')' = f on an interval with Dirichlet
// data, built on the 1D flux integration formula
//
//   F(x) = int_s^x f,   sigma = a u' = C - F,
//   u(x) = u(s) + int_s^x (C - F) / a,
//
// with C fixed by the right boundary value. Integrals use composite 5-point
// Gauss rules on a partition that contains every jump of the coefficient.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "homoglab/fields.hpp"

namespace homoglab::solve1d {

struct Interval {
  double s = 0.0;
  double t = 1.0;

  /// Throws ValidationError unless s < t.
  static Interval checked(double s, double t);
  double length() const noexcept { return t - s; }
};

/// Right-hand side f, with an exact primitive when f is a polynomial.
class Source1D {
 public:
  /// f(x) = sum_k coeffs[k] x^k
  static Source1D polynomial(std::vector<double> coeffs);
  static Source1D constant(double value);
  static Source1D from_function(std::function<double(double)> f, std::string description);

  double operator()(double x) const { return f_(x); }
  const std::optional<std::vector<double>>& polynomial_coefficients() const noexcept { return poly_; }
  /// Some primitive P with P' = f, when known in closed form.
  std::optional<double> primitive(double x) const;
  const std::string& description() const noexcept { return description_; }

 private:
  Source1D(std::function<double(double)> f, std::optional<std::vector<double>> poly, std::string description);

  std::function<double(double)> f_;
  std::optional<std::vector<double>> poly_;
  std::string description_;
};

struct DirichletData {
  double left = 0.0;
  double right = 0.0;
};

/// Grid samples of u and sigma = a u'. The grid is a sequence of Simpson
/// panels (x[2k], x[2k+1], x[2k+2]), one per partition cell, with x[2k+1]
/// the cell midpoint.
struct Solution1D {
  Interval domain;
  std::vector<double> x;
  std::vector<double> u;
  std::vector<double> flux;
  double flux_constant = 0.0;  // C in sigma = C - F
  double energy = 0.0;         // int a (u')^2 = int sigma^2 / a
  double gradient_l2 = 0.0;    // ||u'||_{L2}
  std::size_t partition_cells = 0;
  std::string coefficient;
  std::string source;

  std::size_t panels() const noexcept { return partition_cells; }
  /// Piecewise-quadratic interpolant through the panel samples.
  double interpolate(double at) const;
  double interpolate_flux(double at) const;
};

/// Solves -(a u')' = f on the domain with u(s) = bc.left, u(t) = bc.right.
/// The partition is n_cells uniform cells, split at every coefficient jump
/// and refined to at most feature_length / 8 for smooth coefficients.
/// Throws ValidationError for n_cells < 2 and NumericalError when the
/// coefficient is not positive and finite at some quadrature node.
Solution1D solve_exact(const fields::Coefficient1D& coeff, const Source1D& f, Interval domain, int n_cells,
                       DirichletData bc = {});

using Reference = std::function<double(double)>;

/// sqrt(int (u - v)^2) by composite Simpson on the solution grid.
double l2_error(const Solution1D& u, const Reference& v);

/// Same for the flux samples against a reference flux.
double flux_l2_error(const Solution1D& u, const Reference& sigma_ref);

std::span<const double> flux_of(const Solution1D& u) noexcept;

/// Solution of the constant-coefficient problem -(abar u')' = f with
/// homogeneous data, and its flux abar u'.
struct HomogenizedSolution1D {
  double abar = 0.0;
  Reference u;
  Reference flux;
};

/// Closed form for polynomial sources; otherwise a fine solve_exact run.
HomogenizedSolution1D homogenized_solution(double abar, const Source1D& f, Interval domain);

/// int phi * sigma * u' = int phi * sigma^2 / a over the solution's partition.
double weighted_energy_density(const fields::Coefficient1D& coeff, const Source1D& f, const Solution1D& u,
                               const std::function<double(double)>& phi);

/// C-infinity bump exp(1 - 1 / (1 - r^2)), r = (x - center) / half_width, zero for |r| >= 1.
std::function<double(double)> smooth_bump(double center, double half_width);

}  // namespace homoglab::solve1d
