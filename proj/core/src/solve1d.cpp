#include "homoglab/solve1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "homoglab/errors.hpp"
#include "homoglab/quadrature.hpp"

namespace homoglab::solve1d {

using Gauss5 = quadrature::GaussLegendre<5>;

Interval Interval::checked(double s, double t) {
  if (!(s < t) || !std::isfinite(s) || !std::isfinite(t)) throw ValidationError("interval requires s < t");
  return {s, t};
}

Source1D::Source1D(std::function<double(double)> f, std::optional<std::vector<double>> poly, std::string description)
    : f_(std::move(f)), poly_(std::move(poly)), description_(std::move(description)) {}

namespace {

double horner(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
  return v;
}

std::vector<double> primitive_coefficients(const std::vector<double>& c) {
  std::vector<double> p(c.size() + 1, 0.0);
  for (std::size_t k = 0; k < c.size(); ++k) p[k + 1] = c[k] / static_cast<double>(k + 1);
  return p;
}

}  // namespace

Source1D Source1D::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) coeffs.push_back(0.0);
  std::ostringstream d;
  d.precision(17);
  d << "polynomial(";
  for (std::size_t k = 0; k < coeffs.size(); ++k) d << (k ? "," : "") << coeffs[k];
  d << ")";
  auto c = coeffs;
  return Source1D([c](double x) { return horner(c, x); }, std::move(coeffs), d.str());
}

Source1D Source1D::constant(double value) { return polynomial({value}); }

Source1D Source1D::from_function(std::function<double(double)> f, std::string description) {
  return Source1D(std::move(f), std::nullopt, std::move(description));
}

std::optional<double> Source1D::primitive(double x) const {
  if (!poly_) return std::nullopt;
  return horner(primitive_coefficients(*poly_), x);
}

namespace {

std::vector<double> build_partition(const fields::Coefficient1D& coeff, Interval dom, int n_cells) {
  std::vector<double> nodes;
  nodes.reserve(static_cast<std::size_t>(n_cells) + 1);
  const double h = dom.length() / n_cells;
  for (int i = 0; i <= n_cells; ++i) nodes.push_back(dom.s + i * h);
  nodes.back() = dom.t;
  const auto jumps = coeff.breakpoints(dom.s, dom.t);
  nodes.insert(nodes.end(), jumps.begin(), jumps.end());
  std::sort(nodes.begin(), nodes.end());
  // merge nodes closer than a few ulps; the jumps take precedence
  const double merge_tol = 1e-14 * std::max(1.0, std::abs(dom.s) + std::abs(dom.t));
  std::vector<double> merged;
  merged.reserve(nodes.size());
  for (double x : nodes) {
    if (!merged.empty() && x - merged.back() <= merge_tol) {
      if (std::binary_search(jumps.begin(), jumps.end(), x) && merged.size() > 1) merged.back() = x;
      continue;
    }
    merged.push_back(x);
  }
  merged.front() = dom.s;
  merged.back() = dom.t;

  const double feature = coeff.feature_length();
  if (!std::isfinite(feature)) return merged;
  const double max_cell = feature / 8.0;
  std::vector<double> refined;
  refined.reserve(merged.size());
  for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
    const double a = merged[i];
    const double b = merged[i + 1];
    const auto pieces = static_cast<int>(std::ceil((b - a) / max_cell - 1e-12));
    for (int k = 0; k < std::max(pieces, 1); ++k) refined.push_back(a + (b - a) * k / std::max(pieces, 1));
  }
  refined.push_back(dom.t);
  return refined;
}

/// F(x) = int_s^x f evaluated inside one cell, given F at the cell start.
class Primitive {
 public:
  Primitive(const Source1D& f, double s) : f_(f) {
    if (const auto& poly = f.polynomial_coefficients()) {
      coeffs_ = primitive_coefficients(*poly);
      origin_ = horner(coeffs_, s);
    }
  }

  double at(double cell_start, double f_at_start, double x) const {
    if (!coeffs_.empty()) return horner(coeffs_, x) - origin_;
    return f_at_start + quadrature::integrate<5>([this](double y) { return f_(y); }, cell_start, x);
  }

 private:
  const Source1D& f_;
  std::vector<double> coeffs_;
  double origin_ = 0.0;
};

double checked_coefficient(const fields::Coefficient1D& coeff, double x) {
  const double a = coeff(x);
  if (!(a > 0.0) || !std::isfinite(a)) {
    std::ostringstream msg;
    msg << "coefficient " << coeff.description() << " evaluates to " << a << " at x = " << x;
    throw NumericalError(msg.str());
  }
  return a;
}

struct CellIntegrals {
  double inv_a = 0.0;     // int 1/a
  double f_over_a = 0.0;  // int F/a
};

CellIntegrals integrate_cell(const fields::Coefficient1D& coeff, const Primitive& prim, double cell_start,
                             double f_start, double a, double b) {
  CellIntegrals out;
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t q = 0; q < 5; ++q) {
    const double x = mid + half * Gauss5::nodes[q];
    const double inv = 1.0 / checked_coefficient(coeff, x);
    out.inv_a += Gauss5::weights[q] * inv;
    out.f_over_a += Gauss5::weights[q] * prim.at(cell_start, f_start, x) * inv;
  }
  out.inv_a *= half;
  out.f_over_a *= half;
  return out;
}

}  // namespace

Solution1D solve_exact(const fields::Coefficient1D& coeff, const Source1D& f, Interval domain, int n_cells,
                       DirichletData bc) {
  domain = Interval::checked(domain.s, domain.t);
  if (n_cells < 2) throw ValidationError("solve_exact: n_cells must be >= 2");

  const auto part = build_partition(coeff, domain, n_cells);
  const std::size_t m = part.size() - 1;
  const Primitive prim(f, domain.s);

  // F at partition nodes
  std::vector<double> f_node(part.size(), 0.0);
  for (std::size_t k = 0; k < m; ++k) f_node[k + 1] = prim.at(part[k], f_node[k], part[k + 1]);

  std::vector<CellIntegrals> whole(m);
  std::vector<CellIntegrals> left_half(m);
  double total_inv = 0.0;
  double total_f = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double a = part[k];
    const double b = part[k + 1];
    whole[k] = integrate_cell(coeff, prim, a, f_node[k], a, b);
    left_half[k] = integrate_cell(coeff, prim, a, f_node[k], a, 0.5 * (a + b));
    total_inv += whole[k].inv_a;
    total_f += whole[k].f_over_a;
  }
  const double c = (bc.right - bc.left + total_f) / total_inv;

  Solution1D sol;
  sol.domain = domain;
  sol.flux_constant = c;
  sol.partition_cells = m;
  sol.coefficient = coeff.description();
  sol.source = f.description();
  sol.x.resize(2 * m + 1);
  sol.u.resize(2 * m + 1);
  sol.flux.resize(2 * m + 1);

  double u_start = bc.left;
  double energy = 0.0;
  double grad_sq = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double a = part[k];
    const double b = part[k + 1];
    const double mid = 0.5 * (a + b);
    sol.x[2 * k] = a;
    sol.x[2 * k + 1] = mid;
    sol.u[2 * k] = u_start;
    sol.u[2 * k + 1] = u_start + c * left_half[k].inv_a - left_half[k].f_over_a;
    sol.flux[2 * k] = c - f_node[k];
    sol.flux[2 * k + 1] = c - prim.at(a, f_node[k], mid);
    u_start += c * whole[k].inv_a - whole[k].f_over_a;

    const double half = 0.5 * (b - a);
    double e = 0.0;
    double g = 0.0;
    for (std::size_t q = 0; q < 5; ++q) {
      const double x = mid + half * Gauss5::nodes[q];
      const double coef = coeff(x);
      const double sigma = c - prim.at(a, f_node[k], x);
      e += Gauss5::weights[q] * sigma * sigma / coef;
      g += Gauss5::weights[q] * sigma * sigma / (coef * coef);
    }
    energy += half * e;
    grad_sq += half * g;
  }
  sol.x[2 * m] = domain.t;
  // u(t) equals bc.right up to rounding in the cumulative sum
  sol.u[2 * m] = bc.right;
  sol.flux[2 * m] = c - f_node[m];
  sol.energy = energy;
  sol.gradient_l2 = std::sqrt(grad_sq);
  return sol;
}

namespace {

double quadratic_through(const std::vector<double>& x, const std::vector<double>& y, std::size_t p, double at) {
  const double x0 = x[2 * p], x1 = x[2 * p + 1], x2 = x[2 * p + 2];
  const double l0 = (at - x1) * (at - x2) / ((x0 - x1) * (x0 - x2));
  const double l1 = (at - x0) * (at - x2) / ((x1 - x0) * (x1 - x2));
  const double l2 = (at - x0) * (at - x1) / ((x2 - x0) * (x2 - x1));
  return y[2 * p] * l0 + y[2 * p + 1] * l1 + y[2 * p + 2] * l2;
}

std::size_t panel_of(const Solution1D& s, double at) {
  // panel starts are the even grid entries
  std::size_t lo = 0;
  std::size_t hi = s.partition_cells;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (s.x[2 * mid] <= at)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

double simpson_l2(const std::vector<double>& x, const std::vector<double>& y, std::size_t panels,
                  const Reference& v) {
  double sum = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double e0 = y[2 * p] - v(x[2 * p]);
    const double e1 = y[2 * p + 1] - v(x[2 * p + 1]);
    const double e2 = y[2 * p + 2] - v(x[2 * p + 2]);
    sum += (x[2 * p + 2] - x[2 * p]) / 6.0 * (e0 * e0 + 4.0 * e1 * e1 + e2 * e2);
  }
  return std::sqrt(sum);
}

}  // namespace

double Solution1D::interpolate(double at) const { return quadratic_through(x, u, panel_of(*this, at), at); }

double Solution1D::interpolate_flux(double at) const { return quadratic_through(x, flux, panel_of(*this, at), at); }

double l2_error(const Solution1D& u, const Reference& v) { return simpson_l2(u.x, u.u, u.partition_cells, v); }

double flux_l2_error(const Solution1D& u, const Reference& sigma_ref) {
  return simpson_l2(u.x, u.flux, u.partition_cells, sigma_ref);
}

std::span<const double> flux_of(const Solution1D& u) noexcept { return u.flux; }

HomogenizedSolution1D homogenized_solution(double abar, const Source1D& f, Interval domain) {
  if (!(abar > 0.0)) throw ValidationError("homogenized_solution: abar must be positive");
  domain = Interval::checked(domain.s, domain.t);
  HomogenizedSolution1D out;
  out.abar = abar;
  if (const auto& poly = f.polynomial_coefficients()) {
    // F(x) = P(x) - P(s), G(x) = int_s^x F = Q(x) - Q(s) - P(s)(x - s)
    const auto p = primitive_coefficients(*poly);
    const auto q = primitive_coefficients(p);
    const double s = domain.s;
    const double ps = horner(p, s);
    const double qs = horner(q, s);
    auto big_f = [p, ps](double x) { return horner(p, x) - ps; };
    auto big_g = [q, qs, ps, s](double x) { return horner(q, x) - qs - ps * (x - s); };
    const double c = big_g(domain.t) / domain.length();
    out.u = [=](double x) { return (c * (x - s) - big_g(x)) / abar; };
    out.flux = [=](double x) { return c - big_f(x); };
    return out;
  }
  auto sol = std::make_shared<Solution1D>(solve_exact(fields::Coefficient1D::constant(abar), f, domain, 8192));
  out.u = [sol](double x) { return sol->interpolate(x); };
  out.flux = [sol](double x) { return sol->interpolate_flux(x); };
  return out;
}

double weighted_energy_density(const fields::Coefficient1D& coeff, const Source1D& f, const Solution1D& u,
                               const std::function<double(double)>& phi) {
  const Primitive prim(f, u.domain.s);
  const double c = u.flux_constant;
  double total = 0.0;
  for (std::size_t k = 0; k < u.partition_cells; ++k) {
    const double a = u.x[2 * k];
    const double b = u.x[2 * k + 2];
    const double f_start = c - u.flux[2 * k];
    total += quadrature::integrate<5>(
        [&](double x) {
          const double sigma = c - prim.at(a, f_start, x);
          return phi(x) * sigma * sigma / coeff(x);
        },
        a, b);
  }
  return total;
}

std::function<double(double)> smooth_bump(double center, double half_width) {
  if (!(half_width > 0.0)) throw ValidationError("smooth_bump: half width must be positive");
  return [center, half_width](double x) {
    const double r = (x - center) / half_width;
    if (std::abs(r) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - r * r));
  };
}

}  // namespace homoglab::solve1d
