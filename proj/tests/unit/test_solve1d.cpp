#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "homoglab/errors.hpp"
#include "homoglab/solve1d.hpp"

using namespace homoglab;
using namespace homoglab::solve1d;
using fields::Coefficient1D;
using fields::ScaleParameter;

namespace {

const double kSqrt3 = std::sqrt(3.0);
const Source1D kCubicSource = Source1D::polynomial({3.0, -6.0});

double ubar(double x) { return x * (x - 0.5) * (x - 1.0) / kSqrt3; }

// Composite Simpson with many panels, independent of the library's quadrature.
template <class F>
double simpson(F&& f, double a, double b, int panels = 20000) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// P1 finite elements on a uniform mesh with a tridiagonal (Thomas) solve.
// Coefficient jumps sit on mesh nodes and f is linear, so loads are exact and
// nodal values coincide with the exact solution.
std::vector<double> p1_oracle(const std::vector<double>& element_a, const std::vector<double>& poly) {
  const int n = static_cast<int>(element_a.size());
  const double h = 1.0 / n;
  auto f = [&](double x) { return poly[0] + (poly.size() > 1 ? poly[1] * x : 0.0); };
  std::vector<double> diag(n - 1), off(n - 2), rhs(n - 1);
  for (int i = 1; i < n; ++i) {
    diag[i - 1] = (element_a[i - 1] + element_a[i]) / h;
    if (i < n - 1) off[i - 1] = -element_a[i] / h;
    const double x = i * h;
    // Simpson is exact for f * hat on each element
    const double left = h / 6.0 * (0.0 + 4.0 * f(x - h / 2) * 0.5 + f(x) * 1.0);
    const double right = h / 6.0 * (f(x) * 1.0 + 4.0 * f(x + h / 2) * 0.5 + 0.0);
    rhs[i - 1] = left + right;
  }
  for (int i = 1; i < n - 1; ++i) {
    const double m = off[i - 1] / diag[i - 1];
    diag[i] -= m * off[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  std::vector<double> u(n + 1, 0.0);
  for (int i = n - 1; i >= 1; --i) {
    const double next = (i < n - 1) ? off[i - 1] * u[i + 1] : 0.0;
    u[i] = (rhs[i - 1] - next) / diag[i - 1];
  }
  return u;
}

}  // namespace

TEST_CASE("interval and argument validation") {
  CHECK_THROWS_AS(Interval::checked(1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(solve_exact(Coefficient1D::constant(1.0), Source1D::constant(1.0), {}, 1), ValidationError);
  const Coefficient1D negative([](double x) { return x - 0.5; }, [](double, double) { return std::vector<double>{}; },
                               1.0, "negative");
  CHECK_THROWS_AS(solve_exact(negative, Source1D::constant(1.0), {}, 16), NumericalError);
}

TEST_CASE("constant coefficient Poisson") {
  const auto sol = solve_exact(Coefficient1D::constant(1.0), Source1D::constant(2.0), {0.0, 1.0}, 64);
  double err = 0.0;
  for (std::size_t i = 0; i < sol.x.size(); ++i) err = std::max(err, std::abs(sol.u[i] - sol.x[i] * (1.0 - sol.x[i])));
  CHECK(err < 1e-10);
}

TEST_CASE("homogenized problem reproduces the closed-form solution") {
  const auto sol = solve_exact(Coefficient1D::constant(kSqrt3), kCubicSource, {0.0, 1.0}, 64);
  CHECK(l2_error(sol, ubar) < 1e-12);
  CHECK(ubar(0.25) == doctest::Approx(0.02706329).epsilon(1e-7));
  CHECK(sol.interpolate(0.25) == doctest::Approx(0.02706329).epsilon(1e-7));
}

TEST_CASE("series layers with lifted boundary data give the harmonic flux") {
  const auto a = Coefficient1D::piecewise_constant({0.0, 0.5, 1.0}, {1.0, 3.0});
  const auto sol = solve_exact(a, Source1D::constant(0.0), {0.0, 1.0}, 16, {0.0, 1.0});
  for (double s : sol.flux) CHECK(s == doctest::Approx(1.5).epsilon(1e-13));
  CHECK(sol.u.front() == 0.0);
  CHECK(sol.u.back() == 1.0);
  CHECK(sol.interpolate(0.5) == doctest::Approx(0.75));
}

TEST_CASE("l2_error") {
  const auto sol = solve_exact(Coefficient1D::constant(1.0), Source1D::constant(2.0), {0.0, 1.0}, 64);
  CHECK(l2_error(sol, [&](double x) { return sol.interpolate(x); }) < 1e-14);
  CHECK(l2_error(sol, [](double) { return 0.0; }) == doctest::Approx(std::sqrt(1.0 / 30.0)).epsilon(1e-8));

  const auto coarse = solve_exact(Coefficient1D::periodic_sine(ScaleParameter(0.25)), kCubicSource, {}, 4096);
  const auto fine = solve_exact(Coefficient1D::periodic_sine(ScaleParameter(1.0 / 16.0)), kCubicSource, {}, 4096);
  CHECK(l2_error(fine, ubar) < l2_error(coarse, ubar));
}

TEST_CASE("flux samples") {
  const auto sol = solve_exact(Coefficient1D::constant(1.0), Source1D::constant(0.0), {0.0, 1.0}, 8, {0.0, 2.0});
  for (double s : flux_of(sol)) CHECK(s == doctest::Approx(2.0));

  const auto per = solve_exact(Coefficient1D::periodic_sine(ScaleParameter(0.125)), kCubicSource, {}, 1024);
  const double c = per.flux_constant;
  for (std::size_t i = 0; i < per.x.size(); ++i) {
    const double x = per.x[i];
    CHECK(per.flux[i] == doctest::Approx(c + 3.0 * x * x - 3.0 * x).epsilon(1e-12));
  }

  const auto hom = homogenized_solution(kSqrt3, kCubicSource, {});
  const auto e2 = solve_exact(Coefficient1D::periodic_sine(ScaleParameter(0.25)), kCubicSource, {}, 4096);
  const auto e8 = solve_exact(Coefficient1D::periodic_sine(ScaleParameter(1.0 / 256.0)), kCubicSource, {}, 4096);
  CHECK(flux_l2_error(e8, hom.flux) < flux_l2_error(e2, hom.flux));
}

TEST_CASE("solution invariants on oscillating coefficients") {
  std::vector<Coefficient1D> coeffs{Coefficient1D::periodic_sine(ScaleParameter(1.0 / 16.0)),
                                    Coefficient1D::piecewise_constant({0.0, 0.3, 0.7, 1.0}, {1.0, 5.0, 2.0})};
  const auto r = fields::make_realization(fields::Checkerboard1DSpec{fields::TileLaw({1.0, 3.0}, {0.5, 0.5}), true, {}},
                                          fields::Seed{4});
  coeffs.push_back(Coefficient1D::checkerboard(r, ScaleParameter(1.0 / 64.0)));

  for (const auto& a : coeffs) {
    CAPTURE(a.description());
    const auto sol = solve_exact(a, kCubicSource, {0.0, 1.0}, 512);
    CHECK(std::abs(sol.u.front()) <= 1e-12);
    CHECK(std::abs(sol.u.back()) <= 1e-12);

    // conservation: sigma = C - F with F the exact primitive of f
    double cons = 0.0;
    for (std::size_t i = 0; i < sol.x.size(); ++i) {
      const double x = sol.x[i];
      cons = std::max(cons, std::abs(sol.flux[i] - (sol.flux_constant - (3.0 * x - 3.0 * x * x))));
    }
    CHECK(cons < 1e-12);

    // energy identity: int a (u')^2 = int f u
    const double work = simpson([&](double x) { return kCubicSource(x) * sol.interpolate(x); }, 0.0, 1.0, 40000);
    CHECK(sol.energy == doctest::Approx(work).epsilon(1e-8));

    // a-priori bound with the Poincare constant (t - s) / pi
    const double nu1 = 1.0;  // smallest value of every coefficient above
    const double f_l2 = std::sqrt(simpson([](double x) { return std::pow(3.0 * (2.0 * x - 1.0), 2); }, 0.0, 1.0));
    CHECK(sol.gradient_l2 <= (1.0 / std::numbers::pi / nu1) * f_l2);
  }
}

TEST_CASE("agreement with a P1 finite element oracle on random layered media") {
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<int> pieces(1, 8);
  std::uniform_real_distribution<double> kappa(0.5, 10.0);
  constexpr int kElements = 4096;
  for (int trial = 0; trial < 20; ++trial) {
    const int m = pieces(rng);
    std::vector<int> cuts;
    std::uniform_int_distribution<int> node(1, kElements - 1);
    while (static_cast<int>(cuts.size()) < m - 1) {
      const int c = node(rng);
      if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> breaks{0.0}, values;
    for (int c : cuts) breaks.push_back(static_cast<double>(c) / kElements);
    breaks.push_back(1.0);
    for (int k = 0; k < m; ++k) values.push_back(kappa(rng));

    std::vector<double> element_a(kElements);
    for (int e = 0; e < kElements; ++e) {
      const double mid = (e + 0.5) / kElements;
      const auto k = static_cast<std::size_t>(std::upper_bound(breaks.begin(), breaks.end(), mid) - breaks.begin() - 1);
      element_a[static_cast<std::size_t>(e)] = values[k];
    }
    const std::vector<double> poly{3.0, -6.0};
    const auto nodal = p1_oracle(element_a, poly);
    auto p1 = [&](double x) {
      const double s = std::clamp(x * kElements, 0.0, static_cast<double>(kElements) - 1e-9);
      const auto i = static_cast<std::size_t>(s);
      const double t = s - static_cast<double>(i);
      return (1.0 - t) * nodal[i] + t * nodal[i + 1];
    };
    const auto sol =
        solve_exact(Coefficient1D::piecewise_constant(breaks, values), Source1D::polynomial(poly), {0.0, 1.0}, 256);
    const double norm = l2_error(sol, [](double) { return 0.0; });
    CHECK(l2_error(sol, p1) / norm < 1e-6);
  }
}

TEST_CASE("homogenized_solution") {
  const auto hom = homogenized_solution(kSqrt3, kCubicSource, {0.0, 1.0});
  for (double x : {0.1, 0.25, 0.6, 0.9}) {
    CHECK(hom.u(x) == doctest::Approx(ubar(x)).epsilon(1e-12));
    // abar * ubar'(x) = 3x^2 - 3x + 1/2
    CHECK(hom.flux(x) == doctest::Approx(3.0 * x * x - 3.0 * x + 0.5).epsilon(1e-12));
  }
  // a non-polynomial source follows the numerical path
  const auto generic = homogenized_solution(
      kSqrt3, Source1D::from_function([](double x) { return -3.0 * (2.0 * x - 1.0); }, "cubic source"), {0.0, 1.0});
  for (double x : {0.1, 0.25, 0.6, 0.9}) {
    CHECK(generic.u(x) == doctest::Approx(ubar(x)).epsilon(1e-9));
    CHECK(generic.flux(x) == doctest::Approx(3.0 * x * x - 3.0 * x + 0.5).epsilon(1e-9));
  }
}

TEST_CASE("source primitives") {
  const auto p = Source1D::polynomial({1.0, 2.0, 3.0});
  CHECK(p(2.0) == 17.0);
  REQUIRE(p.primitive(2.0).has_value());
  CHECK(*p.primitive(2.0) - *p.primitive(0.0) == doctest::Approx(2.0 + 4.0 + 8.0));
  CHECK_FALSE(Source1D::from_function([](double) { return 1.0; }, "one").primitive(1.0).has_value());
}

TEST_CASE("smooth bump and weighted energy density") {
  const auto phi = smooth_bump(0.5, 0.3);
  CHECK(phi(0.5) == doctest::Approx(1.0));
  CHECK(phi(0.19) == 0.0);
  CHECK(phi(0.81) == 0.0);
  CHECK(phi(0.3) > 0.0);

  const auto a = Coefficient1D::constant(kSqrt3);
  const auto sol = solve_exact(a, kCubicSource, {0.0, 1.0}, 256);
  const double expected = simpson(
      [&](double x) {
        const double du = (3.0 * x * x - 3.0 * x + 0.5) / kSqrt3;
        return phi(x) * kSqrt3 * du * du;
      },
      0.0, 1.0, 200000);
  CHECK(weighted_energy_density(a, kCubicSource, sol, phi) == doctest::Approx(expected).epsilon(1e-10));
}
