#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace homoglab::quadrature {

/// Gauss-Legendre rule on [-1, 1].
template <std::size_t N>
struct GaussLegendre;

template <>
struct GaussLegendre<2> {
  static constexpr std::array<double, 2> nodes{-0.57735026918962576451, 0.57735026918962576451};
  static constexpr std::array<double, 2> weights{1.0, 1.0};
};

template <>
struct GaussLegendre<5> {
  static constexpr std::array<double, 5> nodes{-0.90617984593866399280, -0.53846931010339377774, 0.0,
                                               0.53846931010339377774, 0.90617984593866399280};
  static constexpr std::array<double, 5> weights{0.23692688505618908751, 0.47862867049936646804,
                                                 0.56888888888888888889, 0.47862867049936646804,
                                                 0.23692688505618908751};
};

/// Integral of f over [a, b] with the N-point rule.
template <std::size_t N, class F>
double integrate(F&& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double s = 0.0;
  for (std::size_t q = 0; q < N; ++q) s += GaussLegendre<N>::weights[q] * f(mid + half * GaussLegendre<N>::nodes[q]);
  return half * s;
}

/// Adaptive bisection with the 5-point rule: splits until the two halves
/// agree with the whole to within tol.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double tol, int depth = 40) {
  const double whole = integrate<5>(f, a, b);
  const double m = 0.5 * (a + b);
  const double left = integrate<5>(f, a, m);
  const double right = integrate<5>(f, m, b);
  if (depth <= 0 || std::abs(left + right - whole) <= tol) return left + right;
  return integrate_adaptive(f, a, m, 0.5 * tol, depth - 1) + integrate_adaptive(f, m, b, 0.5 * tol, depth - 1);
}

}  // namespace homoglab::quadrature
