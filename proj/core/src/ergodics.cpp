#include "homoglab/ergodics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace homoglab::ergodics {

double wrap_unit(double x) noexcept {
  double r = x - std::floor(x);
  // floor of a tiny negative number leaves r == 1.0 after rounding
  if (r >= 1.0) r = 0.0;
  return r;
}

RationalTorusPoint::RationalTorusPoint(std::int64_t p1, std::int64_t p2, std::int64_t q)
    : p1_(p1), p2_(p2), q_(q) {
  if (q <= 0) throw std::invalid_argument("rational torus point: denominator must be positive");
  if (p1 < 0 || p1 >= q || p2 < 0 || p2 >= q)
    throw std::invalid_argument("rational torus point: numerators must lie in [0, q), got (" +
                                std::to_string(p1) + ", " + std::to_string(p2) + ") / " + std::to_string(q));
}

TorusPoint RationalTorusPoint::to_real() const noexcept {
  return {static_cast<double>(p1_) / static_cast<double>(q_), static_cast<double>(p2_) / static_cast<double>(q_)};
}

TorusPoint cat_map_step(const TorusPoint& p) noexcept {
  return {kCatMatrix[0][0] * p.x1() + kCatMatrix[0][1] * p.x2(), kCatMatrix[1][0] * p.x1() + kCatMatrix[1][1] * p.x2()};
}

RationalTorusPoint cat_map_step(const RationalTorusPoint& p) noexcept {
  const auto q = p.q();
  // numerators are < q, so the products fit comfortably for any q < 2^61
  const auto n1 = (kCatMatrix[0][0] * p.p1() + kCatMatrix[0][1] * p.p2()) % q;
  const auto n2 = (kCatMatrix[1][0] * p.p1() + kCatMatrix[1][1] * p.p2()) % q;
  return {n1, n2, q};
}

TorusPoint cat_map_iterate(TorusPoint p, std::int64_t n) noexcept {
  for (std::int64_t k = 0; k < n; ++k) p = cat_map_step(p);
  return p;
}

RationalTorusPoint cat_map_iterate(RationalTorusPoint p, std::int64_t n) noexcept {
  for (std::int64_t k = 0; k < n; ++k) p = cat_map_step(p);
  return p;
}

std::vector<TorusPoint> orbit(const TorusPoint& p0, std::int64_t n_steps) {
  if (n_steps < 1) throw std::invalid_argument("orbit: N must be >= 1");
  std::vector<TorusPoint> out;
  out.reserve(static_cast<std::size_t>(n_steps));
  TorusPoint p = p0;
  for (std::int64_t n = 0; n < n_steps; ++n) {
    p = cat_map_step(p);
    out.push_back(p);
  }
  return out;
}

std::optional<std::int64_t> detect_period(const RationalTorusPoint& p0, std::int64_t max_iter) {
  RationalTorusPoint p = p0;
  for (std::int64_t k = 1; k <= max_iter; ++k) {
    p = cat_map_step(p);
    if (p == p0) return k;
  }
  return std::nullopt;
}

double birkhoff_time_average(const TorusPoint& p0, const Observable& f, std::int64_t n_steps) {
  if (n_steps < 1) throw std::invalid_argument("birkhoff_time_average: N must be >= 1");
  TorusPoint p = p0;
  double sum = 0.0;
  for (std::int64_t n = 0; n < n_steps; ++n) {
    p = cat_map_step(p);
    sum += f(p);
  }
  return sum / static_cast<double>(n_steps);
}

namespace {

int bin_of(double x, int m) noexcept {
  return std::min(static_cast<int>(x * m), m - 1);
}

std::vector<std::int64_t> histogram(std::span<const TorusPoint> points, int m) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0);
  for (const auto& p : points) ++counts[static_cast<std::size_t>(bin_of(p.x1(), m) * m + bin_of(p.x2(), m))];
  return counts;
}

void check_grid(std::span<const TorusPoint> points, int grid_m) {
  if (grid_m < 2) throw std::invalid_argument("grid_m must be >= 2");
  if (points.empty()) throw std::invalid_argument("orbit must be nonempty");
}

}  // namespace

std::int64_t OrbitStats::empty_bins() const {
  return std::count(bin_counts.begin(), bin_counts.end(), std::int64_t{0});
}

OrbitStats orbit_stats(std::span<const TorusPoint> points, int grid_m, const Observable& f) {
  check_grid(points, grid_m);
  OrbitStats s;
  s.length = static_cast<std::int64_t>(points.size());
  s.grid_m = grid_m;
  s.bin_counts = histogram(points, grid_m);
  double sum = 0.0;
  for (const auto& p : points) sum += f(p);
  s.time_average = sum / static_cast<double>(points.size());
  return s;
}

double equidistribution_discrepancy(std::span<const TorusPoint> points, int grid_m) {
  check_grid(points, grid_m);
  const auto counts = histogram(points, grid_m);
  const double n = static_cast<double>(points.size());
  const double target = 1.0 / (static_cast<double>(grid_m) * grid_m);
  double worst = 0.0;
  for (auto c : counts) worst = std::max(worst, std::abs(static_cast<double>(c) / n - target));
  return worst;
}

}  // namespace homoglab::ergodics
