#pragma once

// Measure-preserving dynamics on the unit 2-torus: the cat map, its orbits,
// Birkhoff time averages and simple equidistribution diagnostics.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace homoglab::ergodics {

/// Reduce a real number into the canonical representative set [0, 1).
double wrap_unit(double x) noexcept;

/// A point of the unit torus. Coordinates are kept reduced mod 1.
class TorusPoint {
 public:
  TorusPoint() = default;
  TorusPoint(double x1, double x2) noexcept : x1_(wrap_unit(x1)), x2_(wrap_unit(x2)) {}

  double x1() const noexcept { return x1_; }
  double x2() const noexcept { return x2_; }

  friend bool operator==(const TorusPoint&, const TorusPoint&) = default;

 private:
  double x1_ = 0.0;
  double x2_ = 0.0;
};

/// A torus point with rational coordinates (p1/q, p2/q), iterated in exact
/// integer arithmetic.
class RationalTorusPoint {
 public:
  /// Throws std::invalid_argument unless q > 0 and 0 <= p1, p2 < q.
  RationalTorusPoint(std::int64_t p1, std::int64_t p2, std::int64_t q);

  std::int64_t p1() const noexcept { return p1_; }
  std::int64_t p2() const noexcept { return p2_; }
  std::int64_t q() const noexcept { return q_; }
  TorusPoint to_real() const noexcept;

  friend bool operator==(const RationalTorusPoint&, const RationalTorusPoint&) = default;

 private:
  std::int64_t p1_;
  std::int64_t p2_;
  std::int64_t q_;
};

using Observable = std::function<double(const TorusPoint&)>;

/// Integer matrix [[2,1],[1,1]] of the cat map.
inline constexpr std::int64_t kCatMatrix[2][2] = {{2, 1}, {1, 1}};

constexpr std::int64_t cat_map_determinant() noexcept {
  return kCatMatrix[0][0] * kCatMatrix[1][1] - kCatMatrix[0][1] * kCatMatrix[1][0];
}

/// T(x) = ((2 x1 + x2) mod 1, (x1 + x2) mod 1).
TorusPoint cat_map_step(const TorusPoint& p) noexcept;
RationalTorusPoint cat_map_step(const RationalTorusPoint& p) noexcept;

/// Applies the map n times.
TorusPoint cat_map_iterate(TorusPoint p, std::int64_t n) noexcept;
RationalTorusPoint cat_map_iterate(RationalTorusPoint p, std::int64_t n) noexcept;

/// [T(p0), T^2(p0), ..., T^N(p0)]. Throws std::invalid_argument when N < 1.
std::vector<TorusPoint> orbit(const TorusPoint& p0, std::int64_t n_steps);

/// Smallest k in [1, max_iter] with T^k(p0) == p0, computed exactly.
std::optional<std::int64_t> detect_period(const RationalTorusPoint& p0, std::int64_t max_iter);

/// (1/N) * sum_{n=1..N} f(T^n(p0)).
double birkhoff_time_average(const TorusPoint& p0, const Observable& f, std::int64_t n_steps);

/// Histogram of an orbit over an m x m grid of the torus, bin index
/// (floor(m x1), floor(m x2)) stored row-major as [i1 * m + i2].
struct OrbitStats {
  std::int64_t length = 0;
  double time_average = 0.0;
  int grid_m = 0;
  std::vector<std::int64_t> bin_counts;

  std::int64_t count(int i1, int i2) const { return bin_counts[static_cast<std::size_t>(i1 * grid_m + i2)]; }
  std::int64_t empty_bins() const;
};

OrbitStats orbit_stats(std::span<const TorusPoint> points, int grid_m, const Observable& f);

/// max over the m x m cells of |empirical frequency - 1/m^2|.
/// Throws std::invalid_argument for grid_m < 2 or an empty orbit.
double equidistribution_discrepancy(std::span<const TorusPoint> points, int grid_m);

}  // namespace homoglab::ergodics
