#pragma once

// Seeded coefficient fields: the periodic 1D profile, random checkerboards
// with i.i.d. tiles and a random global offset, eps-scaling, and
// realization averages.
//
// Randomness is counter based. A tile's category is a pure function of
// (seed, tile index), so evaluation order and threading never change a
// realization. The exact hash chain is
//
//   splitmix64(z): z += 0x9E3779B97F4A7C15
//                  z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//                  z  = (z ^ (z >> 27)) * 0x94D049BB133111EB
//                  return z ^ (z >> 31)
//
//   tile word:    h = splitmix64(seed ^ kTileStream); h = splitmix64(h ^ i_d) for each coordinate
//   offset word:  h = splitmix64(splitmix64(seed ^ kOffsetStream) ^ d) for axis d
//   unit real:    (word >> 11) * 2^-53
//
// and the category is the first index with u < cumulative probability.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace homoglab::fields {

struct Seed {
  std::uint64_t value = 0;
  friend bool operator==(const Seed&, const Seed&) = default;
};

inline constexpr std::uint64_t kTileStream = 0x74696C6500000000ULL;    // "tile"
inline constexpr std::uint64_t kOffsetStream = 0x6F66667365740000ULL;  // "offset"

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Top 53 bits of a word as a double in [0, 1).
constexpr double to_unit_interval(std::uint64_t word) noexcept {
  return static_cast<double>(word >> 11) * 0x1.0p-53;
}

std::uint64_t tile_word(Seed seed, std::span<const std::int64_t> tile) noexcept;
double offset_component(Seed seed, std::size_t axis) noexcept;

struct EllipticityBounds {
  double nu1 = 0.0;
  double nu2 = 0.0;

  /// Throws ValidationError unless 0 < nu1 <= nu2.
  static EllipticityBounds checked(double nu1, double nu2);
  bool contains(double a) const noexcept { return a >= nu1 && a <= nu2; }
};

/// Distribution of a single tile: value kappas[i] with probability probs[i].
class TileLaw {
 public:
  /// Throws ValidationError on empty or mismatched lists, non-positive
  /// kappas, probabilities outside (0, 1] or not summing to 1 within 1e-12.
  TileLaw(std::vector<double> kappas, std::vector<double> probs);

  const std::vector<double>& kappas() const noexcept { return kappas_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return kappas_.size(); }

  /// First category with u < cumulative probability; the last category
  /// absorbs the rounding slack of the cumulative sum.
  std::size_t category_for(double u) const noexcept;

  double min_kappa() const noexcept;
  double max_kappa() const noexcept;
  /// <1/a> = sum p_i / kappa_i
  double mean_inverse() const noexcept;
  /// <a> = sum p_i kappa_i
  double mean() const noexcept;

 private:
  std::vector<double> kappas_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
};

template <int Dim>
struct CheckerboardSpec {
  static_assert(Dim == 1 || Dim == 2, "checkerboards are implemented for n = 1, 2");
  TileLaw law;
  bool offset_enabled = true;
  std::optional<EllipticityBounds> bounds;

  /// Declared bounds, or [min kappa, max kappa] when none were declared.
  EllipticityBounds effective_bounds() const;
  /// Throws ValidationError if some kappa lies outside the declared bounds.
  void validate() const;
};

using Checkerboard1DSpec = CheckerboardSpec<1>;
using Checkerboard2DSpec = CheckerboardSpec<2>;

std::size_t sample_tile_category(Seed seed, std::span<const std::int64_t> tile, const TileLaw& law) noexcept;

/// One realization a(x, omega) of a checkerboard. Immutable; evaluation is pure.
/// The tile containing x is floor(x + offset) componentwise.
template <int Dim>
class CheckerboardRealization {
 public:
  using Point = std::array<double, Dim>;
  using Tile = std::array<std::int64_t, Dim>;

  CheckerboardRealization(CheckerboardSpec<Dim> spec, Seed seed, Point offset);

  Tile tile_of(const Point& x) const noexcept;
  std::size_t category(const Tile& t) const noexcept;
  double tile_value(const Tile& t) const noexcept;
  double operator()(const Point& x) const noexcept { return tile_value(tile_of(x)); }
  double operator()(double x) const noexcept
    requires(Dim == 1)
  {
    return (*this)(Point{x});
  }

  const CheckerboardSpec<Dim>& spec() const noexcept { return spec_; }
  Seed seed() const noexcept { return seed_; }
  const Point& offset() const noexcept { return offset_; }

 private:
  CheckerboardSpec<Dim> spec_;
  Seed seed_;
  Point offset_;
};

using Checkerboard1D = CheckerboardRealization<1>;
using Checkerboard2D = CheckerboardRealization<2>;

/// Draws the global offset from the seed stream (zero when disabled).
/// Throws ValidationError for specs violating their ellipticity bounds.
template <int Dim>
CheckerboardRealization<Dim> make_realization(const CheckerboardSpec<Dim>& spec, Seed seed);

/// a(x) = 2 + sin(2 pi x)
double eval_periodic_1d(double x) noexcept;

class ScaleParameter {
 public:
  /// Throws ValidationError unless eps > 0 and finite.
  explicit ScaleParameter(double eps);
  double value() const noexcept { return eps_; }

 private:
  double eps_;
};

/// a^eps(x) = a(x / eps).
template <class Field>
double eval_scaled(const Field& field, ScaleParameter eps, double x) {
  return field(x / eps.value());
}

template <class Field, std::size_t N>
double eval_scaled(const Field& field, ScaleParameter eps, const std::array<double, N>& x) {
  std::array<double, N> y{};
  for (std::size_t d = 0; d < N; ++d) y[d] = x[d] / eps.value();
  return field(y);
}

double ensemble_mean_inverse(const TileLaw& law) noexcept;
template <int Dim>
double ensemble_mean_inverse(const CheckerboardSpec<Dim>& spec) noexcept {
  return ensemble_mean_inverse(spec.law);
}

using PointTransform = std::function<double(double)>;

/// Midpoint-rule average of observable(a(x)) over [0, R] with n_samples points.
double spatial_average(const std::function<double(double)>& field, const PointTransform& observable,
                       double window_length, std::int64_t n_samples);

/// Same over [0, R]^Dim with n_samples points per axis.
template <int Dim>
double spatial_average(const CheckerboardRealization<Dim>& field, const PointTransform& observable,
                       double window_length, std::int64_t n_samples);

/// An eps-scaled 1D coefficient with the locations of its jumps, which the
/// 1D solver uses to align its quadrature partition.
class Coefficient1D {
 public:
  using Eval = std::function<double(double)>;
  using Breakpoints = std::function<std::vector<double>(double, double)>;

  Coefficient1D(Eval eval, Breakpoints breakpoints, double feature_length, std::string description);

  static Coefficient1D constant(double value);
  /// (2 + sin(2 pi x / eps)), with feature length eps.
  static Coefficient1D periodic_sine(ScaleParameter eps);
  static Coefficient1D checkerboard(const Checkerboard1D& realization, ScaleParameter eps);
  /// values[k] on (breaks[k], breaks[k+1]); breaks strictly increasing.
  static Coefficient1D piecewise_constant(std::vector<double> breaks, std::vector<double> values);

  double operator()(double x) const { return eval_(x); }
  /// Jump locations strictly inside (s, t), sorted.
  std::vector<double> breakpoints(double s, double t) const;
  /// Length scale on which the coefficient varies smoothly; +inf when piecewise constant.
  double feature_length() const noexcept { return feature_length_; }
  const std::string& description() const noexcept { return description_; }

 private:
  Eval eval_;
  Breakpoints breakpoints_;
  double feature_length_;
  std::string description_;
};

}  // namespace homoglab::fields
