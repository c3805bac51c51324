#include "homoglab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "homoglab/errors.hpp"

namespace homoglab::fields {

std::uint64_t tile_word(Seed seed, std::span<const std::int64_t> tile) noexcept {
  std::uint64_t h = splitmix64(seed.value ^ kTileStream);
  for (auto c : tile) h = splitmix64(h ^ static_cast<std::uint64_t>(c));
  return h;
}

double offset_component(Seed seed, std::size_t axis) noexcept {
  return to_unit_interval(splitmix64(splitmix64(seed.value ^ kOffsetStream) ^ static_cast<std::uint64_t>(axis)));
}

EllipticityBounds EllipticityBounds::checked(double nu1, double nu2) {
  if (!(nu1 > 0.0) || !(nu2 >= nu1) || !std::isfinite(nu2))
    throw ValidationError("ellipticity bounds must satisfy 0 < nu1 <= nu2 < inf");
  return {nu1, nu2};
}

TileLaw::TileLaw(std::vector<double> kappas, std::vector<double> probs)
    : kappas_(std::move(kappas)), probs_(std::move(probs)) {
  if (kappas_.empty()) throw ValidationError("tile law: at least one category is required");
  if (kappas_.size() != probs_.size()) throw ValidationError("tile law: kappas and probs differ in length");
  for (double k : kappas_)
    if (!(k > 0.0) || !std::isfinite(k)) throw ValidationError("tile law: kappas must be positive and finite");
  for (double p : probs_)
    if (!(p > 0.0 && p <= 1.0)) throw ValidationError("tile law: probabilities must lie in (0, 1]");
  cumulative_.resize(probs_.size());
  std::partial_sum(probs_.begin(), probs_.end(), cumulative_.begin());
  if (std::abs(cumulative_.back() - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "tile law: probabilities sum to " << cumulative_.back() << ", expected 1";
    throw ValidationError(msg.str());
  }
}

std::size_t TileLaw::category_for(double u) const noexcept {
  for (std::size_t i = 0; i + 1 < cumulative_.size(); ++i)
    if (u < cumulative_[i]) return i;
  return cumulative_.size() - 1;
}

double TileLaw::min_kappa() const noexcept { return *std::min_element(kappas_.begin(), kappas_.end()); }
double TileLaw::max_kappa() const noexcept { return *std::max_element(kappas_.begin(), kappas_.end()); }

double TileLaw::mean_inverse() const noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) s += probs_[i] / kappas_[i];
  return s;
}

double TileLaw::mean() const noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) s += probs_[i] * kappas_[i];
  return s;
}

template <int Dim>
EllipticityBounds CheckerboardSpec<Dim>::effective_bounds() const {
  if (bounds) return *bounds;
  return {law.min_kappa(), law.max_kappa()};
}

template <int Dim>
void CheckerboardSpec<Dim>::validate() const {
  if (!bounds) return;
  const auto b = EllipticityBounds::checked(bounds->nu1, bounds->nu2);
  for (double k : law.kappas())
    if (!b.contains(k)) {
      std::ostringstream msg;
      msg << "checkerboard: kappa " << k << " outside ellipticity bounds [" << b.nu1 << ", " << b.nu2 << "]";
      throw ValidationError(msg.str());
    }
}

std::size_t sample_tile_category(Seed seed, std::span<const std::int64_t> tile, const TileLaw& law) noexcept {
  return law.category_for(to_unit_interval(tile_word(seed, tile)));
}

template <int Dim>
CheckerboardRealization<Dim>::CheckerboardRealization(CheckerboardSpec<Dim> spec, Seed seed, Point offset)
    : spec_(std::move(spec)), seed_(seed), offset_(offset) {}

template <int Dim>
auto CheckerboardRealization<Dim>::tile_of(const Point& x) const noexcept -> Tile {
  Tile t{};
  for (int d = 0; d < Dim; ++d) t[d] = static_cast<std::int64_t>(std::floor(x[d] + offset_[d]));
  return t;
}

template <int Dim>
std::size_t CheckerboardRealization<Dim>::category(const Tile& t) const noexcept {
  return sample_tile_category(seed_, t, spec_.law);
}

template <int Dim>
double CheckerboardRealization<Dim>::tile_value(const Tile& t) const noexcept {
  return spec_.law.kappas()[category(t)];
}

template <int Dim>
CheckerboardRealization<Dim> make_realization(const CheckerboardSpec<Dim>& spec, Seed seed) {
  spec.validate();
  typename CheckerboardRealization<Dim>::Point offset{};
  if (spec.offset_enabled)
    for (int d = 0; d < Dim; ++d) offset[d] = offset_component(seed, static_cast<std::size_t>(d));
  return CheckerboardRealization<Dim>(spec, seed, offset);
}

double eval_periodic_1d(double x) noexcept { return 2.0 + std::sin(2.0 * std::numbers::pi * x); }

ScaleParameter::ScaleParameter(double eps) : eps_(eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ValidationError("scale parameter eps must be positive and finite");
}

double ensemble_mean_inverse(const TileLaw& law) noexcept { return law.mean_inverse(); }

namespace {

void check_window(double window_length, std::int64_t n_samples) {
  if (!(window_length > 0.0)) throw ValidationError("spatial_average: window length must be positive");
  if (n_samples < 1) throw ValidationError("spatial_average: n_samples must be >= 1");
}

}  // namespace

double spatial_average(const std::function<double(double)>& field, const PointTransform& observable,
                       double window_length, std::int64_t n_samples) {
  check_window(window_length, n_samples);
  const double h = window_length / static_cast<double>(n_samples);
  double sum = 0.0;
  for (std::int64_t i = 0; i < n_samples; ++i) sum += observable(field((static_cast<double>(i) + 0.5) * h));
  return sum / static_cast<double>(n_samples);
}

template <int Dim>
double spatial_average(const CheckerboardRealization<Dim>& field, const PointTransform& observable,
                       double window_length, std::int64_t n_samples) {
  check_window(window_length, n_samples);
  const double h = window_length / static_cast<double>(n_samples);
  double sum = 0.0;
  if constexpr (Dim == 1) {
    for (std::int64_t i = 0; i < n_samples; ++i) sum += observable(field((static_cast<double>(i) + 0.5) * h));
    return sum / static_cast<double>(n_samples);
  } else {
    for (std::int64_t j = 0; j < n_samples; ++j) {
      double row = 0.0;
      for (std::int64_t i = 0; i < n_samples; ++i)
        row += observable(field({(static_cast<double>(i) + 0.5) * h, (static_cast<double>(j) + 0.5) * h}));
      sum += row;
    }
    return sum / (static_cast<double>(n_samples) * static_cast<double>(n_samples));
  }
}

Coefficient1D::Coefficient1D(Eval eval, Breakpoints breakpoints, double feature_length, std::string description)
    : eval_(std::move(eval)),
      breakpoints_(std::move(breakpoints)),
      feature_length_(feature_length),
      description_(std::move(description)) {}

std::vector<double> Coefficient1D::breakpoints(double s, double t) const {
  if (!breakpoints_) return {};
  auto b = breakpoints_(s, t);
  std::erase_if(b, [&](double x) { return !(x > s && x < t); });
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

Coefficient1D Coefficient1D::constant(double value) {
  if (!(value > 0.0)) throw ValidationError("constant coefficient must be positive");
  std::ostringstream d;
  d.precision(17);
  d << "constant(" << value << ")";
  return {[value](double) { return value; }, nullptr, std::numeric_limits<double>::infinity(), d.str()};
}

Coefficient1D Coefficient1D::periodic_sine(ScaleParameter eps) {
  const double e = eps.value();
  std::ostringstream d;
  d.precision(17);
  d << "periodic_sine(eps=" << e << ")";
  return {[e](double x) { return eval_periodic_1d(x / e); }, nullptr, e, d.str()};
}

Coefficient1D Coefficient1D::checkerboard(const Checkerboard1D& realization, ScaleParameter eps) {
  const double e = eps.value();
  const double off = realization.offset()[0];
  std::ostringstream d;
  d.precision(17);
  d << "checkerboard(seed=" << realization.seed().value << ", eps=" << e << ")";
  // tile boundaries sit where x / eps + offset is an integer
  auto breaks = [e, off](double s, double t) {
    std::vector<double> out;
    const auto k0 = static_cast<std::int64_t>(std::ceil(s / e + off));
    const auto k1 = static_cast<std::int64_t>(std::floor(t / e + off));
    out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(0, k1 - k0 + 1)));
    for (auto k = k0; k <= k1; ++k) out.push_back((static_cast<double>(k) - off) * e);
    return out;
  };
  return {[realization, e](double x) { return realization(x / e); }, breaks,
          std::numeric_limits<double>::infinity(), d.str()};
}

Coefficient1D Coefficient1D::piecewise_constant(std::vector<double> breaks, std::vector<double> values) {
  if (breaks.size() != values.size() + 1 || values.empty())
    throw ValidationError("piecewise_constant: need breaks.size() == values.size() + 1");
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    if (!(breaks[i] < breaks[i + 1])) throw ValidationError("piecewise_constant: breaks must increase strictly");
  for (double v : values)
    if (!(v > 0.0)) throw ValidationError("piecewise_constant: values must be positive");
  auto eval = [breaks, values](double x) {
    const auto it = std::upper_bound(breaks.begin() + 1, breaks.end() - 1, x);
    return values[static_cast<std::size_t>(it - (breaks.begin() + 1))];
  };
  auto bps = [breaks](double, double) { return std::vector<double>(breaks.begin() + 1, breaks.end() - 1); };
  return {eval, bps, std::numeric_limits<double>::infinity(),
          "piecewise_constant(" + std::to_string(values.size()) + " pieces)"};
}

template struct CheckerboardSpec<1>;
template struct CheckerboardSpec<2>;
template class CheckerboardRealization<1>;
template class CheckerboardRealization<2>;
template CheckerboardRealization<1> make_realization(const CheckerboardSpec<1>&, Seed);
template CheckerboardRealization<2> make_realization(const CheckerboardSpec<2>&, Seed);
template double spatial_average(const CheckerboardRealization<1>&, const PointTransform&, double, std::int64_t);
template double spatial_average(const CheckerboardRealization<2>&, const PointTransform&, double, std::int64_t);

}  // namespace homoglab::fields
