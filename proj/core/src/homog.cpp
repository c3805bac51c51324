#include "homoglab/homog.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "homoglab/errors.hpp"
#include "homoglab/parallel.hpp"
#include "homoglab/quadrature.hpp"

namespace homoglab::homog {

using fem2d::SymTensor2;

Vec2 EffectiveTensor::eigenvalues() const noexcept {
  if (dim == 1) return {value[0][0], value[0][0]};
  const double mean = 0.5 * (value[0][0] + value[1][1]);
  const double r = std::hypot(0.5 * (value[0][0] - value[1][1]), value[0][1]);
  return {mean - r, mean + r};
}

EffectiveTensor EffectiveTensor::scalar(double a, Provenance p) {
  EffectiveTensor t;
  t.dim = 1;
  t.value[0][0] = t.raw[0][0] = a;
  t.provenance = p;
  return t;
}

double harmonic_mean_1d(const fields::TileLaw& law) noexcept { return 1.0 / law.mean_inverse(); }

double harmonic_mean_1d(const std::function<double(double)>& a, double period, double tol) {
  if (!(period > 0.0)) throw ValidationError("harmonic_mean_1d: period must be positive");
  const double integral = quadrature::integrate_adaptive([&](double x) { return 1.0 / a(x); }, 0.0, period, tol);
  return period / integral;
}

VoigtReussBounds voigt_reuss_bounds(const fields::TileLaw& law) noexcept {
  return {1.0 / law.mean_inverse(), law.mean()};
}

VoigtReussBounds voigt_reuss_bounds(std::span<const double> values) {
  if (values.empty()) throw ValidationError("voigt_reuss_bounds: empty sample");
  double inv = 0.0;
  double sum = 0.0;
  for (double v : values) {
    inv += 1.0 / v;
    sum += v;
  }
  const auto n = static_cast<double>(values.size());
  return {n / inv, sum / n};
}

std::vector<double> cell_tile_values(const fields::Checkerboard2D& realization, int tiles) {
  std::vector<double> out(static_cast<std::size_t>(tiles) * static_cast<std::size_t>(tiles));
  for (int j = 0; j < tiles; ++j)
    for (int i = 0; i < tiles; ++i) out[static_cast<std::size_t>(i + j * tiles)] = realization.tile_value({i, j});
  return out;
}

namespace {

std::vector<SymTensor2> cell_coefficients(const std::vector<double>& tile_values, int tiles, int ept) {
  const int n = tiles * ept;
  std::vector<SymTensor2> out(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      out[static_cast<std::size_t>(i + j * n)] =
          SymTensor2::isotropic(tile_values[static_cast<std::size_t>(i / ept + (j / ept) * tiles)]);
  return out;
}

void check_tiles(int tiles) {
  if (tiles < 2) throw ValidationError("periodization needs L >= 2 tiles");
}

}  // namespace

fem2d::PeriodicCellProblem cell_problem(const fields::Checkerboard2D& realization, int tiles, int elements_per_tile,
                                        Vec2 xi) {
  check_tiles(tiles);
  fem2d::PeriodicCellProblem p;
  p.tiles = tiles;
  p.elements_per_tile = elements_per_tile;
  p.coefficient = cell_coefficients(cell_tile_values(realization, tiles), tiles, elements_per_tile);
  p.xi = xi;
  return p;
}

Vec2 Corrector::mean_gradient() const noexcept {
  Vec2 m{0.0, 0.0};
  for (const auto& g : element_gradient) {
    m[0] += g[0];
    m[1] += g[1];
  }
  const auto n = static_cast<double>(std::max<std::size_t>(element_gradient.size(), 1));
  return {m[0] / n, m[1] / n};
}

Corrector corrector_solve(const fem2d::PeriodicCellProblem& problem, double tol) {
  if (problem.xi[0] == 0.0 && problem.xi[1] == 0.0) throw ValidationError("corrector_solve: xi must be nonzero");
  const auto cell = fem2d::solve_periodic_cell(problem, {tol, 0});
  Corrector c;
  c.tiles = problem.tiles;
  c.elements_per_tile = problem.elements_per_tile;
  c.xi = problem.xi;
  c.chi = cell.chi;
  c.iterations = cell.iterations;
  c.residual = cell.residual;
  const int n = problem.n();
  c.element_gradient.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      // mean of the bilinear gradient = average over the 2x2 Gauss points
      const auto g = fem2d::periodic_element_gradients(problem, c.chi, i, j);
      Vec2 m{0.0, 0.0};
      for (const auto& q : g) {
        m[0] += 0.25 * q[0];
        m[1] += 0.25 * q[1];
      }
      c.element_gradient[static_cast<std::size_t>(i + j * n)] = m;
    }
  return c;
}

Corrector corrector_solve(const fields::Checkerboard2D& realization, int tiles, Vec2 xi, int elements_per_tile,
                          double tol) {
  return corrector_solve(cell_problem(realization, tiles, elements_per_tile, xi), tol);
}

Vec2 cell_average_flux(const fem2d::PeriodicCellProblem& problem, const Corrector& corrector) {
  Vec2 sum{0.0, 0.0};
  for (std::size_t e = 0; e < problem.coefficient.size(); ++e) {
    const auto& g = corrector.element_gradient[e];
    const auto f = problem.coefficient[e].apply({g[0] + problem.xi[0], g[1] + problem.xi[1]});
    sum[0] += f[0];
    sum[1] += f[1];
  }
  const auto n = static_cast<double>(problem.coefficient.size());
  return {sum[0] / n, sum[1] / n};
}

EffectiveTensor effective_tensor_from_cell(const std::vector<SymTensor2>& coefficient, int tiles,
                                           int elements_per_tile, double tol) {
  check_tiles(tiles);
  EffectiveTensor t;
  t.dim = 2;
  t.tiles = tiles;
  t.elements_per_tile = elements_per_tile;
  t.provenance = Provenance::periodization;
  for (int col = 0; col < 2; ++col) {
    fem2d::PeriodicCellProblem p;
    p.tiles = tiles;
    p.elements_per_tile = elements_per_tile;
    p.coefficient = coefficient;
    p.xi = col == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    const auto chi = corrector_solve(p, tol);
    const auto flux = cell_average_flux(p, chi);
    t.raw[0][col] = flux[0];
    t.raw[1][col] = flux[1];
  }
  const double off = 0.5 * (t.raw[0][1] + t.raw[1][0]);
  t.value = {{{t.raw[0][0], off}, {off, t.raw[1][1]}}};
  t.asymmetry = std::abs(t.raw[0][1] - t.raw[1][0]);
  double scale = 0.0;
  for (const auto& row : t.raw)
    for (double v : row) scale = std::max(scale, std::abs(v));
  t.relative_asymmetry = scale > 0.0 ? t.asymmetry / scale : 0.0;
  return t;
}

EffectiveTensor effective_tensor_single(const fields::Checkerboard2D& realization, int tiles, int elements_per_tile,
                                        double tol) {
  check_tiles(tiles);
  return effective_tensor_from_cell(cell_coefficients(cell_tile_values(realization, tiles), tiles, elements_per_tile),
                                    tiles, elements_per_tile, tol);
}

EnsembleEstimate effective_tensor_ensemble(const fields::Checkerboard2DSpec& spec, const EnsembleOptions& opt) {
  if (opt.realizations < 2) throw ValidationError("effective_tensor_ensemble: M must be >= 2");
  check_tiles(opt.tiles);
  spec.validate();
  const auto m = static_cast<std::size_t>(opt.realizations);

  struct Slot {
    std::optional<EnsembleMember> member;
    std::optional<MemberFailure> failure;
  };
  std::vector<Slot> slots(m);
  parallel_for(m, opt.workers ? opt.workers : worker_count(), [&](std::size_t k) {
    const fields::Seed seed{opt.seed0.value + k};
    try {
      const auto real = fields::make_realization(spec, seed);
      const auto tiles = cell_tile_values(real, opt.tiles);
      auto tensor = effective_tensor_from_cell(cell_coefficients(tiles, opt.tiles, opt.elements_per_tile), opt.tiles,
                                               opt.elements_per_tile, opt.tol);
      slots[k].member = EnsembleMember{k, seed, tensor, voigt_reuss_bounds(tiles)};
    } catch (const std::exception& e) {
      slots[k].failure = MemberFailure{k, seed, e.what()};
    }
  });

  EnsembleEstimate out;
  for (auto& s : slots) {
    if (s.member) out.members.push_back(std::move(*s.member));
    if (s.failure) out.failures.push_back(std::move(*s.failure));
  }
  if (out.members.size() * 2 < m) {
    std::ostringstream msg;
    msg << "effective_tensor_ensemble: only " << out.members.size() << " of " << m << " realizations succeeded";
    if (!out.failures.empty()) msg << " (first failure: " << out.failures.front().message << ")";
    throw NumericalError(msg.str());
  }

  const auto n = static_cast<double>(out.members.size());
  auto& mean = out.mean;
  mean.dim = 2;
  mean.tiles = opt.tiles;
  mean.elements_per_tile = opt.elements_per_tile;
  mean.realizations = static_cast<int>(out.members.size());
  mean.provenance = Provenance::periodization;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double s = 0.0, r = 0.0;
      for (const auto& mbr : out.members) {
        s += mbr.tensor.value[i][j];
        r += mbr.tensor.raw[i][j];
      }
      mean.value[i][j] = s / n;
      mean.raw[i][j] = r / n;
      double ss = 0.0;
      for (const auto& mbr : out.members) ss += (mbr.tensor.value[i][j] - mean.value[i][j]) * (mbr.tensor.value[i][j] - mean.value[i][j]);
      mean.standard_error[i][j] = n > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
    }
  for (const auto& mbr : out.members) {
    mean.asymmetry = std::max(mean.asymmetry, mbr.tensor.asymmetry);
    mean.relative_asymmetry = std::max(mean.relative_asymmetry, mbr.tensor.relative_asymmetry);
  }
  return out;
}

EnergyConsistency energy_consistency(const Corrector& corrector, const fem2d::PeriodicCellProblem& problem) {
  EnergyConsistency out;
  const auto flux = cell_average_flux(problem, corrector);
  const Vec2 xi = problem.xi;
  out.flux_value = xi[0] * flux[0] + xi[1] * flux[1];
  const int n = problem.n();
  double energy = 0.0;
  double zero = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto& a = problem.coefficient[static_cast<std::size_t>(i + j * n)];
      for (const auto& g : fem2d::periodic_element_gradients(problem, corrector.chi, i, j)) {
        const Vec2 p{g[0] + xi[0], g[1] + xi[1]};
        const auto ap = a.apply(p);
        energy += 0.25 * (p[0] * ap[0] + p[1] * ap[1]);
      }
      const auto axi = a.apply(xi);
      zero += xi[0] * axi[0] + xi[1] * axi[1];
    }
  const auto elems = static_cast<double>(n) * static_cast<double>(n);
  out.energy_value = energy / elems;
  out.zero_trial_energy = zero / elems;
  out.gap = out.energy_value != 0.0 ? std::abs(out.flux_value - out.energy_value) / std::abs(out.energy_value) : 0.0;
  return out;
}

SpdReport spd_check(const EffectiveTensor& a, const fields::EllipticityBounds& bounds, double tol,
                    double symmetry_tol) {
  SpdReport r;
  r.symmetry_gap = a.relative_asymmetry;
  const auto eig = a.eigenvalues();
  r.min_eigenvalue = eig[0];
  r.max_eigenvalue = eig[1];
  std::ostringstream msg;
  msg.precision(6);
  if (r.symmetry_gap > symmetry_tol) {
    msg << "asymmetry " << r.symmetry_gap << " exceeds " << symmetry_tol;
    r.violations.push_back(msg.str());
    msg.str("");
  }
  if (eig[0] < bounds.nu1 - tol) {
    r.lower_margin = bounds.nu1 - eig[0];
    msg << "eigenvalue " << eig[0] << " below nu1 = " << bounds.nu1 << " by " << r.lower_margin;
    r.violations.push_back(msg.str());
    msg.str("");
  }
  if (eig[1] > bounds.nu2 + tol) {
    r.upper_margin = eig[1] - bounds.nu2;
    msg << "eigenvalue " << eig[1] << " above nu2 = " << bounds.nu2 << " by " << r.upper_margin;
    r.violations.push_back(msg.str());
  }
  r.pass = r.violations.empty();
  return r;
}

double periodization_1d(const fields::Checkerboard1D& realization, int tiles, int elements_per_tile, double tol) {
  check_tiles(tiles);
  if (elements_per_tile < 1) throw ValidationError("periodization_1d: need >= 1 element per tile");
  const int n = tiles * elements_per_tile;
  const double h = 1.0 / elements_per_tile;
  std::vector<double> a(static_cast<std::size_t>(n));
  for (int e = 0; e < n; ++e) a[static_cast<std::size_t>(e)] = realization.tile_value({e / elements_per_tile});

  // periodic P1: element e joins nodes e and e+1 mod n; node 0 pinned
  std::vector<fem2d::Triplet> entries;
  std::vector<double> rhs(static_cast<std::size_t>(n - 1), 0.0);
  for (int e = 0; e < n; ++e) {
    const std::array<int, 2> nodes{e, (e + 1) % n};
    const double k = a[static_cast<std::size_t>(e)] / h;
    const std::array<double, 2> load{a[static_cast<std::size_t>(e)], -a[static_cast<std::size_t>(e)]};
    for (int r = 0; r < 2; ++r) {
      if (nodes[r] == 0) continue;
      const auto row = static_cast<std::size_t>(nodes[r] - 1);
      rhs[row] += load[r];
      for (int c = 0; c < 2; ++c)
        if (nodes[c] != 0) entries.push_back({row, static_cast<std::size_t>(nodes[c] - 1), r == c ? k : -k});
    }
  }
  const auto cg = fem2d::cg_solve(fem2d::CsrMatrix::from_triplets(static_cast<std::size_t>(n - 1), std::move(entries)),
                                  rhs, tol, 0);
  std::vector<double> chi(static_cast<std::size_t>(n), 0.0);
  std::copy(cg.x.begin(), cg.x.end(), chi.begin() + 1);
  double flux = 0.0;
  for (int e = 0; e < n; ++e) {
    const double grad = (chi[static_cast<std::size_t>((e + 1) % n)] - chi[static_cast<std::size_t>(e)]) / h;
    flux += a[static_cast<std::size_t>(e)] * (grad + 1.0);
  }
  return flux / n;
}

double realized_harmonic_mean_1d(const fields::Checkerboard1D& realization, int tiles) {
  check_tiles(tiles);
  std::vector<double> v(static_cast<std::size_t>(tiles));
  for (int i = 0; i < tiles; ++i) v[static_cast<std::size_t>(i)] = realization.tile_value({i});
  return voigt_reuss_bounds(v).harmonic;
}

}  // namespace homoglab::homog
