// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "homoglab/ergodics.hpp"
#include "homoglab/fields.hpp"
#include "homoglab/homog.hpp"
#include "homoglab/solve1d.hpp"
#include "homoglab/studies.hpp"

using namespace homoglab;
using fields::Seed;
using fields::TileLaw;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  std::function<Verdict()> run;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

const solve1d::Interval kUnit{0.0, 1.0};
const auto kCubicSource = solve1d::Source1D::polynomial({3.0, -6.0});

Verdict periodic_harmonic_mean() {
  const double a = homog::harmonic_mean_1d(fields::eval_periodic_1d);
  const double err = std::abs(a - std::sqrt(3.0));
  return {err < 1e-8, "abar = " + fmt(a) + ", |abar - sqrt(3)| = " + fmt(err)};
}

Verdict homogenized_solution_formula() {
  const double abar = std::sqrt(3.0);
  const auto u = solve1d::solve_exact(fields::Coefficient1D::constant(abar), kCubicSource, kUnit, 4096);
  const double err =
      solve1d::l2_error(u, [&](double x) { return x * (x - 0.5) * (x - 1.0) / abar; });
  return {err < 1e-8, "L2 error = " + fmt(err)};
}

Verdict periodic_convergence_sweep() {
  const auto r = studies::run_convergence_1d(studies::default_config(studies::StudyKind::convergence_1d));
  bool ok = r.rows() == 8;
  std::string errs;
  for (std::size_t k = 0; k < r.rows(); ++k) {
    errs += (k ? " " : "") + fmt(r.number(k, "l2_error"));
    if (k >= 2 && !(r.number(k, "l2_error") < r.number(k - 1, "l2_error"))) ok = false;
  }
  ok = ok && r.number(7, "l2_error") < 1e-3 && r.number(0, "l2_error") > 5e-3;
  return {ok, "errors k=1..8: " + errs};
}

Verdict random_checkerboard_rate() {
  auto c = studies::default_config(studies::StudyKind::convergence_1d);
  c.field = studies::CheckerboardField{1, {1.0, 3.0}, {0.5, 0.5}, true, std::nullopt};
  const double abar = studies::homogenized_coefficient_1d(c);
  int good = 0;
  std::string ratios;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    c.seed = seed;
    const auto r = studies::run_convergence_1d(c);
    const double ratio = r.number(1, "l2_error") / r.number(7, "l2_error");
    ratios += (seed > 1 ? " " : "") + fmt(ratio);
    if (r.number(7, "l2_error") <= r.number(1, "l2_error") / 3.0) ++good;
  }
  return {abar == 1.5 && good >= 4,
          "abar = " + fmt(abar) + "; err(2^-2)/err(2^-8) for seeds 1..5: " + ratios + "; " + std::to_string(good) +
              "/5 at least 3"};
}

Verdict birkhoff_spatial_average() {
  const fields::Checkerboard1DSpec spec{TileLaw({1.0, 3.0}, {0.5, 0.5}), true, {}};
  const double target = fields::ensemble_mean_inverse(spec);
  int within = 0;
  std::string devs;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto r = fields::make_realization(spec, Seed{s});
    const double avg = fields::spatial_average(r, [](double a) { return 1.0 / a; }, 4096.0, 4096 * 16);
    const double rel = std::abs(avg - target) / target;
    devs += (s > 1 ? " " : "") + fmt(rel);
    if (rel < 0.02) ++within;
  }
  return {within == 5 && std::abs(target - 2.0 / 3.0) < 1e-15,
          "relative deviation from 2/3 for seeds 1..5: " + devs};
}

std::vector<fem2d::SymTensor2> layered_cell(int L, int ept, bool vary_along_x1) {
  const int n = L * ept;
  std::vector<fem2d::SymTensor2> out;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int tile = vary_along_x1 ? i / ept : j / ept;
      out.push_back(fem2d::SymTensor2::isotropic(tile % 2 ? 3.0 : 1.0));
    }
  return out;
}

Verdict periodization_sanity() {
  const fields::Checkerboard2DSpec one{TileLaw({2.5}, {1.0}), true, {}};
  const auto h = homog::effective_tensor_single(fields::make_realization(one, Seed{1}), 8);
  const bool exact = h.value[0][0] == 2.5 && h.value[1][1] == 2.5 && h.value[0][1] == 0.0 && h.value[1][0] == 0.0;

  const auto a = homog::effective_tensor_from_cell(layered_cell(8, 4, true), 8, 4);
  const auto b = homog::effective_tensor_from_cell(layered_cell(8, 4, false), 8, 4);
  const auto near = [](double v, double ref) { return std::abs(v - ref) <= 0.02 * ref; };
  const bool stripes = near(a.value[0][0], 1.5) && near(a.value[1][1], 2.0) && near(b.value[0][0], 2.0) &&
                       near(b.value[1][1], 1.5) && std::abs(a.value[0][1]) < 0.02 && std::abs(b.value[0][1]) < 0.02;
  return {exact && stripes, "homogeneous 2.5 -> diag(" + fmt(h.value[0][0]) + ", " + fmt(h.value[1][1]) +
                                "); stripes -> diag(" + fmt(a.value[0][0]) + ", " + fmt(a.value[1][1]) +
                                ") and diag(" + fmt(b.value[0][0]) + ", " + fmt(b.value[1][1]) + ")"};
}

Verdict two_phase_duality() {
  const fields::Checkerboard2DSpec spec{TileLaw({1.0, 4.0}, {0.5, 0.5}), true, {}};
  homog::EnsembleOptions opts;
  opts.realizations = 16;
  opts.elements_per_tile = 4;
  std::string sweep;
  bool ok = false;
  std::string main;
  for (int L : {8, 16, 32}) {
    opts.tiles = L;
    const auto e = homog::effective_tensor_ensemble(spec, opts);
    const double scalar = 0.5 * (e.mean.value[0][0] + e.mean.value[1][1]);
    sweep += " L=" + std::to_string(L) + ":" + fmt(scalar);
    if (L == 16) {
      ok = std::abs(scalar - 2.0) <= 0.1 * 2.0 && std::abs(e.mean.value[0][1]) < 0.1 &&
           std::abs(e.mean.value[1][0]) < 0.1;
      main = "L=16 M=16: (A11+A22)/2 = " + fmt(scalar) + ", A12 = " + fmt(e.mean.value[0][1]);
    }
  }
  return {ok, main + "; sweep" + sweep};
}

Verdict structural_properties() {
  const fields::Checkerboard2DSpec two{TileLaw({1.0, 4.0}, {0.5, 0.5}), true, {}};
  const fields::Checkerboard2DSpec four{TileLaw({1.0, 10.0, 50.0, 100.0}, {0.4, 0.2, 0.2, 0.2}), true, {}};
  int count = 0, bad = 0;
  double worst_sym = 0.0, worst_energy = 0.0, worst_bound = -INFINITY;
  for (std::uint64_t s = 0; s < 60; ++s) {
    const auto& spec = s % 2 ? two : four;
    const int L = s % 3 == 0 ? 8 : 4;
    const auto r = fields::make_realization(spec, Seed{9000 + s});
    const auto t = homog::effective_tensor_single(r, L, 4, 1e-10);
    const auto bounds = homog::voigt_reuss_bounds(homog::cell_tile_values(r, L));
    const auto eig = t.eigenvalues();
    double energy_gap = 0.0;
    for (const homog::Vec2 xi : {homog::Vec2{1.0, 0.0}, homog::Vec2{0.0, 1.0}, homog::Vec2{0.6, -0.8}}) {
      const auto p = homog::cell_problem(r, L, 4, xi);
      energy_gap = std::max(energy_gap, homog::energy_consistency(homog::corrector_solve(p, 1e-10), p).gap);
    }
    const double bound_excess = std::max(bounds.harmonic - eig[0], eig[1] - bounds.arithmetic);
    worst_sym = std::max(worst_sym, t.relative_asymmetry);
    worst_energy = std::max(worst_energy, energy_gap);
    worst_bound = std::max(worst_bound, bound_excess);
    if (!(t.relative_asymmetry < 1e-6 && bound_excess <= 1e-8 && energy_gap < 1e-6)) ++bad;
    ++count;
  }
  return {count >= 50 && bad == 0, std::to_string(count) + " realizations, " + std::to_string(bad) +
                                       " violations; max asymmetry " + fmt(worst_sym) + ", max energy gap " +
                                       fmt(worst_energy) + ", max bound excess " + fmt(worst_bound)};
}

Verdict div_curl() {
  auto c = studies::default_config(studies::StudyKind::energy_convergence);
  const auto periodic = studies::run_energy_convergence(c);
  c.field = studies::CheckerboardField{1, {1.0, 3.0}, {0.5, 0.5}, true, std::nullopt};
  c.seed = 1;
  const auto checker = studies::run_energy_convergence(c);
  const std::size_t last = periodic.rows() - 1;
  const bool ok = periodic.number(last, "eps") == 1.0 / 64.0 &&
                  periodic.number(last, "energy_gap") < periodic.number(0, "energy_gap") &&
                  checker.number(last, "energy_gap") < checker.number(0, "energy_gap");
  return {ok, "periodic gap " + fmt(periodic.number(0, "energy_gap")) + " -> " +
                  fmt(periodic.number(last, "energy_gap")) + "; checkerboard gap " +
                  fmt(checker.number(0, "energy_gap")) + " -> " + fmt(checker.number(last, "energy_gap"))};
}

Verdict ergodics_suite() {
  using namespace ergodics;
  bool periods = true;
  for (std::int64_t q = 1; q <= 64 && periods; ++q)
    for (std::int64_t p1 = 0; p1 < q && periods; ++p1)
      for (std::int64_t p2 = 0; p2 < q && periods; ++p2) {
        const RationalTorusPoint p(p1, p2, q);
        const auto k = detect_period(p, 1000000);
        periods = k.has_value() && cat_map_iterate(p, *k) == p;
      }
  const TorusPoint start{1.0 / 32.0, std::numbers::pi / 32.0};
  const double avg = birkhoff_time_average(
      start,
      [](const TorusPoint& p) {
        return std::cos(2.0 * std::numbers::pi * p.x1()) * std::cos(2.0 * std::numbers::pi * p.x2());
      },
      100000);
  const double disc = equidistribution_discrepancy(orbit(start, 100000), 8);
  const bool ok = cat_map_determinant() == 1 && periods && std::abs(avg) < 0.02 && disc < 0.08;
  return {ok, std::string("det = 1, periods q<=64 ") + (periods ? "ok" : "FAILED") + ", time average " + fmt(avg) +
                  ", discrepancy " + fmt(disc)};
}

Verdict smoke_2d() {
  const auto c = studies::default_config(studies::StudyKind::convergence_2d);
  const auto out = studies::run_convergence_2d(c);
  const auto& t = out.tables.front().report;
  bool ok = t.rows() == 3 && out.failed_rows == 0;
  std::string gaps, res;
  for (std::size_t k = 0; k < t.rows(); ++k) {
    gaps += (k ? " " : "") + fmt(t.number(k, "rel_l2_gap"));
    res += (k ? " " : "") + fmt(t.number(k, "residual"));
    if (!(t.number(k, "residual") < 1e-10)) ok = false;
    if (k > 0 && !(t.number(k, "rel_l2_gap") < t.number(k - 1, "rel_l2_gap"))) ok = false;
  }
  const auto nodes = static_cast<std::size_t>((c.mesh + 1) * (c.mesh + 1));
  const auto elems = static_cast<std::size_t>(c.mesh * c.mesh);
  std::size_t dumps = 0;
  for (const auto& table : out.tables) {
    if (table.file.rfind("solution_", 0) == 0) {
      ok = ok && table.report.rows() == nodes;
      ++dumps;
    } else if (table.file.rfind("coefficient_", 0) == 0) {
      ok = ok && table.report.rows() == elems;
      ++dumps;
    }
  }
  ok = ok && dumps == 7;
  return {ok, "mesh " + std::to_string(c.mesh) + ", gaps " + gaps + ", residuals " + res + ", " +
                  std::to_string(dumps) + " dumps"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "periodic 1D homogenized coefficient", periodic_harmonic_mean},
      {2, "homogenized solution formula", homogenized_solution_formula},
      {3, "periodic convergence sweep", periodic_convergence_sweep},
      {4, "random 1D checkerboard rate", random_checkerboard_rate},
      {5, "Birkhoff spatial averaging", birkhoff_spatial_average},
      {6, "periodization estimator sanity", periodization_sanity},
      {7, "2D symmetric two-phase duality", two_phase_duality},
      {8, "structural properties of A0", structural_properties},
      {9, "Div-Curl energy density convergence", div_curl},
      {10, "cat map ergodics", ergodics_suite},
      {11, "2D four-phase smoke reproduction", smoke_2d},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failed;
    std::printf("%s %2d %s: %s [%.2fs]\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
