#include "homoglab/studies.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numbers>

#include "homoglab/ergodics.hpp"
#include "homoglab/errors.hpp"
#include "homoglab/parallel.hpp"

namespace homoglab::studies {

namespace {

const std::string kOk = "ok";

std::string error_status(const std::exception& e) { return std::string("error: ") + e.what(); }

std::string field_label(const StudyConfig& c) {
  return std::visit(
      [](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, PeriodicSineField>) {
          return "periodic-sine";
        } else if constexpr (std::is_same_v<T, ConstantField>) {
          return "constant";
        } else {
          return "checkerboard" + std::to_string(f.dim) + "d";
        }
      },
      c.field);
}

// Runs one job per row on the worker pool. A throwing job becomes a row built
// by `failed` so the other rows are unaffected.
template <class Job, class Failed>
std::vector<std::vector<Cell>> rows_in_order(std::size_t n, const Job& job, const Failed& failed) {
  std::vector<std::vector<Cell>> rows(n);
  parallel_for(n, worker_count(), [&](std::size_t k) {
    try {
      rows[k] = job(k);
    } catch (const std::exception& e) {
      rows[k] = failed(k, error_status(e));
    }
  });
  return rows;
}

std::size_t count_failures(const CsvReport& r) {
  const auto col = r.column_index("status");
  std::size_t n = 0;
  for (std::size_t i = 0; i < r.rows(); ++i)
    if (std::get<std::string>(r.row(i)[col]) != kOk) ++n;
  return n;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

CsvReport nodal_dump(const fem2d::StructuredMesh& mesh, const std::vector<double>& u) {
  CsvReport r({"i", "j", "x1", "x2", "u"});
  for (int j = 0; j <= mesh.ny(); ++j)
    for (int i = 0; i <= mesh.nx(); ++i)
      r.add_row({std::int64_t{i}, std::int64_t{j}, mesh.node_x(i), mesh.node_y(j), u[mesh.node(i, j)]});
  return r;
}

CsvReport flux_dump(const fem2d::FemSolution& s) {
  CsvReport r({"e", "x1c", "x2c", "flux1", "flux2"});
  for (int j = 0; j < s.mesh.ny(); ++j)
    for (int i = 0; i < s.mesh.nx(); ++i) {
      const auto e = s.mesh.element(i, j);
      const auto c = s.mesh.centroid(i, j);
      r.add_row({static_cast<std::int64_t>(e), c[0], c[1], s.flux[e][0], s.flux[e][1]});
    }
  return r;
}

CsvReport coefficient_dump(const fem2d::StructuredMesh& mesh, const std::vector<fem2d::SymTensor2>& a) {
  CsvReport r({"e", "x1c", "x2c", "a"});
  for (int j = 0; j < mesh.ny(); ++j)
    for (int i = 0; i < mesh.nx(); ++i) {
      const auto e = mesh.element(i, j);
      const auto c = mesh.centroid(i, j);
      r.add_row({static_cast<std::int64_t>(e), c[0], c[1], a[e].a11});
    }
  return r;
}

Raster nodal_raster(const fem2d::StructuredMesh& mesh, const std::vector<double>& u) {
  Raster r{static_cast<std::uint32_t>(mesh.nx() + 1), static_cast<std::uint32_t>(mesh.ny() + 1), u};
  return r;
}

std::vector<fem2d::SymTensor2> constant_tensor(const fem2d::StructuredMesh& mesh, const homog::Mat2& a) {
  return std::vector<fem2d::SymTensor2>(mesh.element_count(), fem2d::SymTensor2{a[0][0], a[0][1], a[1][1]});
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

CsvReport run_convergence_1d(const StudyConfig& c) {
  const auto f = source_1d(c);
  const auto domain = solve1d::Interval::checked(c.domain_s, c.domain_t);
  const double abar = homogenized_coefficient_1d(c);
  const auto hom = solve1d::homogenized_solution(abar, f, domain);
  const auto label = field_label(c);
  const auto seed = static_cast<std::int64_t>(c.seed);

  auto rows = rows_in_order(
      c.eps.size(),
      [&](std::size_t k) -> std::vector<Cell> {
        const fields::ScaleParameter eps(c.eps[k]);
        const auto sol = solve1d::solve_exact(coefficient_1d(c, eps), f, domain, c.n_cells);
        return {c.eps[k], solve1d::l2_error(sol, hom.u), solve1d::flux_l2_error(sol, hom.flux), abar, label, seed,
                std::int64_t{c.n_cells}, kOk};
      },
      [&](std::size_t k, std::string status) -> std::vector<Cell> {
        return {c.eps[k], kNaN, kNaN, abar, label, seed, std::int64_t{c.n_cells}, std::move(status)};
      });

  CsvReport report({"eps", "l2_error", "flux_l2_error", "abar", "field", "seed", "n_cells", "status"});
  for (auto& r : rows) report.add_row(std::move(r));
  return report;
}

CsvReport run_energy_convergence(const StudyConfig& c) {
  const auto f = source_1d(c);
  const auto domain = solve1d::Interval::checked(c.domain_s, c.domain_t);
  const double abar = homogenized_coefficient_1d(c);
  const auto& tf = c.test_function;
  if (!(tf.center - tf.half_width > c.domain_s && tf.center + tf.half_width < c.domain_t))
    throw ValidationError("test_function: the bump must be supported inside the domain");
  const auto phi = solve1d::smooth_bump(c.test_function.center, c.test_function.half_width);
  const auto abar_coeff = fields::Coefficient1D::constant(abar);
  const auto hom_sol = solve1d::solve_exact(abar_coeff, f, domain, c.n_cells);
  const double limit = solve1d::weighted_energy_density(abar_coeff, f, hom_sol, phi);
  const auto label = field_label(c);
  const auto seed = static_cast<std::int64_t>(c.seed);

  auto rows = rows_in_order(
      c.eps.size(),
      [&](std::size_t k) -> std::vector<Cell> {
        const auto coeff = coefficient_1d(c, fields::ScaleParameter(c.eps[k]));
        const auto sol = solve1d::solve_exact(coeff, f, domain, c.n_cells);
        const double value = solve1d::weighted_energy_density(coeff, f, sol, phi);
        return {c.eps[k], std::abs(value - limit), value, limit, c.test_function.center, c.test_function.half_width,
                label, seed, std::int64_t{c.n_cells}, kOk};
      },
      [&](std::size_t k, std::string status) -> std::vector<Cell> {
        return {c.eps[k], kNaN, kNaN, limit, c.test_function.center, c.test_function.half_width, label, seed,
                std::int64_t{c.n_cells}, std::move(status)};
      });

  CsvReport report({"eps", "energy_gap", "energy_eps", "energy_hom", "bump_center", "bump_half_width", "field", "seed",
                    "n_cells", "status"});
  for (auto& r : rows) report.add_row(std::move(r));
  return report;
}

StudyOutput run_ergodic_demo(const StudyConfig& c) {
  struct Start {
    std::string name;
    ergodics::TorusPoint point;
    std::optional<ergodics::RationalTorusPoint> exact;
    bool dump;
  };
  const std::vector<Start> starts = {
      {"irrational", {1.0 / 32.0, std::numbers::pi / 32.0}, std::nullopt, true},
      {"rational", {1.0 / 32.0, 1.0 / 32.0}, ergodics::RationalTorusPoint(1, 1, 32), true},
      {"origin", {0.0, 0.0}, ergodics::RationalTorusPoint(0, 0, 1), false},
  };
  const ergodics::Observable g = [](const ergodics::TorusPoint& p) {
    return std::cos(2.0 * std::numbers::pi * p.x1()) * std::cos(2.0 * std::numbers::pi * p.x2());
  };

  StudyOutput out;
  CsvReport summary({"start", "x1_0", "x2_0", "n_steps", "time_average", "discrepancy", "grid_m", "empty_bins",
                     "period", "status"});
  std::vector<NamedReport> dumps;
  for (const auto& s : starts) {
    const auto pts = ergodics::orbit(s.point, c.orbit_length);
    const auto stats = ergodics::orbit_stats(pts, c.grid_m, g);
    Cell period = std::string("n/a");
    if (s.exact) {
      const auto p = ergodics::detect_period(*s.exact, c.max_period_iter);
      period = p ? Cell{*p} : Cell{std::string("none")};
    }
    summary.add_row({s.name, s.point.x1(), s.point.x2(), c.orbit_length, stats.time_average,
                     ergodics::equidistribution_discrepancy(pts, c.grid_m), std::int64_t{c.grid_m},
                     stats.empty_bins(), period, kOk});
    if (s.dump) {
      CsvReport orbit({"n", "x1", "x2"});
      orbit.add_row({std::int64_t{0}, s.point.x1(), s.point.x2()});
      for (std::size_t n = 0; n < pts.size(); ++n)
        orbit.add_row({static_cast<std::int64_t>(n + 1), pts[n].x1(), pts[n].x2()});
      dumps.push_back({"orbit_" + s.name + ".csv", std::move(orbit)});
    }
  }
  out.tables.push_back({"ergodic.csv", std::move(summary)});
  for (auto& d : dumps) out.tables.push_back(std::move(d));
  return out;
}

StudyOutput run_homogenize(const StudyConfig& c) {
  const auto spec = checkerboard_2d(c);
  homog::EnsembleOptions opts;
  opts.tiles = c.tiles;
  opts.realizations = c.realizations;
  opts.seed0 = fields::Seed{c.seed};
  opts.elements_per_tile = c.elements_per_tile;
  opts.tol = c.cg_tol;
  const auto est = homog::effective_tensor_ensemble(spec, opts);

  const auto L = std::int64_t{c.tiles};
  const auto M = std::int64_t{c.realizations};
  const auto seed = static_cast<std::int64_t>(c.seed);
  CsvReport tensor({"entry", "i", "j", "mean", "stderr", "L", "M", "elements_per_tile", "seed"});
  const char* names[2][2] = {{"a11", "a12"}, {"a21", "a22"}};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      tensor.add_row({std::string(names[i][j]), std::int64_t{i + 1}, std::int64_t{j + 1}, est.mean.value[i][j],
                      est.mean.standard_error[i][j], L, M, std::int64_t{c.elements_per_tile}, seed});

  CsvReport members({"index", "seed", "a11", "a12", "a22", "relative_asymmetry", "min_eigenvalue", "max_eigenvalue",
                     "harmonic", "arithmetic", "spd", "status"});
  bool all_pass = true;
  double mean_harmonic = 0.0, mean_arithmetic = 0.0;
  for (const auto& m : est.members) {
    const auto bounds = fields::EllipticityBounds::checked(m.cell_bounds.harmonic, m.cell_bounds.arithmetic);
    const auto spd = homog::spd_check(m.tensor, bounds);
    all_pass = all_pass && spd.pass;
    mean_harmonic += m.cell_bounds.harmonic;
    mean_arithmetic += m.cell_bounds.arithmetic;
    members.add_row({static_cast<std::int64_t>(m.index), static_cast<std::int64_t>(m.seed.value),
                     m.tensor.value[0][0], m.tensor.value[0][1], m.tensor.value[1][1], m.tensor.relative_asymmetry,
                     spd.min_eigenvalue, spd.max_eigenvalue, m.cell_bounds.harmonic, m.cell_bounds.arithmetic,
                     std::string(spd.pass ? "pass" : "fail"), kOk});
  }
  for (const auto& f : est.failures)
    members.add_row({static_cast<std::int64_t>(f.index), static_cast<std::int64_t>(f.seed.value), kNaN, kNaN, kNaN,
                     kNaN, kNaN, kNaN, kNaN, kNaN, std::string("n/a"), "error: " + f.message});

  // eigenvalues of a mean of tensors stay within the mean of the members' bounds
  const auto n_ok = static_cast<double>(est.members.size());
  mean_harmonic /= n_ok;
  mean_arithmetic /= n_ok;
  const auto mean_spd =
      homog::spd_check(est.mean, fields::EllipticityBounds::checked(mean_harmonic, mean_arithmetic));
  all_pass = all_pass && mean_spd.pass;

  const auto law_bounds = homog::voigt_reuss_bounds(spec);
  const auto eig = est.mean.eigenvalues();
  nlohmann::json summary;
  summary["effective_tensor"] = {{est.mean.value[0][0], est.mean.value[0][1]},
                                 {est.mean.value[1][0], est.mean.value[1][1]}};
  summary["standard_error"] = {{est.mean.standard_error[0][0], est.mean.standard_error[0][1]},
                               {est.mean.standard_error[1][0], est.mean.standard_error[1][1]}};
  summary["eigenvalues"] = {eig[0], eig[1]};
  summary["scalar"] = 0.5 * (est.mean.value[0][0] + est.mean.value[1][1]);
  summary["voigt_reuss"] = {{"harmonic", law_bounds.harmonic}, {"arithmetic", law_bounds.arithmetic}};
  summary["realized_bounds"] = {{"harmonic", mean_harmonic}, {"arithmetic", mean_arithmetic}};
  summary["spd"] = all_pass ? "pass" : "fail";
  summary["spd_violations"] = mean_spd.violations;
  summary["tiles"] = c.tiles;
  summary["realizations"] = c.realizations;
  summary["successful_realizations"] = est.members.size();
  summary["failed_realizations"] = est.failures.size();
  summary["elements_per_tile"] = c.elements_per_tile;
  summary["seed0"] = c.seed;

  StudyOutput out;
  out.tables.push_back({"effective_tensor.csv", std::move(tensor)});
  out.tables.push_back({"members.csv", std::move(members)});
  out.summary = std::move(summary);
  out.failed_rows = est.failures.size();
  return out;
}

StudyOutput run_dump_field(const StudyConfig& c) {
  const double eps = c.eps.front();
  const int n = c.resolution;
  const double h = (c.domain_t - c.domain_s) / n;
  StudyOutput out;
  const auto* cb = std::get_if<CheckerboardField>(&c.field);
  if (cb && cb->dim == 2) {
    const auto field = fields::make_realization(checkerboard_2d(c), fields::Seed{c.seed});
    const fields::ScaleParameter scale(eps);
    CsvReport r({"i", "j", "x1", "x2", "value"});
    Raster raster{static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n), {}};
    raster.values.reserve(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::array<double, 2> x{c.domain_s + (i + 0.5) * h, c.domain_s + (j + 0.5) * h};
        const double a = fields::eval_scaled(field, scale, x);
        r.add_row({std::int64_t{i}, std::int64_t{j}, x[0], x[1], a});
        raster.values.push_back(a);
      }
    out.tables.push_back({"field.csv", std::move(r)});
    if (c.binary_sidecar) out.rasters.push_back({"field.bin", std::move(raster)});
    return out;
  }
  const auto coeff = coefficient_1d(c, fields::ScaleParameter(eps));
  CsvReport r({"i", "x", "value"});
  Raster raster{static_cast<std::uint32_t>(n), 1, {}};
  for (int i = 0; i < n; ++i) {
    const double x = c.domain_s + (i + 0.5) * h;
    r.add_row({std::int64_t{i}, x, coeff(x)});
    raster.values.push_back(coeff(x));
  }
  out.tables.push_back({"field.csv", std::move(r)});
  if (c.binary_sidecar) out.rasters.push_back({"field.bin", std::move(raster)});
  return out;
}

StudyOutput run_solve1d(const StudyConfig& c) {
  const auto f = source_1d(c);
  const auto domain = solve1d::Interval::checked(c.domain_s, c.domain_t);
  const double abar = homogenized_coefficient_1d(c);
  const auto hom = solve1d::homogenized_solution(abar, f, domain);

  std::vector<solve1d::Solution1D> sols(c.eps.size());
  parallel_for(c.eps.size(), worker_count(), [&](std::size_t k) {
    sols[k] = solve1d::solve_exact(coefficient_1d(c, fields::ScaleParameter(c.eps[k])), f, domain, c.n_cells);
  });

  CsvReport r({"x", "u", "sigma", "eps", "u_hom", "sigma_hom"});
  for (std::size_t k = 0; k < sols.size(); ++k)
    for (std::size_t i = 0; i < sols[k].x.size(); ++i) {
      const double x = sols[k].x[i];
      r.add_row({x, sols[k].u[i], sols[k].flux[i], c.eps[k], hom.u(x), hom.flux(x)});
    }
  StudyOutput out;
  out.tables.push_back({"solution1d.csv", std::move(r)});
  return out;
}

StudyOutput run_solve2d(const StudyConfig& c) {
  const auto field = fields::make_realization(checkerboard_2d(c), fields::Seed{c.seed});
  const auto mesh = fem2d::StructuredMesh::unit_square(c.mesh);
  const auto sol = fem2d::solve_dirichlet(mesh, field, fields::ScaleParameter(c.eps.front()), source_2d(c),
                                          {c.cg_tol, 0});
  CsvReport info({"eps", "iterations", "residual", "l2_norm", "mesh", "seed", "status"});
  info.add_row({c.eps.front(), std::int64_t{sol.iterations}, sol.residual, fem2d::l2_norm(mesh, sol.u),
                std::int64_t{c.mesh}, static_cast<std::int64_t>(c.seed), kOk});
  StudyOutput out;
  out.tables.push_back({"solve2d.csv", std::move(info)});
  out.tables.push_back({"solution.csv", nodal_dump(mesh, sol.u)});
  out.tables.push_back({"flux.csv", flux_dump(sol)});
  out.tables.push_back({"coefficient.csv", coefficient_dump(mesh, sol.coefficient)});
  if (c.binary_sidecar) out.rasters.push_back({"solution.bin", nodal_raster(mesh, sol.u)});
  return out;
}

StudyOutput run_convergence_2d(const StudyConfig& c) {
  const auto spec = checkerboard_2d(c);
  const auto field = fields::make_realization(spec, fields::Seed{c.seed});
  const auto mesh = fem2d::StructuredMesh::unit_square(c.mesh);
  const auto f = source_2d(c);
  const fem2d::CgOptions cg{c.cg_tol, 0};

  homog::EnsembleOptions opts;
  opts.tiles = c.tiles;
  opts.realizations = c.realizations;
  opts.seed0 = fields::Seed{c.seed};
  opts.elements_per_tile = c.elements_per_tile;
  opts.tol = c.cg_tol;
  const auto a0 = homog::effective_tensor_ensemble(spec, opts).mean.value;
  const auto hom = fem2d::solve_dirichlet(mesh, constant_tensor(mesh, a0), f, cg);
  const double hom_norm = fem2d::l2_norm(mesh, hom.u);

  const auto seed = static_cast<std::int64_t>(c.seed);
  std::vector<std::optional<fem2d::FemSolution>> sols(c.eps.size());
  auto rows = rows_in_order(
      c.eps.size(),
      [&](std::size_t k) -> std::vector<Cell> {
        auto s = fem2d::solve_dirichlet(mesh, field, fields::ScaleParameter(c.eps[k]), f, cg);
        const double gap = fem2d::l2_distance(mesh, s.u, hom.u) / hom_norm;
        std::vector<Cell> row{c.eps[k], gap, std::int64_t{s.iterations}, s.residual, a0[0][0], a0[0][1], a0[1][1],
                              seed, std::int64_t{c.mesh}, std::int64_t{c.tiles}, std::int64_t{c.realizations},
                              kOk};
        sols[k] = std::move(s);
        return row;
      },
      [&](std::size_t k, std::string status) -> std::vector<Cell> {
        return {c.eps[k], kNaN, std::int64_t{0}, kNaN, a0[0][0], a0[0][1], a0[1][1], seed, std::int64_t{c.mesh},
                std::int64_t{c.tiles}, std::int64_t{c.realizations}, std::move(status)};
      });

  CsvReport table({"eps", "rel_l2_gap", "iterations", "residual", "a0_11", "a0_12", "a0_22", "seed", "mesh", "L", "M",
                   "status"});
  for (auto& r : rows) table.add_row(std::move(r));

  StudyOutput out;
  out.failed_rows = count_failures(table);
  out.tables.push_back({"convergence2d.csv", std::move(table)});
  out.tables.push_back({"solution_hom.csv", nodal_dump(mesh, hom.u)});
  if (c.binary_sidecar) out.rasters.push_back({"solution_hom.bin", nodal_raster(mesh, hom.u)});
  for (std::size_t k = 0; k < sols.size(); ++k) {
    if (!sols[k]) continue;
    const auto tag = "e" + std::to_string(k);
    out.tables.push_back({"coefficient_" + tag + ".csv", coefficient_dump(mesh, sols[k]->coefficient)});
    out.tables.push_back({"solution_" + tag + ".csv", nodal_dump(mesh, sols[k]->u)});
    if (c.binary_sidecar) out.rasters.push_back({"solution_" + tag + ".bin", nodal_raster(mesh, sols[k]->u)});
  }
  return out;
}

StudyOutput run_study(const StudyConfig& c) {
  auto single = [](std::string file, CsvReport r) {
    StudyOutput out;
    out.failed_rows = count_failures(r);
    out.tables.push_back({std::move(file), std::move(r)});
    return out;
  };
  switch (c.kind) {
    case StudyKind::dump_field: return run_dump_field(c);
    case StudyKind::solve1d: return run_solve1d(c);
    case StudyKind::solve2d: return run_solve2d(c);
    case StudyKind::homogenize: return run_homogenize(c);
    case StudyKind::convergence_1d: return single("convergence.csv", run_convergence_1d(c));
    case StudyKind::convergence_2d: return run_convergence_2d(c);
    case StudyKind::energy_convergence: return single("energy_convergence.csv", run_energy_convergence(c));
    case StudyKind::ergodic: return run_ergodic_demo(c);
  }
  throw ValidationError("unknown study kind");
}

void write_outputs(const StudyOutput& out, const StudyConfig& c, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir.string() + ": " + ec.message());
  const Provenance prov{"homoglab " + to_string(c.kind), config_hash(c), c.seed, kVersion, timestamp_utc()};
  for (const auto& t : out.tables) t.report.write(dir / t.file, prov);
  for (const auto& r : out.rasters) write_raster_sidecar(dir / r.file, r.raster.nx, r.raster.ny, r.raster.values);
  if (out.summary) {
    auto j = *out.summary;
    j["provenance"] = {{"command", prov.command}, {"config_hash", prov.config_hash}, {"version", prov.version},
                       {"seed", prov.seed},       {"generated", prov.timestamp}};
    j["config"] = to_json(c);
    std::ofstream f(dir / "summary.json");
    if (!f) throw ValidationError("cannot write " + (dir / "summary.json").string());
    f << j.dump(2) << '\n';
  }
}

}  // namespace homoglab::studies
