#pragma once

// Declarative experiment configurations and the runners that turn them into
// CSV tables, one per reproduced figure-level result.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "homoglab/fem2d.hpp"
#include "homoglab/fields.hpp"
#include "homoglab/homog.hpp"
#include "homoglab/report.hpp"
#include "homoglab/solve1d.hpp"

namespace homoglab::studies {

enum class StudyKind {
  dump_field,
  solve1d,
  solve2d,
  homogenize,
  convergence_1d,
  convergence_2d,
  energy_convergence,
  ergodic,
};

/// Subcommand spelling, e.g. "converge-1d".
std::string to_string(StudyKind kind);
std::optional<StudyKind> study_kind_from_string(const std::string& name);

struct PeriodicSineField {};
struct ConstantField {
  double value = 1.0;
};
struct CheckerboardField {
  int dim = 1;
  std::vector<double> kappas;
  std::vector<double> probs;
  bool offset = true;
  std::optional<fields::EllipticityBounds> bounds;
};
using FieldConfig = std::variant<PeriodicSineField, ConstantField, CheckerboardField>;

struct PolynomialSource {
  std::vector<double> coeffs;
};
struct GaussianSource {
  double amplitude = 5.0;
  double width = 0.05;
};
struct ConstantSource {
  double value = 1.0;
};
using SourceConfig = std::variant<PolynomialSource, GaussianSource, ConstantSource>;

struct TestFunction {
  double center = 0.5;
  double half_width = 0.3;
};

struct StudyConfig {
  StudyKind kind = StudyKind::convergence_1d;
  std::uint64_t seed = 1;
  FieldConfig field;
  SourceConfig source;
  std::vector<double> eps;
  double domain_s = 0.0;
  double domain_t = 1.0;
  int n_cells = 4096;
  int mesh = 128;
  int tiles = 16;
  int realizations = 16;
  int elements_per_tile = 4;
  double cg_tol = 1e-10;
  std::int64_t orbit_length = 1000;
  int grid_m = 8;
  std::int64_t max_period_iter = 1000000;
  int resolution = 256;
  bool binary_sidecar = false;
  TestFunction test_function;
  std::string output_dir = ".";  // --out overrides
};

/// The settings each subcommand runs with when no config file is given.
StudyConfig default_config(StudyKind kind);

/// Overlays a JSON object on default_config(kind). Unknown keys anywhere,
/// type mismatches, a "kind" that disagrees with `kind`, or eps values that
/// are not positive and strictly decreasing throw ValidationError.
StudyConfig parse_config(const nlohmann::json& j, StudyKind kind);
StudyConfig load_config(const std::filesystem::path& path, StudyKind kind);

/// Canonical JSON of a configuration (every key, sorted).
nlohmann::json to_json(const StudyConfig& c);
/// "fnv1a64:<16 hex digits>" of the canonical JSON dump.
std::string config_hash(const StudyConfig& c);

/// Throws ValidationError for field/study combinations that make no sense,
/// e.g. a 2D checkerboard in a 1D study.
fields::Coefficient1D coefficient_1d(const StudyConfig& c, fields::ScaleParameter eps);
/// Homogenized coefficient of the configured 1D field.
double homogenized_coefficient_1d(const StudyConfig& c);
solve1d::Source1D source_1d(const StudyConfig& c);
fem2d::Source2D source_2d(const StudyConfig& c);
fields::Checkerboard2DSpec checkerboard_2d(const StudyConfig& c);

struct NamedReport {
  std::string file;
  CsvReport report;
};

struct NamedRaster {
  std::string file;
  Raster raster;
};

struct StudyOutput {
  std::vector<NamedReport> tables;  // first entry is the main result table
  std::vector<NamedRaster> rasters;
  std::optional<nlohmann::json> summary;
  std::size_t failed_rows = 0;
};

/// Columns eps, l2_error, flux_l2_error, then run metadata.
CsvReport run_convergence_1d(const StudyConfig& c);
/// convergence2d.csv plus coefficient/solution dumps per eps.
StudyOutput run_convergence_2d(const StudyConfig& c);
/// Columns eps, energy_gap, then the two energy densities and metadata.
CsvReport run_energy_convergence(const StudyConfig& c);
/// ergodic.csv summary plus one orbit dump (n,x1,x2) per start point.
StudyOutput run_ergodic_demo(const StudyConfig& c);
/// effective_tensor.csv (entry,i,j,mean,stderr,L,M) and summary.json.
StudyOutput run_homogenize(const StudyConfig& c);
StudyOutput run_dump_field(const StudyConfig& c);
StudyOutput run_solve1d(const StudyConfig& c);
StudyOutput run_solve2d(const StudyConfig& c);

StudyOutput run_study(const StudyConfig& c);

inline constexpr const char* kVersion = "0.1.0";

/// Writes every table/raster/summary of `out` under `dir`.
void write_outputs(const StudyOutput& out, const StudyConfig& c, const std::filesystem::path& dir);

}  // namespace homoglab::studies
