#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "homoglab/errors.hpp"
#include "homoglab/studies.hpp"

namespace homoglab::studies {

using nlohmann::json;

namespace {

constexpr std::pair<StudyKind, const char*> kKindNames[] = {
    {StudyKind::dump_field, "dump-field"},        {StudyKind::solve1d, "solve1d"},
    {StudyKind::solve2d, "solve2d"},              {StudyKind::homogenize, "homogenize"},
    {StudyKind::convergence_1d, "converge-1d"},   {StudyKind::convergence_2d, "converge-2d"},
    {StudyKind::energy_convergence, "energy-conv"}, {StudyKind::ergodic, "ergodic-orbit"},
};

std::vector<double> dyadic_eps(int k_min, int k_max) {
  std::vector<double> out;
  for (int k = k_min; k <= k_max; ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

CheckerboardField four_phase() { return {2, {1.0, 10.0, 50.0, 100.0}, {0.4, 0.2, 0.2, 0.2}, false, std::nullopt}; }

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected a JSON object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ValidationError(where + ": unknown key \"" + key + "\"");
}

double get_number(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ValidationError(where + "." + key + ": expected a number");
  return v.get<double>();
}

std::int64_t get_integer(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ValidationError(where + "." + key + ": expected an integer");
  return v.get<std::int64_t>();
}

int get_int(const json& j, const std::string& key, const std::string& where) {
  const auto v = get_integer(j, key, where);
  if (v < INT32_MIN || v > INT32_MAX) throw ValidationError(where + "." + key + ": out of range");
  return static_cast<int>(v);
}

bool get_bool(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_boolean()) throw ValidationError(where + "." + key + ": expected true or false");
  return v.get<bool>();
}

std::vector<double> get_numbers(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_array()) throw ValidationError(where + "." + key + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ValidationError(where + "." + key + ": expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::string get_string(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw ValidationError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

FieldConfig parse_field(const json& j, const FieldConfig& fallback) {
  const std::string where = "field";
  if (!j.is_object() || !j.contains("type")) throw ValidationError("field: expected an object with a \"type\"");
  const auto type = get_string(j, "type", where);
  if (type == "periodic-sine") {
    reject_unknown(j, {"type"}, where);
    return PeriodicSineField{};
  }
  if (type == "constant") {
    reject_unknown(j, {"type", "value"}, where);
    return ConstantField{get_number(j, "value", where)};
  }
  if (type == "checkerboard") {
    reject_unknown(j, {"type", "dim", "kappas", "probs", "offset", "bounds"}, where);
    CheckerboardField f;
    if (const auto* prev = std::get_if<CheckerboardField>(&fallback)) f = *prev;
    if (j.contains("dim")) f.dim = get_int(j, "dim", where);
    if (j.contains("kappas")) f.kappas = get_numbers(j, "kappas", where);
    if (j.contains("probs")) f.probs = get_numbers(j, "probs", where);
    if (j.contains("offset")) f.offset = get_bool(j, "offset", where);
    if (j.contains("bounds")) {
      const auto b = get_numbers(j, "bounds", where);
      if (b.size() != 2) throw ValidationError("field.bounds: expected [nu1, nu2]");
      f.bounds = fields::EllipticityBounds::checked(b[0], b[1]);
    }
    if (f.dim != 1 && f.dim != 2) throw ValidationError("field.dim: must be 1 or 2");
    // validates lengths, positivity and normalization
    (void)fields::TileLaw(f.kappas, f.probs);
    return f;
  }
  throw ValidationError("field.type: unknown field type \"" + type + "\"");
}

SourceConfig parse_source(const json& j) {
  const std::string where = "source";
  if (!j.is_object() || !j.contains("type")) throw ValidationError("source: expected an object with a \"type\"");
  const auto type = get_string(j, "type", where);
  if (type == "polynomial") {
    reject_unknown(j, {"type", "coeffs"}, where);
    return PolynomialSource{get_numbers(j, "coeffs", where)};
  }
  if (type == "gaussian") {
    reject_unknown(j, {"type", "C", "L"}, where);
    GaussianSource g;
    if (j.contains("C")) g.amplitude = get_number(j, "C", where);
    if (j.contains("L")) g.width = get_number(j, "L", where);
    if (!(g.width > 0.0)) throw ValidationError("source.L: must be positive");
    return g;
  }
  if (type == "constant") {
    reject_unknown(j, {"type", "value"}, where);
    return ConstantSource{get_number(j, "value", where)};
  }
  throw ValidationError("source.type: unknown source type \"" + type + "\"");
}

void validate(const StudyConfig& c) {
  if (c.kind != StudyKind::ergodic && c.eps.empty()) throw ValidationError("eps: at least one value is required");
  for (std::size_t i = 0; i < c.eps.size(); ++i) {
    if (!(c.eps[i] > 0.0) || !std::isfinite(c.eps[i])) throw ValidationError("eps: values must be positive");
    if (i > 0 && !(c.eps[i] < c.eps[i - 1])) throw ValidationError("eps: values must be strictly decreasing");
  }
  if (!(c.domain_s < c.domain_t)) throw ValidationError("domain: expected [s, t] with s < t");
  if (c.n_cells < 2) throw ValidationError("n_cells: must be >= 2");
  if (c.mesh < 2) throw ValidationError("mesh: must be >= 2");
  if (c.tiles < 2) throw ValidationError("tiles: must be >= 2");
  if (c.realizations < 2) throw ValidationError("realizations: must be >= 2");
  if (c.elements_per_tile < 1) throw ValidationError("elements_per_tile: must be >= 1");
  if (!(c.cg_tol > 0.0)) throw ValidationError("cg_tol: must be positive");
  if (c.orbit_length < 1) throw ValidationError("orbit_length: must be >= 1");
  if (c.grid_m < 2) throw ValidationError("grid_m: must be >= 2");
  if (c.max_period_iter < 1) throw ValidationError("max_period_iter: must be >= 1");
  if (c.resolution < 2) throw ValidationError("resolution: must be >= 2");
  if (!(c.test_function.half_width > 0.0)) throw ValidationError("test_function.half_width: must be positive");
  if (const auto* k = std::get_if<ConstantField>(&c.field); k && !(k->value > 0.0))
    throw ValidationError("field.value: must be positive");
}

}  // namespace

std::string to_string(StudyKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<StudyKind> study_kind_from_string(const std::string& name) {
  for (const auto& [k, n] : kKindNames)
    if (name == n) return k;
  return std::nullopt;
}

StudyConfig default_config(StudyKind kind) {
  StudyConfig c;
  c.kind = kind;
  c.field = PeriodicSineField{};
  c.source = PolynomialSource{{3.0, -6.0}};
  switch (kind) {
    case StudyKind::dump_field:
      c.field = four_phase();
      c.eps = {0.125};
      break;
    case StudyKind::solve1d:
      c.eps = {1.0 / 16.0};
      break;
    case StudyKind::solve2d:
      c.field = four_phase();
      c.source = GaussianSource{};
      c.eps = {0.125};
      break;
    case StudyKind::homogenize:
      c.field = CheckerboardField{2, {1.0, 4.0}, {0.5, 0.5}, false, std::nullopt};
      c.eps = {1.0};
      break;
    case StudyKind::convergence_1d:
      c.eps = dyadic_eps(1, 8);
      break;
    case StudyKind::convergence_2d:
      c.field = four_phase();
      c.source = GaussianSource{};
      c.eps = {0.5, 0.25, 0.125};
      break;
    case StudyKind::energy_convergence:
      c.eps = dyadic_eps(1, 6);
      break;
    case StudyKind::ergodic:
      c.eps = {};
      break;
  }
  return c;
}

StudyConfig parse_config(const json& j, StudyKind kind) {
  reject_unknown(j,
                 {"kind", "seed", "field", "source", "eps", "domain", "n_cells", "mesh", "tiles", "realizations",
                  "elements_per_tile", "cg_tol", "orbit_length", "grid_m", "max_period_iter", "resolution",
                  "binary_sidecar", "test_function", "output_dir"},
                 "config");
  const std::string where = "config";
  StudyConfig c = default_config(kind);
  try {
    if (j.contains("kind")) {
      const auto k = study_kind_from_string(get_string(j, "kind", where));
      if (!k) throw ValidationError("config.kind: unknown study kind \"" + j.at("kind").get<std::string>() + "\"");
      if (*k != kind)
        throw ValidationError("config.kind \"" + to_string(*k) + "\" does not match subcommand " + to_string(kind));
    }
    if (j.contains("seed")) {
      const auto& v = j.at("seed");
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ValidationError("config.seed: expected a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    }
    if (j.contains("field")) c.field = parse_field(j.at("field"), c.field);
    if (j.contains("source")) c.source = parse_source(j.at("source"));
    if (j.contains("eps")) c.eps = get_numbers(j, "eps", where);
    if (j.contains("domain")) {
      const auto d = get_numbers(j, "domain", where);
      if (d.size() != 2) throw ValidationError("config.domain: expected [s, t]");
      c.domain_s = d[0];
      c.domain_t = d[1];
    }
    if (j.contains("n_cells")) c.n_cells = get_int(j, "n_cells", where);
    if (j.contains("mesh")) c.mesh = get_int(j, "mesh", where);
    if (j.contains("tiles")) c.tiles = get_int(j, "tiles", where);
    if (j.contains("realizations")) c.realizations = get_int(j, "realizations", where);
    if (j.contains("elements_per_tile")) c.elements_per_tile = get_int(j, "elements_per_tile", where);
    if (j.contains("cg_tol")) c.cg_tol = get_number(j, "cg_tol", where);
    if (j.contains("orbit_length")) c.orbit_length = get_integer(j, "orbit_length", where);
    if (j.contains("grid_m")) c.grid_m = get_int(j, "grid_m", where);
    if (j.contains("max_period_iter")) c.max_period_iter = get_integer(j, "max_period_iter", where);
    if (j.contains("resolution")) c.resolution = get_int(j, "resolution", where);
    if (j.contains("binary_sidecar")) c.binary_sidecar = get_bool(j, "binary_sidecar", where);
    if (j.contains("output_dir")) c.output_dir = get_string(j, "output_dir", where);
    if (j.contains("test_function")) {
      const auto& t = j.at("test_function");
      reject_unknown(t, {"center", "half_width"}, "test_function");
      if (t.contains("center")) c.test_function.center = get_number(t, "center", "test_function");
      if (t.contains("half_width")) c.test_function.half_width = get_number(t, "half_width", "test_function");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

StudyConfig load_config(const std::filesystem::path& path, StudyKind kind) {
  if (!std::filesystem::exists(path)) throw ValidationError("config file not found: " + path.string());
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, kind);
}

json to_json(const StudyConfig& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["seed"] = c.seed;
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, PeriodicSineField>) {
          j["field"] = {{"type", "periodic-sine"}};
        } else if constexpr (std::is_same_v<T, ConstantField>) {
          j["field"] = {{"type", "constant"}, {"value", f.value}};
        } else {
          j["field"] = {{"type", "checkerboard"}, {"dim", f.dim}, {"kappas", f.kappas}, {"probs", f.probs},
                        {"offset", f.offset}};
          if (f.bounds) j["field"]["bounds"] = {f.bounds->nu1, f.bounds->nu2};
        }
      },
      c.field);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PolynomialSource>) {
          j["source"] = {{"type", "polynomial"}, {"coeffs", s.coeffs}};
        } else if constexpr (std::is_same_v<T, GaussianSource>) {
          j["source"] = {{"type", "gaussian"}, {"C", s.amplitude}, {"L", s.width}};
        } else {
          j["source"] = {{"type", "constant"}, {"value", s.value}};
        }
      },
      c.source);
  j["eps"] = c.eps;
  j["domain"] = {c.domain_s, c.domain_t};
  j["n_cells"] = c.n_cells;
  j["mesh"] = c.mesh;
  j["tiles"] = c.tiles;
  j["realizations"] = c.realizations;
  j["elements_per_tile"] = c.elements_per_tile;
  j["cg_tol"] = c.cg_tol;
  j["orbit_length"] = c.orbit_length;
  j["grid_m"] = c.grid_m;
  j["max_period_iter"] = c.max_period_iter;
  j["resolution"] = c.resolution;
  j["binary_sidecar"] = c.binary_sidecar;
  j["output_dir"] = c.output_dir;
  j["test_function"] = {{"center", c.test_function.center}, {"half_width", c.test_function.half_width}};
  return j;
}

std::string config_hash(const StudyConfig& c) {
  auto j = to_json(c);
  j.erase("output_dir");  // where results go does not change them
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

fields::Coefficient1D coefficient_1d(const StudyConfig& c, fields::ScaleParameter eps) {
  return std::visit(
      [&](const auto& f) -> fields::Coefficient1D {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, PeriodicSineField>) {
          return fields::Coefficient1D::periodic_sine(eps);
        } else if constexpr (std::is_same_v<T, ConstantField>) {
          return fields::Coefficient1D::constant(f.value);
        } else {
          if (f.dim != 1) throw ValidationError("this study needs a 1D field; got a 2D checkerboard");
          const fields::Checkerboard1DSpec spec{fields::TileLaw(f.kappas, f.probs), f.offset, f.bounds};
          return fields::Coefficient1D::checkerboard(fields::make_realization(spec, fields::Seed{c.seed}), eps);
        }
      },
      c.field);
}

double homogenized_coefficient_1d(const StudyConfig& c) {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, PeriodicSineField>) {
          return homog::harmonic_mean_1d(fields::eval_periodic_1d);
        } else if constexpr (std::is_same_v<T, ConstantField>) {
          return f.value;
        } else {
          return homog::harmonic_mean_1d(fields::TileLaw(f.kappas, f.probs));
        }
      },
      c.field);
}

solve1d::Source1D source_1d(const StudyConfig& c) {
  return std::visit(
      [&](const auto& s) -> solve1d::Source1D {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PolynomialSource>) {
          return solve1d::Source1D::polynomial(s.coeffs);
        } else if constexpr (std::is_same_v<T, ConstantSource>) {
          return solve1d::Source1D::constant(s.value);
        } else {
          throw ValidationError("the gaussian source is two-dimensional; use a polynomial or constant source");
        }
      },
      c.source);
}

fem2d::Source2D source_2d(const StudyConfig& c) {
  return std::visit(
      [&](const auto& s) -> fem2d::Source2D {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GaussianSource>) {
          return fem2d::gaussian_source(s.amplitude, s.width);
        } else if constexpr (std::is_same_v<T, ConstantSource>) {
          const double v = s.value;
          return [v](double, double) { return v; };
        } else {
          throw ValidationError("polynomial sources are one-dimensional; use a gaussian or constant source");
        }
      },
      c.source);
}

fields::Checkerboard2DSpec checkerboard_2d(const StudyConfig& c) {
  if (const auto* f = std::get_if<CheckerboardField>(&c.field)) {
    if (f->dim != 2) throw ValidationError("this study needs a 2D checkerboard field (field.dim = 2)");
    return {fields::TileLaw(f->kappas, f->probs), f->offset, f->bounds};
  }
  if (const auto* k = std::get_if<ConstantField>(&c.field)) {
    // a homogeneous medium is the one-phase checkerboard
    return {fields::TileLaw({k->value}, {1.0}), false, std::nullopt};
  }
  throw ValidationError("this study needs a checkerboard or constant field");
}

}  // namespace homoglab::studies
