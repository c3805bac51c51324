#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "homoglab/errors.hpp"
#include "homoglab/studies.hpp"

using namespace homoglab;
using namespace homoglab::studies;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kSource{HOMOGLAB_SOURCE_DIR};

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("homoglab_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Drops the '#' provenance lines.
std::string csv_body(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line, out;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') out += line + "\n";
  return out;
}

std::size_t data_rows(const fs::path& p) {
  std::istringstream in(csv_body(p));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n - 1;
}

int run_cli(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "homoglab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return code;
}

class ThreadsEnv {
 public:
  explicit ThreadsEnv(const char* value) {
    if (const char* old = std::getenv("HOMOGLAB_THREADS")) saved_ = old;
    ::setenv("HOMOGLAB_THREADS", value, 1);
  }
  ~ThreadsEnv() {
    if (saved_.empty())
      ::unsetenv("HOMOGLAB_THREADS");
    else
      ::setenv("HOMOGLAB_THREADS", saved_.c_str(), 1);
  }

 private:
  std::string saved_;
};

StudyConfig checker_1d(std::uint64_t seed) {
  auto c = default_config(StudyKind::convergence_1d);
  c.field = CheckerboardField{1, {1.0, 3.0}, {0.5, 0.5}, true, std::nullopt};
  c.seed = seed;
  return c;
}

StudyConfig small_2d() {
  auto c = default_config(StudyKind::convergence_2d);
  c.mesh = 32;
  c.tiles = 8;
  c.realizations = 4;
  return c;
}

}  // namespace

TEST_CASE("study kinds round-trip through their subcommand names") {
  for (auto k : {StudyKind::dump_field, StudyKind::solve1d, StudyKind::solve2d, StudyKind::homogenize,
                 StudyKind::convergence_1d, StudyKind::convergence_2d, StudyKind::energy_convergence,
                 StudyKind::ergodic})
    CHECK(study_kind_from_string(to_string(k)) == k);
  CHECK(to_string(StudyKind::convergence_1d) == "converge-1d");
  CHECK_FALSE(study_kind_from_string("converge-3d").has_value());
}

TEST_CASE("config parsing is strict") {
  const auto kind = StudyKind::convergence_1d;
  CHECK_NOTHROW(parse_config(json::object(), kind));
  CHECK_THROWS_AS(parse_config(json{{"epss", {0.5}}}, kind), ValidationError);
  CHECK_THROWS_AS(parse_config(json{{"eps", "0.5"}}, kind), ValidationError);
  CHECK_THROWS_AS(parse_config(json{{"eps", {0.25, 0.5}}}, kind), ValidationError);
  CHECK_THROWS_AS(parse_config(json{{"eps", {0.5, 0.5}}}, kind), ValidationError);
  CHECK_THROWS_AS(parse_config(json{{"eps", {0.5, -0.25}}}, kind), ValidationError);
  CHECK_THROWS_AS(parse_config(json{{"kind", "homogenize"}}, kind), ValidationError);
  CHECK_THROWS_AS(parse_config(json{{"seed", -1}}, kind), ValidationError);
  CHECK_THROWS_AS(parse_config(json{{"field", {{"type", "periodic-sine"}, {"kappa", 1}}}}, kind), ValidationError);
  CHECK_THROWS_AS(parse_config(json{{"field", {{"type", "checkerboard"}, {"kappas", {1.0, 3.0}}, {"probs", {0.5}}}}},
                               kind),
                  ValidationError);
  CHECK_THROWS_AS(parse_config(json{{"source", {{"type", "gaussian"}, {"L", 0.0}}}}, kind), ValidationError);
  CHECK_THROWS_AS(parse_config(json{{"test_function", {{"centre", 0.5}}}}, kind), ValidationError);
  CHECK_THROWS_AS(load_config(kSource / "configs" / "does_not_exist.json", kind), ValidationError);

  const auto c = parse_config(json{{"seed", 9}, {"eps", {0.5, 0.125}}, {"n_cells", 256}}, kind);
  CHECK(c.seed == 9);
  CHECK(c.eps == std::vector<double>{0.5, 0.125});
  CHECK(c.n_cells == 256);
}

TEST_CASE("canonical JSON round-trips and hashes ignore the output directory") {
  for (const char* name : {"periodic", "checker1d", "checker2d", "fourphase2d", "ergodic", "energy"}) {
    CAPTURE(name);
    const auto j = json::parse(slurp(kSource / "configs" / (std::string(name) + ".json")));
    const auto kind = *study_kind_from_string(j.at("kind").get<std::string>());
    const auto c = parse_config(j, kind);
    const auto again = parse_config(to_json(c), kind);
    CHECK(to_json(again) == to_json(c));
    CHECK(config_hash(again) == config_hash(c));
    auto moved = c;
    moved.output_dir = "/elsewhere";
    CHECK(config_hash(moved) == config_hash(c));
    auto reseeded = c;
    reseeded.seed += 1;
    CHECK(config_hash(reseeded) != config_hash(c));
    CHECK(config_hash(c).rfind("fnv1a64:", 0) == 0);
    CHECK(config_hash(c).size() == 8 + 16);
  }
}

TEST_CASE("field/study combinations are validated") {
  auto c = default_config(StudyKind::convergence_1d);
  c.field = CheckerboardField{2, {1.0}, {1.0}, true, std::nullopt};
  CHECK_THROWS_AS(coefficient_1d(c, fields::ScaleParameter(0.5)), ValidationError);
  c.field = ConstantField{2.0};
  CHECK(homogenized_coefficient_1d(c) == 2.0);
  c.field = CheckerboardField{1, {1.0, 3.0}, {0.5, 0.5}, true, std::nullopt};
  CHECK(homogenized_coefficient_1d(c) == doctest::Approx(1.5));
  c.field = PeriodicSineField{};
  CHECK(homogenized_coefficient_1d(c) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("CsvReport") {
  CsvReport r({"a", "b", "c"});
  r.add_row({1.5, std::int64_t{2}, std::string("x,y")});
  CHECK_THROWS_AS(r.add_row({1.0}), ValidationError);
  CHECK(r.rows() == 1);
  CHECK(r.number(0, "a") == 1.5);
  CHECK(r.number(0, "b") == 2.0);
  CHECK(r.text(0, "c") == "x,y");
  CHECK(r.body() == "a,b,c\n1.5,2,\"x,y\"\n");
  CHECK_THROWS(r.column_index("d"));

  Provenance p{"converge-1d", "fnv1a64:0123456789abcdef", 7, "0.1.0", "2026-01-01T00:00:00Z"};
  const auto text = r.render(p);
  CHECK(text.find("# config_hash: fnv1a64:0123456789abcdef") != std::string::npos);
  CHECK(text.find("# seed: 7") != std::string::npos);
  CHECK(text.substr(text.size() - r.body().size()) == r.body());

  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
}

TEST_CASE("raster sidecar round-trips") {
  const auto dir = scratch("raster");
  fs::create_directories(dir);
  const std::vector<double> values{0.0, 1.0, 2.5, -3.0, 1e-300, 4.0};
  write_raster_sidecar(dir / "r.bin", 3, 2, values);
  CHECK(fs::file_size(dir / "r.bin") == 16 + 6 * 8);
  const auto back = read_raster_sidecar(dir / "r.bin");
  CHECK(back.nx == 3);
  CHECK(back.ny == 2);
  CHECK(back.values == values);
  CHECK_THROWS_AS(write_raster_sidecar(dir / "bad.bin", 2, 2, values), ValidationError);
  std::ofstream(dir / "junk.bin") << "not a raster";
  CHECK_THROWS(read_raster_sidecar(dir / "junk.bin"));
  fs::remove_all(dir);
}

TEST_CASE("convergence_1d: periodic coefficient") {
  const auto r = run_convergence_1d(default_config(StudyKind::convergence_1d));
  REQUIRE(r.rows() == 8);
  for (std::size_t k = 1; k < 8; ++k) CHECK(r.number(k, "l2_error") < r.number(k - 1, "l2_error"));
  CHECK(r.number(7, "l2_error") < 1e-3);
  CHECK(r.number(7, "flux_l2_error") < r.number(1, "flux_l2_error"));
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(r.text(k, "status") == "ok");
    CHECK(r.number(k, "eps") == std::ldexp(1.0, -static_cast<int>(k) - 1));
    CHECK(r.number(k, "abar") == doctest::Approx(std::sqrt(3.0)));
  }
}

TEST_CASE("convergence_1d: an already homogenized coefficient has no error") {
  auto c = default_config(StudyKind::convergence_1d);
  c.field = ConstantField{std::sqrt(3.0)};
  c.eps = {0.25};
  const auto r = run_convergence_1d(c);
  REQUIRE(r.rows() == 1);
  CHECK(r.number(0, "l2_error") <= 1e-10);
  CHECK(r.number(0, "flux_l2_error") <= 1e-10);
}

TEST_CASE("convergence_1d: random checkerboard rate over fixed seeds") {
  int good = 0;
  for (std::uint64_t seed : {11, 12, 13, 14, 15}) {
    const auto r = run_convergence_1d(checker_1d(seed));
    REQUIRE(r.rows() == 8);
    CHECK(r.number(0, "abar") == 1.5);
    if (r.number(7, "l2_error") <= r.number(1, "l2_error") / 3.0) ++good;
  }
  CHECK(good >= 4);
}

TEST_CASE("energy convergence") {
  auto c = default_config(StudyKind::energy_convergence);
  const auto periodic = run_energy_convergence(c);
  REQUIRE(periodic.rows() == 6);
  CHECK(periodic.number(5, "energy_gap") < periodic.number(0, "energy_gap"));

  // a different interior bump converges to its own limit as well
  c.test_function = {0.4, 0.2};
  const auto moved = run_energy_convergence(c);
  CHECK(moved.number(5, "energy_gap") < moved.number(0, "energy_gap"));
  CHECK(moved.number(5, "energy_gap") < 1e-4 * std::abs(moved.number(5, "energy_hom")));

  c.field = CheckerboardField{1, {1.0, 3.0}, {0.5, 0.5}, true, std::nullopt};
  c.seed = 3;
  const auto checker = run_energy_convergence(c);
  CHECK(checker.number(5, "energy_gap") < checker.number(0, "energy_gap"));

  c.field = ConstantField{2.0};
  const auto trivial = run_energy_convergence(c);
  for (std::size_t k = 0; k < trivial.rows(); ++k) CHECK(trivial.number(k, "energy_gap") <= 1e-10);

  c.test_function = {0.1, 0.3};
  CHECK_THROWS_AS(run_energy_convergence(c), ValidationError);
}

TEST_CASE("ergodic demo") {
  const auto out = run_ergodic_demo(default_config(StudyKind::ergodic));
  const auto& t = out.tables.front().report;
  REQUIRE(t.rows() == 3);
  CHECK(t.text(0, "start") == "irrational");
  CHECK(t.number(0, "discrepancy") < 0.08);
  CHECK(t.number(0, "n_steps") == 1000);
  CHECK(t.text(1, "start") == "rational");
  CHECK(t.number(1, "period") == 24);
  CHECK(t.text(2, "start") == "origin");
  CHECK(t.number(2, "period") == 1);
  REQUIRE(out.tables.size() == 3);
  CHECK(out.tables[1].report.rows() == 1001);
  CHECK(out.tables[1].report.number(0, "x1") == 1.0 / 32.0);
  CHECK(out.failed_rows == 0);
}

TEST_CASE("homogenize summary") {
  auto c = default_config(StudyKind::homogenize);
  c.tiles = 8;
  c.realizations = 8;
  const auto out = run_homogenize(c);
  REQUIRE(out.summary.has_value());
  CHECK((*out.summary)["spd"] == "pass");
  const auto& t = out.tables.front().report;
  CHECK(t.rows() == 4);
  CHECK(t.number(0, "L") == 8);
  CHECK(t.number(0, "M") == 8);
  CHECK(out.tables[1].report.rows() == 8);
}

TEST_CASE("convergence_2d: homogeneous medium has no gap") {
  auto c = small_2d();
  c.field = ConstantField{3.0};
  const auto out = run_convergence_2d(c);
  const auto& t = out.tables.front().report;
  REQUIRE(t.rows() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(t.number(k, "rel_l2_gap") <= 1e-8);
    CHECK(t.number(k, "a0_11") == 3.0);
  }
}

TEST_CASE("convergence_2d: a failing eps row does not corrupt the others") {
  auto c = small_2d();
  c.mesh = 16;
  c.eps = {0.5, 0.3, 0.25};
  const auto out = run_convergence_2d(c);
  const auto& t = out.tables.front().report;
  REQUIRE(t.rows() == 3);
  CHECK(out.failed_rows == 1);
  CHECK(t.text(0, "status") == "ok");
  CHECK(t.text(1, "status").rfind("error", 0) == 0);
  CHECK(std::isnan(t.number(1, "rel_l2_gap")));
  CHECK(t.text(2, "status") == "ok");

  c.eps = {0.5, 0.25};
  const auto clean = run_convergence_2d(c).tables.front().report;
  CHECK(clean.number(0, "rel_l2_gap") == t.number(0, "rel_l2_gap"));
  CHECK(clean.number(1, "rel_l2_gap") == t.number(2, "rel_l2_gap"));
}

// With 2x2 tiles at eps = 1/2 the middle row is noisy; the finest eps gives
// the smallest gap for every seed.
TEST_CASE("convergence_2d: the eps trend persists across seeds") {
  std::vector<double> finest;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto c = default_config(StudyKind::convergence_2d);
    c.seed = seed;
    const auto t = run_convergence_2d(c).tables.front().report;
    CAPTURE(seed);
    CHECK(t.number(2, "rel_l2_gap") < t.number(1, "rel_l2_gap"));
    CHECK(t.number(2, "rel_l2_gap") < t.number(0, "rel_l2_gap"));
    CHECK(t.number(2, "residual") < 1e-10);
    finest.push_back(t.number(2, "rel_l2_gap"));
  }
  // different realizations, different solutions
  CHECK(finest[0] != finest[1]);
  CHECK(finest[1] != finest[2]);
}

TEST_CASE("CSV bodies do not depend on the worker count") {
  const auto run = [](const char* threads, const std::string& name) {
    ThreadsEnv env(threads);
    auto c = small_2d();
    c.realizations = 6;
    const auto dir = scratch(name);
    write_outputs(run_study(c), c, dir);
    auto h = default_config(StudyKind::homogenize);
    h.tiles = 4;
    h.realizations = 6;
    write_outputs(run_study(h), h, dir / "h");
    return dir;
  };
  const auto one = run("1", "threads1");
  const auto many = run("4", "threads4");
  for (const char* f : {"convergence2d.csv", "solution_hom.csv", "solution_e0.csv", "h/effective_tensor.csv",
                        "h/members.csv"}) {
    CAPTURE(f);
    CHECK(csv_body(one / f) == csv_body(many / f));
  }
  fs::remove_all(one);
  fs::remove_all(many);
}

TEST_CASE("write_outputs adds provenance") {
  auto c = default_config(StudyKind::solve1d);
  c.n_cells = 64;
  const auto dir = scratch("provenance");
  write_outputs(run_study(c), c, dir);
  const auto text = slurp(dir / "solution1d.csv");
  CHECK(text.rfind("# homoglab 0.1.0\n", 0) == 0);
  CHECK(text.find("# command: homoglab solve1d") != std::string::npos);
  CHECK(text.find("# config_hash: " + config_hash(c)) != std::string::npos);
  CHECK(text.find("# generated: ") != std::string::npos);
  CHECK(csv_body(dir / "solution1d.csv").rfind("x,u,sigma,", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("cli end to end") {
  const auto configs = kSource / "configs";
  const auto dir = scratch("cli");

  CHECK(run_cli({"converge-1d", "--config", (configs / "periodic.json").string(), "--out", (dir / "p1").string(),
                 "--quiet"}) == 0);
  CHECK(data_rows(dir / "p1" / "convergence.csv") == 8);

  CHECK(run_cli({"homogenize", "--config", (configs / "checker2d.json").string(), "--out", (dir / "h").string(),
                 "--quiet"}) == 0);
  CHECK(fs::exists(dir / "h" / "effective_tensor.csv"));
  CHECK(json::parse(slurp(dir / "h" / "summary.json"))["spd"] == "pass");

  CHECK(run_cli({"ergodic-orbit", "--config", (configs / "ergodic.json").string(), "--out", (dir / "e").string(),
                 "--quiet"}) == 0);
  CHECK(data_rows(dir / "e" / "orbit_irrational.csv") == 1001);

  CHECK(run_cli({"solve1d", "--seed", "4", "--out", (dir / "s").string(), "--quiet"}) == 0);
  CHECK(slurp(dir / "s" / "solution1d.csv").find("# seed: 4") != std::string::npos);

  std::string err;
  CHECK(run_cli({"converge-1d", "--config", (dir / "missing.json").string(), "--quiet"}, &err) == 1);
  CHECK(err.find("not found") != std::string::npos);
  CHECK(run_cli({"converge-5d"}) == 1);
  CHECK(run_cli({"converge-1d", "--bogus"}) == 1);
  CHECK(run_cli({}) == 1);
  CHECK(run_cli({"--help"}) == 0);

  // a partially failing table is still written, with exit code 2
  std::ofstream(dir / "bad2d.json") << R"({"mesh": 16, "tiles": 4, "realizations": 2, "eps": [0.5, 0.3]})";
  CHECK(run_cli({"converge-2d", "--config", (dir / "bad2d.json").string(), "--out", (dir / "b").string(),
                 "--quiet"}) == 2);
  CHECK(data_rows(dir / "b" / "convergence2d.csv") == 2);
  fs::remove_all(dir);
}
