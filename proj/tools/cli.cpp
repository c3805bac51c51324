#include "cli.hpp"

#include <CLI11.hpp>

#include "homoglab/errors.hpp"
#include "homoglab/studies.hpp"

namespace homoglab::cli {

namespace {

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  bool quiet = false;
};

struct Subcommand {
  studies::StudyKind kind;
  const char* help;
};

constexpr Subcommand kSubcommands[] = {
    {studies::StudyKind::dump_field, "Sample a coefficient field on a pixel grid (field.csv)"},
    {studies::StudyKind::solve1d, "Solve the 1D problem for each eps (solution1d.csv)"},
    {studies::StudyKind::solve2d, "Solve the 2D Dirichlet problem on one realization"},
    {studies::StudyKind::homogenize, "Estimate the effective tensor by periodization (effective_tensor.csv)"},
    {studies::StudyKind::convergence_1d, "1D eps sweep against the homogenized solution (convergence.csv)"},
    {studies::StudyKind::convergence_2d, "2D eps sweep against the A0 solution (convergence2d.csv)"},
    {studies::StudyKind::energy_convergence, "Weighted energy density gap per eps (energy_convergence.csv)"},
    {studies::StudyKind::ergodic, "Cat-map orbits, time averages and periods (ergodic.csv)"},
};

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical homogenization studies: 1D/2D solvers, effective tensors, ergodic demos", "homoglab"};
  app.require_subcommand(1, 1);
  Options opts;
  for (const auto& s : kSubcommands) {
    auto* sub = app.add_subcommand(studies::to_string(s.kind), s.help);
    sub->add_option("--config", opts.config, "JSON configuration; defaults apply when omitted");
    sub->add_option("--seed", opts.seed, "Override the configured seed");
    sub->add_option("--out", opts.out, "Output directory (default: config output_dir, else .)");
    sub->add_flag("--quiet", opts.quiet, "Do not print the written files");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  const auto* sub = app.get_subcommands().front();
  const auto kind = *studies::study_kind_from_string(sub->get_name());
  try {
    auto cfg = opts.config.empty() ? studies::default_config(kind) : studies::load_config(opts.config, kind);
    if (sub->count("--seed") > 0) cfg.seed = opts.seed;
    if (!opts.out.empty()) cfg.output_dir = opts.out;

    const auto result = studies::run_study(cfg);
    studies::write_outputs(result, cfg, cfg.output_dir);
    if (!opts.quiet) {
      for (const auto& t : result.tables)
        out << (std::filesystem::path(cfg.output_dir) / t.file).string() << " (" << t.report.rows() << " rows)\n";
      for (const auto& r : result.rasters) out << (std::filesystem::path(cfg.output_dir) / r.file).string() << '\n';
      if (result.summary) out << (std::filesystem::path(cfg.output_dir) / "summary.json").string() << '\n';
    }
    if (result.failed_rows > 0) {
      err << "warning: " << result.failed_rows << " row(s) failed; see the status column\n";
      return 2;
    }
    return 0;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace homoglab::cli
