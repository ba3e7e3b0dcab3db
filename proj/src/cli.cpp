#include "rescon/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "rescon/config.hpp"
#include "rescon/engine.hpp"
#include "rescon/report.hpp"

namespace rescon {

namespace {

namespace fs = std::filesystem;

struct Loaded {
  ExperimentConfig cfg;
  fs::path out;
};

Loaded load(const CommandOptions& opts) {
  Loaded l{load_config(opts.config), {}};
  if (opts.seed) {
    l.cfg.run.seed = *opts.seed;
  }
  l.out = opts.out_dir ? fs::path(*opts.out_dir) : fs::path(l.cfg.output_dir);
  std::error_code ec;
  fs::create_directories(l.out, ec);
  if (ec || !fs::is_directory(l.out)) {
    throw ConfigError(fmt::format("cannot create output directory '{}'", l.out.string()));
  }
  return l;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw ConfigError(fmt::format("cannot write '{}'", path.string()));
  }
  body(f);
  if (!f) {
    throw ConfigError(fmt::format("write to '{}' failed", path.string()));
  }
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const ValidationError& e) {
    fmt::print(err, "validation error: {}\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitFailure;
  }
}

}  // namespace

int cmd_run(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const auto l = load(opts);
    const PreparedRun prepared = prepare(l.cfg.run);
    const SingleRun result = run_single(prepared, 0);
    if (prepared.config.record_trace) {
      write_file(l.out / "trace.csv", [&](auto& o) { write_trace_csv(o, result.trace); });
      write_file(l.out / "detections.csv",
                 [&](auto& o) { write_detections_csv(o, result.trace); });
    }
    write_file(l.out / "summary.txt",
               [&](auto& o) { write_summary(o, prepared, result.summary); });
    write_file(l.out / "analysis.txt",
               [&](auto& o) { write_analysis(o, prepared, result.summary, l.cfg.analysis); });
    if (l.cfg.analysis.cdf_grid > 0) {
      write_file(l.out / "cdf_grid.csv", [&](auto& o) {
        write_cdf_grid_csv(o, prepared, result.summary, l.cfg.analysis.cdf_grid);
      });
    }
    if (!opts.quiet) {
      fmt::print(log, "{}: final {:.10f} target {:.10f} error {:.3e} -> {}\n",
                 to_string(prepared.config.algorithm), result.summary.final_value,
                 result.summary.target, result.summary.abs_error, l.out.string());
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_monte_carlo(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const auto l = load(opts);
    const PreparedRun prepared = prepare(l.cfg.run);
    const BatchSummary batch = run_monte_carlo(prepared);
    write_file(l.out / "runs.csv", [&](auto& o) { write_runs_csv(o, batch); });
    write_file(l.out / "summary.txt", [&](auto& o) { write_batch_summary(o, prepared, batch); });
    write_file(l.out / "analysis.txt",
               [&](auto& o) { write_batch_analysis(o, prepared, batch, l.cfg.analysis); });
    if (!opts.quiet) {
      fmt::print(log, "{} runs: mean {:.10f} variance {:.6e} target {:.10f} -> {}\n", batch.runs,
                 batch.mean, batch.variance, batch.target, l.out.string());
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_compare(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const auto l = load(opts);
    if (l.cfg.compare.empty()) {
      throw ConfigError("'compare' needs at least one algorithm");
    }
    std::vector<ExperimentSummary> rows;
    std::ofstream summary_file;
    write_file(l.out / "summary.txt", [&](auto& o) {
      for (Algorithm a : l.cfg.compare) {
        RunConfig cfg = l.cfg.run;
        cfg.algorithm = a;
        cfg.record_trace = false;
        const PreparedRun prepared = prepare(cfg);
        rows.push_back(run_single(prepared, 0).summary);
        fmt::print(o, "[{}]\n", to_string(a));
        write_summary(o, prepared, rows.back());
        write_analysis(o, prepared, rows.back(), l.cfg.analysis);
      }
    });
    write_file(l.out / "comparison.csv", [&](auto& o) { write_comparison_csv(o, rows); });
    if (!opts.quiet) {
      for (const auto& r : rows) {
        fmt::print(log, "{:<6} final {:.10f} error {:.3e}\n", to_string(r.algorithm),
                   r.final_value, r.abs_error);
      }
    }
    return static_cast<int>(kExitOk);
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& log, std::ostream& err) {
  CLI::App app{"Resilient average consensus simulator"};
  app.require_subcommand(1);
  CommandOptions opts;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "experiment YAML file")->required();
    sub->add_option("--out", opts.out_dir, "output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "master seed override");
    sub->add_flag("--quiet", opts.quiet, "suppress progress output");
  };
  auto* run = app.add_subcommand("run", "single seeded run with traces");
  auto* mc = app.add_subcommand("monte-carlo", "batch of independent runs");
  auto* cmp = app.add_subcommand("compare", "run each listed algorithm on one setup");
  for (auto* sub : {run, mc, cmp}) {
    add_common(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream out_text;
    std::ostringstream err_text;
    const int code = app.exit(e, out_text, err_text);
    log << out_text.str();
    err << err_text.str();
    return code == 0 ? kExitOk : kExitConfig;
  }
  for (auto* sub : {run, mc, cmp}) {
    if (sub->parsed() && sub->count("--seed") > 0) {
      opts.seed = seed;
    }
  }
  if (run->parsed()) {
    return cmd_run(opts, log, err);
  }
  if (mc->parsed()) {
    return cmd_monte_carlo(opts, log, err);
  }
  return cmd_compare(opts, log, err);
}

}  // namespace rescon
