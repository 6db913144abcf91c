#pragma once

#include <nystrom/errors.hpp>
#include <nystrom/experiment.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace nystrom {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

namespace detail {

inline std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

/// Command-line entry point: parse flags, run the experiment, write CSV.
/// Returns 0 on success, 2 on a usage or config error, 3 on a numerical
/// consistency error.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Nystrom kernel quadrature experiments (worst-case error in Korobov spaces)",
               "nystrom_kq"};
  std::optional<std::string> figure;
  std::optional<std::string> config_path;
  std::optional<std::string> out_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<double> rtol;
  std::optional<std::string> methods;
  bool no_inequality = false;
  bool no_timing = false;
  bool quiet = false;

  app.add_option("--figure", figure, "fig1a | fig1b | fig1c | fig2a | fig2b | custom");
  app.add_option("--config", config_path, "JSON experiment config");
  app.add_option("--out", out_path, "output CSV path (default: stdout)");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--trials", trials, "trials per n");
  app.add_flag("--no-inequality", no_inequality, "drop the power-function inequality constraint");
  app.add_option("--rtol", rtol, "relative eigenvalue cutoff for pseudo-inverses");
  app.add_option("--methods", methods, "comma-separated subset of methods");
  app.add_flag("--no-timing", no_timing, "write runtime_ms as 0 (byte-reproducible output)");
  app.add_flag("--quiet", quiet, "suppress progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kExitConfig;
  }

  ExperimentConfig cfg;
  try {
    if (config_path) {
      std::ifstream in(*config_path);
      if (!in) throw ConfigError("cannot open config file " + *config_path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid JSON in config: ") + e.what());
      }
      if (figure) {
        if (j.contains("figure") && j["figure"] != *figure) {
          throw ConfigError("--figure disagrees with the config file");
        }
        j["figure"] = *figure;
      }
      cfg = config_from_json(j);
    } else if (figure) {
      cfg = preset_config(*figure);
    } else {
      err << "either --figure or --config is required\n" << app.help();
      return kExitConfig;
    }
    if (seed) cfg.seed = *seed;
    if (trials) cfg.trials = *trials;
    if (rtol) cfg.rtol = *rtol;
    if (no_inequality) cfg.enforce_inequality = false;
    if (no_timing) cfg.record_runtime = false;
    if (methods) {
      cfg.methods.clear();
      for (const auto& m : detail::split_commas(*methods)) cfg.methods.push_back(parse_method(m));
    }
    validate(cfg);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const auto rows = run_experiment(cfg, [&](const ResultRow& row) {
      if (!quiet) {
        err << cfg.figure << ' ' << to_string(row.method) << " n=" << row.n
            << " trial=" << row.trial << " wce_sq=" << format_double(row.wce_sq) << '\n';
      }
    });
    if (out_path) {
      std::ofstream f(*out_path, std::ios::binary);
      if (!f) {
        err << "cannot open output file " << *out_path << '\n';
        return kExitConfig;
      }
      write_csv(f, rows, cfg);
    } else {
      write_csv(out, rows, cfg);
    }
  } catch (const NumericalConsistencyError& e) {
    err << "numerical consistency error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace nystrom
