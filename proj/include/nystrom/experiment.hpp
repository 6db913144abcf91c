#pragma once

#include <nystrom/errors.hpp>
#include <nystrom/kernel.hpp>
#include <nystrom/linalg.hpp>
#include <nystrom/lowrank.hpp>
#include <nystrom/quadrature.hpp>
#include <nystrom/samplers.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace nystrom {

enum class Method { monte_carlo, baseline, ks_h, ks_z, ks_yz, ksmu_z };

inline constexpr Method kAllMethods[] = {Method::monte_carlo, Method::baseline, Method::ks_h,
                                         Method::ks_z,        Method::ks_yz,    Method::ksmu_z};

inline std::string to_string(Method m) {
  switch (m) {
    case Method::monte_carlo: return "monte-carlo";
    case Method::baseline: return "grid-or-halton-baseline";
    case Method::ks_h: return "kq-ksH";
    case Method::ks_z: return "kq-ksZ";
    case Method::ks_yz: return "kq-ksYZ";
    case Method::ksmu_z: return "kq-ksmuZ";
  }
  return "unknown";
}

inline Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

inline bool is_kernel_quadrature(Method m) {
  return m == Method::ks_h || m == Method::ks_z || m == Method::ks_yz || m == Method::ksmu_z;
}

/// Size of the empirical measure Y: N = n^2 or N = n^3.
enum class NRule { square, cube };

inline std::string to_string(NRule rule) { return rule == NRule::square ? "n2" : "n3"; }

inline NRule parse_n_rule(std::string_view s) {
  if (s == "n2") return NRule::square;
  if (s == "n3") return NRule::cube;
  throw ConfigError("n_rule must be \"n2\" or \"n3\", got '" + std::string(s) + "'");
}

struct ExperimentConfig {
  std::string figure = "custom";
  int d = 1;
  int r = 1;
  std::vector<int> n_list{4, 8, 16, 32, 64};
  NRule n_rule = NRule::square;
  int trials = 20;
  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  std::uint64_t seed = 0;
  bool enforce_inequality = true;
  double rtol = kDefaultRtol;
  /// When false, runtime_ms is written as 0 so output is byte-reproducible.
  bool record_runtime = true;

  Kernel kernel() const { return Kernel::korobov(r, d); }

  std::int64_t sample_size(int n) const {
    const auto nn = static_cast<std::int64_t>(n);
    return n_rule == NRule::square ? nn * nn : nn * nn * nn;
  }
};

struct FigurePreset {
  std::string_view id;
  int d;
  int r;
  NRule n_rule;
  std::vector<int> n_list;
};

inline constexpr std::string_view kFigureIds[] = {"fig1a", "fig1b", "fig1c", "fig2a", "fig2b"};

inline std::optional<FigurePreset> figure_preset(std::string_view id) {
  if (id == "fig1a") return FigurePreset{"fig1a", 1, 1, NRule::square, {4, 8, 16, 32, 64, 128}};
  if (id == "fig1b") return FigurePreset{"fig1b", 2, 1, NRule::square, {4, 8, 16, 32, 64, 128}};
  if (id == "fig1c") return FigurePreset{"fig1c", 3, 3, NRule::square, {4, 8, 16, 32, 64, 128}};
  if (id == "fig2a") return FigurePreset{"fig2a", 1, 2, NRule::square, {4, 8, 16, 32, 64}};
  if (id == "fig2b") return FigurePreset{"fig2b", 1, 2, NRule::cube, {4, 8, 16, 32, 64}};
  return std::nullopt;
}

inline ExperimentConfig preset_config(std::string_view figure) {
  ExperimentConfig cfg;
  cfg.figure = std::string(figure);
  if (figure == "custom") return cfg;
  const auto p = figure_preset(figure);
  if (!p) throw ConfigError("unknown figure '" + std::string(figure) + "'");
  cfg.d = p->d;
  cfg.r = p->r;
  cfg.n_rule = p->n_rule;
  cfg.n_list.assign(p->n_list.begin(), p->n_list.end());
  return cfg;
}

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.figure != "custom") {
    const auto p = figure_preset(cfg.figure);
    if (!p) throw ConfigError("unknown figure '" + cfg.figure + "'");
    if (cfg.d != p->d || cfg.r != p->r || cfg.n_rule != p->n_rule) {
      throw ConfigError("figure " + cfg.figure + " fixes (d, r, n_rule) = (" +
                        std::to_string(p->d) + ", " + std::to_string(p->r) + ", " +
                        to_string(p->n_rule) + ")");
    }
  }
  if (cfg.d < 1) throw ConfigError("d must be >= 1");
  if (cfg.r < 1 || 2 * cfg.r > kMaxBernoulliDegree) throw ConfigError("r must lie in [1, 6]");
  if (cfg.n_list.empty()) throw ConfigError("n_list must be nonempty");
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    if (cfg.n_list[i] < 2) throw ConfigError("every n must be >= 2 (rank s = n - 1 >= 1)");
    if (i > 0 && cfg.n_list[i] <= cfg.n_list[i - 1]) {
      throw ConfigError("n_list must be strictly increasing");
    }
  }
  if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
  if (cfg.methods.empty()) throw ConfigError("methods must be nonempty");
  if (!(cfg.rtol > 0.0 && cfg.rtol < 1.0)) throw ConfigError("rtol must lie in (0, 1)");
  for (Method m : cfg.methods) {
    if (m == Method::ksmu_z && 4 * cfg.r > kMaxBernoulliDegree) {
      throw ConfigError("kq-ksmuZ needs the closed-form squared kernel k_" +
                        std::to_string(2 * cfg.r) + ", which is unavailable for r = " +
                        std::to_string(cfg.r));
    }
  }
}

/// Build a config from a JSON object. Keys: figure, d, r, n_list, n_rule,
/// trials, methods, seed, enforce_inequality, rtol, record_runtime. A preset
/// figure supplies defaults for the keys it fixes.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known{"figure", "d",       "r",    "n_list",
                                              "n_rule", "trials",  "methods", "seed",
                                              "enforce_inequality", "rtol", "record_runtime"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  try {
    ExperimentConfig cfg = preset_config(j.value("figure", std::string("custom")));
    if (j.contains("d")) cfg.d = j.at("d").get<int>();
    if (j.contains("r")) cfg.r = j.at("r").get<int>();
    if (j.contains("n_list")) cfg.n_list = j.at("n_list").get<std::vector<int>>();
    if (j.contains("n_rule")) cfg.n_rule = parse_n_rule(j.at("n_rule").get<std::string>());
    if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
    if (j.contains("methods")) {
      cfg.methods.clear();
      for (const auto& m : j.at("methods")) cfg.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("enforce_inequality")) {
      cfg.enforce_inequality = j.at("enforce_inequality").get<bool>();
    }
    if (j.contains("rtol")) cfg.rtol = j.at("rtol").get<double>();
    if (j.contains("record_runtime")) cfg.record_runtime = j.at("record_runtime").get<bool>();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

struct ResultRow {
  std::string figure;
  Method method = Method::monte_carlo;
  int d = 1;
  int r = 1;
  int n = 0;
  std::int64_t N = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double wce_sq = 0.0;
  std::int64_t runtime_ms = 0;
};

inline constexpr std::string_view kCsvHeader = "figure,method,d,r,n,N,trial,seed,wce_sq,runtime_ms";

/// Point sets shared by every method within one (n, trial) cell.
struct TrialInputs {
  SeededGenerator gen;
  PointSet Y;
  PointSet H;
  PointSet Z;
};

inline TrialInputs draw_trial_inputs(const ExperimentConfig& cfg, int n, int trial) {
  TrialInputs in;
  in.gen = SeededGenerator{cfg.seed, 0}.derive(static_cast<std::uint64_t>(n)).derive(
      static_cast<std::uint64_t>(trial));
  in.Y = generate(SampleKind::iid_uniform, cfg.sample_size(n), cfg.d, in.gen.derive("Y"));
  in.H = cfg.d == 1 ? generate(SampleKind::grid, n, 1, in.gen)
                    : generate(SampleKind::halton_owen, n, cfg.d, in.gen.derive("H"));
  in.Z = landmark_mix(in.H, n, in.gen.derive("Z"));
  return in;
}

/// Quadrature rule produced by `method` for one trial.
inline Quadrature run_method(const ExperimentConfig& cfg, Method method, int n,
                             const TrialInputs& in, const LandmarkGram* z_gram) {
  const Kernel kernel = cfg.kernel();
  const Eigen::Index s = n - 1;
  const Provenance prov{to_string(method), n, static_cast<int>(s), in.gen.key()};
  auto need_z = [&]() -> const LandmarkGram& {
    if (z_gram == nullptr) throw InvalidArgument("landmark factorization required");
    return *z_gram;
  };
  switch (method) {
    case Method::monte_carlo:
      return uniform_rule(
          generate(SampleKind::iid_uniform, n, cfg.d, in.gen.derive(to_string(method))), prov);
    case Method::baseline:
      if (cfg.d == 1) return uniform_rule(in.H, prov);
      return uniform_rule(
          generate(SampleKind::halton_owen, n, cfg.d, in.gen.derive(to_string(method))), prov);
    case Method::ks_h:
      return kquad(build_nystrom_svd(kernel, in.H, s, cfg.rtol), in.Y, cfg.enforce_inequality,
                   prov);
    case Method::ks_z:
      return kquad(build_nystrom_svd(need_z(), s), in.Y, cfg.enforce_inequality, prov);
    case Method::ks_yz:
      return kquad(build_mercer_empirical(need_z(), in.Y, s), in.Y, cfg.enforce_inequality, prov);
    case Method::ksmu_z:
      return kquad(build_mercer_mu(need_z(), s), in.Y, cfg.enforce_inequality, prov);
  }
  throw InvalidArgument("unhandled method");
}

inline bool method_less(Method a, Method b) {
  return static_cast<int>(a) < static_cast<int>(b);
}

/// Run every (method, n, trial) cell. Rows come back sorted by
/// (method, n, trial); `on_row` sees them in execution order.
inline std::vector<ResultRow> run_experiment(
    const ExperimentConfig& cfg, const std::function<void(const ResultRow&)>& on_row = {}) {
  validate(cfg);
  using clock = std::chrono::steady_clock;
  const Kernel kernel = cfg.kernel();
  const bool needs_z = std::any_of(cfg.methods.begin(), cfg.methods.end(), [](Method m) {
    return m == Method::ks_z || m == Method::ks_yz || m == Method::ksmu_z;
  });
  std::vector<ResultRow> rows;
  rows.reserve(cfg.methods.size() * cfg.n_list.size() * static_cast<std::size_t>(cfg.trials));
  for (int n : cfg.n_list) {
    for (int t = 0; t < cfg.trials; ++t) {
      const TrialInputs in = draw_trial_inputs(cfg, n, t);
      std::optional<LandmarkGram> z_gram;
      std::int64_t z_ms = 0;
      if (needs_z) {
        const auto t0 = clock::now();
        z_gram = prepare_landmarks(kernel, in.Z, cfg.rtol);
        z_ms = std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - t0).count();
      }
      for (Method m : cfg.methods) {
        const auto t0 = clock::now();
        const Quadrature q = run_method(cfg, m, n, in, z_gram ? &*z_gram : nullptr);
        const double wsq = wce_sq_exact(q, kernel);
        std::int64_t ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - t0).count();
        if (m == Method::ks_z || m == Method::ks_yz || m == Method::ksmu_z) ms += z_ms;
        ResultRow row{cfg.figure, m,  cfg.d, cfg.r, n, cfg.sample_size(n), t, in.gen.key(),
                      wsq,        cfg.record_runtime ? ms : 0};
        if (on_row) on_row(row);
        rows.push_back(std::move(row));
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.method != b.method) return method_less(a.method, b.method);
    if (a.n != b.n) return a.n < b.n;
    return a.trial < b.trial;
  });
  return rows;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

/// CSV with the fixed header. A `# rtol=` comment line precedes the header
/// when the rank tolerance differs from the default.
inline void write_csv(std::ostream& os, const std::vector<ResultRow>& rows,
                      const ExperimentConfig& cfg) {
  if (cfg.rtol != kDefaultRtol) os << "# rtol=" << format_double(cfg.rtol) << '\n';
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.figure << ',' << to_string(r.method) << ',' << r.d << ',' << r.r << ',' << r.n << ','
       << r.N << ',' << r.trial << ',' << r.seed << ',' << format_double(r.wce_sq) << ','
       << r.runtime_ms << '\n';
  }
}

}  // namespace nystrom
