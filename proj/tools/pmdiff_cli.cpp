// pmdiff command-line tool.
//
// Exit codes: 0 success, 1 configuration error, 2 I/O or parse error,
// 3 numeric blowup or solver failure, 4 a property check reported FAIL.
// Outputs are written only after the computation succeeded.

#include <CLI11.hpp>

#if __has_include(<nlohmann/json.hpp>)
#include <nlohmann/json.hpp>
#else
#include <json.hpp>
#endif

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pmdiff/pmdiff.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum ExitCode : int { kOk = 0, kConfig = 1, kIo = 2, kNumeric = 3, kCheckFailed = 4 };

struct ModelOptions {
  std::string diffusivity = "rational";
  double lambda = 1.0;
};

struct SchemeOptions {
  std::string scheme = "explicit";
  double tau = 0.2;
  double sigma = 1.0;
  bool allow_unstable = false;
  double solver_tol = 1e-10;
  std::size_t solver_maxit = 0;
};

void add_model_options(CLI::App& cmd, ModelOptions& m) {
  cmd.add_option("--diffusivity", m.diffusivity, "rational|exponential")->capture_default_str();
  cmd.add_option("--lambda", m.lambda, "contrast parameter, in intensity units of the loaded data")
      ->capture_default_str();
}

void add_scheme_options(CLI::App& cmd, SchemeOptions& s, bool with_scheme) {
  if (with_scheme) {
    cmd.add_option("--scheme", s.scheme, "explicit|semi-implicit|pm-original|regularized|gaussian")
        ->capture_default_str();
  }
  cmd.add_option("--tau", s.tau, "timestep")->capture_default_str();
  cmd.add_option("--sigma", s.sigma, "pre-smoothing width in pixels (regularized)")->capture_default_str();
  cmd.add_flag("--allow-unstable", s.allow_unstable, "skip the explicit stability bound check");
  cmd.add_option("--solver-tol", s.solver_tol, "semi-implicit CG relative residual")->capture_default_str();
  cmd.add_option("--solver-maxit", s.solver_maxit, "semi-implicit CG iteration cap (0 = 10*M*N)")
      ->capture_default_str();
}

pmdiff::Diffusivity make_model(const ModelOptions& m) {
  return pmdiff::Diffusivity(pmdiff::parse_diffusivity_kind(m.diffusivity), m.lambda);
}

pmdiff::SchemeConfig make_config(const SchemeOptions& s, pmdiff::SchemeKind kind) {
  pmdiff::SchemeConfig c;
  c.kind = kind;
  c.tau = s.tau;
  c.sigma = s.sigma;
  c.solver_tolerance = s.solver_tol;
  c.solver_max_iterations = s.solver_maxit;
  c.enforce_stability_bound = !s.allow_unstable;
  c.validate();
  return c;
}

json model_json(const pmdiff::Diffusivity& m) {
  return {{"diffusivity", std::string(to_string(m.kind()))}, {"lambda", m.lambda()}};
}

json config_json(const pmdiff::SchemeConfig& c, std::size_t pixels) {
  return {{"scheme", std::string(to_string(c.kind))},
          {"tau", c.tau},
          {"sigma", c.sigma},
          {"solver_tolerance", c.solver_tolerance},
          {"solver_max_iterations", c.solver_max_iterations ? c.solver_max_iterations : 10 * pixels},
          {"enforce_stability_bound", c.enforce_stability_bound}};
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json manifest(const std::string& command, const std::vector<std::string>& argv) {
  return {{"tool", "pmdiff"},
          {"version", pmdiff::kVersion},
          {"command", command},
          {"argv", argv},
          {"timestamp", utc_timestamp()}};
}

/// Files queued during a command and written only once everything succeeded.
class PendingOutputs {
public:
  void add(fs::path path, std::string bytes) { files_.emplace_back(std::move(path), std::move(bytes)); }
  void add_field(const fs::path& path, const pmdiff::ScalarField& f) {
    add(path, path.extension() == ".csv" ? pmdiff::io::write_csv_signal(f)
                                         : pmdiff::io::write_pgm(f, pmdiff::io::PgmFormat::Binary));
  }
  void flush() const {
    for (const auto& [path, bytes] : files_) {
      if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw pmdiff::IoError("cannot create directory '" + path.parent_path().string() + "'");
      }
      pmdiff::io::write_file(path, bytes);
    }
  }

private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

std::string padded(std::size_t n, std::size_t width) {
  std::string s = std::to_string(n);
  return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

std::string field_extension(const fs::path& input) { return input.extension() == ".csv" ? ".csv" : ".pgm"; }

// ---------------------------------------------------------------------------

struct RunArgs {
  ModelOptions model;
  SchemeOptions scheme;
  std::string input;
  std::string reference;
  std::size_t iters = 100;
  std::vector<std::size_t> snapshots;
  std::string out_dir = ".";
  std::string log;
  std::string manifest;
};

int cmd_run(const RunArgs& a, const std::vector<std::string>& argv) {
  const auto model = make_model(a.model);
  const auto config = make_config(a.scheme, pmdiff::parse_scheme_kind(a.scheme.scheme));
  std::set<std::size_t> wanted(a.snapshots.begin(), a.snapshots.end());
  if (!wanted.empty() && *wanted.rbegin() > a.iters) {
    throw pmdiff::ConfigError("snapshot " + std::to_string(*wanted.rbegin()) + " is beyond --iters " +
                              std::to_string(a.iters));
  }

  const auto u0 = pmdiff::io::load_field(a.input);
  std::optional<pmdiff::ScalarField> reference;
  if (!a.reference.empty()) {
    reference = pmdiff::io::load_field(a.reference);
    if (reference->extent() != u0.extent()) throw pmdiff::DimensionError("reference and input differ in size");
  }
  pmdiff::check_timestep(u0, config);

  const fs::path out_dir = a.out_dir;
  const fs::path log_path = a.log.empty() ? out_dir / "metrics.csv" : fs::path(a.log);
  const fs::path manifest_path = a.manifest.empty() ? out_dir / "manifest.json" : fs::path(a.manifest);
  const auto ext = field_extension(a.input);
  const std::size_t width = std::to_string(a.iters).size();

  PendingOutputs outputs;
  json snapshot_paths = json::array();
  auto snapshot = [&](std::size_t n, const pmdiff::ScalarField& u) {
    if (!wanted.count(n)) return;
    const auto path = out_dir / ("out_" + padded(n, width) + ext);
    outputs.add_field(path, u);
    snapshot_paths.push_back(path.string());
  };
  snapshot(0, u0);

  pmdiff::RunOptions options;
  if (reference) options.reference = &*reference;
  const auto result = pmdiff::run(u0, model, config, a.iters, snapshot, options);
  outputs.add(log_path, pmdiff::io::write_metrics_csv(result.log));

  auto m = manifest("run", argv);
  m["config"] = model_json(model);
  m["config"].update(config_json(config, u0.size()));
  m["config"]["iters"] = a.iters;
  m["config"]["snapshots"] = std::vector<std::size_t>(wanted.begin(), wanted.end());
  m["seed"] = nullptr;
  m["inputs"] = {{"input", a.input}, {"reference", a.reference.empty() ? json(nullptr) : json(a.reference)}};
  m["outputs"] = {{"out_dir", out_dir.string()}, {"log", log_path.string()}, {"snapshots", snapshot_paths}};
  outputs.add(manifest_path, m.dump(2) + "\n");
  outputs.flush();

  const auto stats = pmdiff::field_stats(result.field);
  std::printf("%s: %zu iterations, mean=%.12g variance=%.12g min=%.12g max=%.12g\n",
              std::string(to_string(config.kind)).c_str(), a.iters, stats.mean, stats.variance, stats.min, stats.max);
  return kOk;
}

// ---------------------------------------------------------------------------

struct NoiseArgs {
  std::string input;
  std::string output;
  std::string manifest;
  double snr = 2.0;
  std::uint64_t seed = 0;
};

int cmd_noise(const NoiseArgs& a, const std::vector<std::string>& argv) {
  const auto clean = pmdiff::io::load_field(a.input);
  const auto noisy = pmdiff::add_gaussian_noise(clean, a.snr, a.seed);
  const fs::path out = a.output;
  const fs::path manifest_path = a.manifest.empty() ? fs::path(out.string() + ".manifest.json") : fs::path(a.manifest);

  PendingOutputs outputs;
  outputs.add_field(out, noisy);
  auto m = manifest("noise", argv);
  m["config"] = {{"snr", a.snr}, {"noise_sd", pmdiff::mean(clean) / a.snr}};
  m["seed"] = a.seed;
  m["inputs"] = {{"input", a.input}};
  m["outputs"] = {{"output", out.string()}};
  outputs.add(manifest_path, m.dump(2) + "\n");
  outputs.flush();
  std::printf("wrote %s (snr=%g, seed=%llu)\n", out.string().c_str(), a.snr,
              static_cast<unsigned long long>(a.seed));
  return kOk;
}

// ---------------------------------------------------------------------------

struct CheckArgs {
  ModelOptions model;
  std::string input;
  std::string family = "central";
  std::uint64_t seed = 1;
  bool kv = false;
};

int cmd_check_operator(const CheckArgs& a) {
  const auto model = make_model(a.model);
  pmdiff::OperatorFamily family;
  if (a.family == "central") {
    family = pmdiff::OperatorFamily::CentralDifference;
  } else if (a.family == "half-point") {
    family = pmdiff::OperatorFamily::HalfPoint;
  } else {
    throw pmdiff::ConfigError("unknown operator family '" + a.family + "' (expected central|half-point)");
  }
  const auto u = pmdiff::io::load_field(a.input);
  const auto op = family == pmdiff::OperatorFamily::HalfPoint ? pmdiff::assemble_half_point(u, model)
                                                              : pmdiff::assemble(u, model);
  auto report = pmdiff::verify_operator_properties(op);
  report.p1 = pmdiff::check_continuity(u, model, family, a.seed);
  std::cout << report.to_text();
  if (a.kv) std::cout << report.to_key_values();
  return report.all_pass() ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------

struct ExperimentArgs {
  ModelOptions model;
  SchemeOptions scheme;
  std::string clean;
  std::string noisy;
  std::optional<double> snr;
  std::uint64_t seed = 0;
  std::vector<std::string> schemes{"regularized", "explicit", "pm-original"};
  std::size_t max_iters = 20000;
  std::size_t patience = 10;
  std::string out_dir;
  std::string manifest;
};

int cmd_denoise_experiment(const ExperimentArgs& a, const std::vector<std::string>& argv) {
  const auto model = make_model(a.model);
  if (a.noisy.empty() == !a.snr) throw pmdiff::ConfigError("give exactly one of --noisy or --snr");
  std::vector<pmdiff::ExperimentScheme> schemes;
  for (const auto& name : a.schemes) {
    schemes.push_back({name, model, make_config(a.scheme, pmdiff::parse_scheme_kind(name))});
  }
  if (schemes.empty()) throw pmdiff::ConfigError("--schemes must name at least one scheme");

  const auto clean = pmdiff::io::load_field(a.clean);
  const auto noisy = a.snr ? pmdiff::add_gaussian_noise(clean, *a.snr, a.seed) : pmdiff::io::load_field(a.noisy);
  if (noisy.extent() != clean.extent()) throw pmdiff::DimensionError("clean and noisy images differ in size");
  for (const auto& s : schemes) pmdiff::check_timestep(clean, s.config);

  const auto results = pmdiff::denoise_experiment(clean, noisy, schemes, a.max_iters, a.patience);

  PendingOutputs outputs;
  json summary = json::array();
  if (!a.out_dir.empty()) {
    const fs::path dir = a.out_dir;
    const auto ext = field_extension(a.clean);
    std::string curves = "iter";
    std::size_t longest = 0;
    for (const auto& r : results) {
      curves += "," + r.name;
      longest = std::max(longest, r.errors.size());
    }
    curves += "\n";
    for (std::size_t n = 0; n < longest; ++n) {
      curves += std::to_string(n);
      for (const auto& r : results) {
        curves += ",";
        if (n < r.relative_errors.size()) curves += pmdiff::io::format_double(r.relative_errors[n]);
      }
      curves += "\n";
    }
    outputs.add(dir / "curves.csv", curves);
    if (a.snr) outputs.add_field(dir / ("noisy" + ext), noisy);
    for (const auto& r : results) outputs.add_field(dir / ("stop_" + r.name + ext), r.field_at_stop);

    auto m = manifest("denoise-experiment", argv);
    m["config"] = model_json(model);
    m["config"]["schemes"] = json::array();
    for (const auto& s : schemes) m["config"]["schemes"].push_back(config_json(s.config, clean.size()));
    m["config"]["max_iters"] = a.max_iters;
    m["config"]["patience"] = a.patience;
    m["config"]["snr"] = a.snr ? json(*a.snr) : json(nullptr);
    m["seed"] = a.snr ? json(a.seed) : json(nullptr);
    m["inputs"] = {{"clean", a.clean}, {"noisy", a.noisy.empty() ? json(nullptr) : json(a.noisy)}};
    m["outputs"] = {{"out_dir", dir.string()}, {"curves", (dir / "curves.csv").string()}};
    outputs.add(a.manifest.empty() ? dir / "manifest.json" : fs::path(a.manifest), m.dump(2) + "\n");
  }
  outputs.flush();

  for (const auto& r : results) {
    std::printf("%s: stop=%zu min_error=%.12g relative=%.12g initial_error=%.12g confirmed=%s\n", r.name.c_str(),
                r.stop_iteration, r.min_error, r.relative_errors[r.stop_iteration], r.errors.front(),
                r.confirmed ? "yes" : "no");
  }
  return kOk;
}

int fail(int code, const std::string& what) {
  std::fflush(stdout);
  std::fprintf(stderr, "pmdiff: error: %s\n", what.c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Perona-Malik nonlinear diffusion toolkit", "pmdiff"};
  app.set_version_flag("--version", pmdiff::kVersion);
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "evolve an image or signal and write snapshots, metrics and a manifest");
  add_model_options(*run_cmd, run.model);
  add_scheme_options(*run_cmd, run.scheme, true);
  run_cmd->add_option("--input", run.input, "input .pgm image or .csv signal")->required();
  run_cmd->add_option("--reference", run.reference, "clean field; adds l1_ref to the metrics");
  run_cmd->add_option("--iters", run.iters, "number of steps")->capture_default_str();
  run_cmd->add_option("--snapshots", run.snapshots, "iterations to save, e.g. 10,100,1000")->delimiter(',');
  run_cmd->add_option("--out-dir", run.out_dir, "directory for snapshots")->capture_default_str();
  run_cmd->add_option("--log", run.log, "metrics CSV path (default <out-dir>/metrics.csv)");
  run_cmd->add_option("--manifest", run.manifest, "manifest path (default <out-dir>/manifest.json)");

  NoiseArgs noise;
  auto* noise_cmd = app.add_subcommand("noise", "add zero-mean Gaussian noise with sd = mean/snr");
  noise_cmd->add_option("--input", noise.input, "clean .pgm or .csv")->required();
  noise_cmd->add_option("--output", noise.output, "noisy output path")->required();
  noise_cmd->add_option("--snr", noise.snr, "mean / noise standard deviation")->capture_default_str();
  noise_cmd->add_option("--seed", noise.seed, "generator seed")->capture_default_str();
  noise_cmd->add_option("--manifest", noise.manifest, "manifest path (default <output>.manifest.json)");

  CheckArgs check;
  auto* check_cmd = app.add_subcommand("check-operator", "report properties P1-P5 of the assembled operator A(u)");
  add_model_options(*check_cmd, check.model);
  check_cmd->add_option("--input", check.input, "input .pgm or .csv")->required();
  check_cmd->add_option("--family", check.family, "central|half-point")->capture_default_str();
  check_cmd->add_option("--seed", check.seed, "perturbation seed for the continuity probe")->capture_default_str();
  check_cmd->add_flag("--kv", check.kv, "also print key=value lines");

  ExperimentArgs exp;
  auto* exp_cmd = app.add_subcommand("denoise-experiment", "stop each scheme at the first minimum of the L1 error");
  add_model_options(*exp_cmd, exp.model);
  add_scheme_options(*exp_cmd, exp.scheme, false);
  exp_cmd->add_option("--clean", exp.clean, "clean reference image")->required();
  exp_cmd->add_option("--noisy", exp.noisy, "noisy image");
  exp_cmd->add_option("--snr", exp.snr, "generate the noisy image at this SNR instead");
  exp_cmd->add_option("--seed", exp.seed, "noise seed with --snr")->capture_default_str();
  exp_cmd->add_option("--schemes", exp.schemes, "comma-separated scheme list")->delimiter(',')->capture_default_str();
  exp_cmd->add_option("--max-iters", exp.max_iters, "iteration cap per scheme")->capture_default_str();
  exp_cmd->add_option("--patience", exp.patience, "non-improving steps that confirm a minimum")->capture_default_str();
  exp_cmd->add_option("--out-dir", exp.out_dir, "write curves.csv, stopped fields and a manifest here");
  exp_cmd->add_option("--manifest", exp.manifest, "manifest path (default <out-dir>/manifest.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run, args);
    if (*noise_cmd) return cmd_noise(noise, args);
    if (*check_cmd) return cmd_check_operator(check);
    return cmd_denoise_experiment(exp, args);
  } catch (const pmdiff::ConfigError& e) {
    return fail(kConfig, e.what());
  } catch (const pmdiff::DomainError& e) {
    return fail(kConfig, e.what());
  } catch (const pmdiff::IoError& e) {
    return fail(kIo, e.what());
  } catch (const pmdiff::ParseError& e) {
    return fail(kIo, e.what());
  } catch (const pmdiff::DimensionError& e) {
    return fail(kIo, e.what());
  } catch (const pmdiff::NumericBlowupError& e) {
    return fail(kNumeric, e.what());
  } catch (const pmdiff::SolverError& e) {
    return fail(kNumeric, e.what());
  } catch (const std::exception& e) {
    return fail(kConfig, e.what());
  }
}
