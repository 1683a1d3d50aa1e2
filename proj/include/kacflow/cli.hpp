#pragma once

// Command-line front end. Exit codes: 0 success, 1 runtime failure (I/O,
// numerical), 2 invalid usage (bad flags, bad config, out-of-domain input).
//
// CSV output goes to --out (plus a manifest sidecar) or to stdout when --out
// is omitted.

#include <cmath>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kacflow/error.hpp"
#include "kacflow/experiment.hpp"
#include "kacflow/fields.hpp"
#include "kacflow/generate.hpp"
#include "kacflow/io.hpp"
#include "kacflow/kac1d.hpp"
#include "kacflow/metrics.hpp"
#include "kacflow/parallel.hpp"
#include "kacflow/process.hpp"
#include "kacflow/train.hpp"

namespace kacflow::cli {

namespace detail {

// Emits an artifact to a file with its manifest, or to stdout.
inline void emit(const std::string& out_path, const std::string& text, const std::string& command,
                 const nlohmann::json& config, std::uint64_t seed, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
    return;
  }
  write_artifact(out_path, text, make_manifest(command, config, seed));
}

inline std::vector<double> check_grid(const std::vector<double>& ts) {
  if (ts.empty()) throw UsageError("time grid must not be empty");
  return ts;
}

}  // namespace detail

struct PathsArgs {
  double a = 25.0, c = 5.0, horizon = 1.0, dt = 0.01, sigma = 1.0;
  long n = 8;
  std::uint64_t seed = 0;
  int dim = 1;
  std::string process = "kac", out;
};

inline void run_paths(const PathsArgs& s, std::ostream& out) {
  if (s.n < 1) throw UsageError("--n must be at least 1");
  if (s.dim != 1 && s.dim != 2) throw UsageError("--dim must be 1 or 2");
  if (!(s.dt > 0.0) || !(s.horizon > 0.0)) throw DomainError("--dt and --T must be positive");
  std::vector<std::string> header{"path_id", "t", "x"};
  if (s.dim == 2) header.push_back("y");
  CsvWriter csv(header);
  const RngStream base(s.seed, 0);
  const auto d = static_cast<std::size_t>(s.dim);
  const auto steps = static_cast<std::size_t>(std::ceil(s.horizon / s.dt - 1e-9));
  const auto grid_time = [&](std::size_t k) { return std::min(s.horizon, static_cast<double>(k) * s.dt); };
  for (long id = 0; id < s.n; ++id) {
    RngStream rng = base.split(static_cast<std::uint64_t>(id));
    std::vector<Point> rows;
    if (s.process == "kac") {
      const KacParams p(s.a, s.c);
      std::vector<KacPath> coords;
      for (std::size_t i = 0; i < d; ++i) coords.push_back(simulate_path(p, s.horizon, rng));
      for (std::size_t k = 0; k <= steps; ++k) {
        Point x(d);
        for (std::size_t i = 0; i < d; ++i) x[i] = coords[i].position(grid_time(k));
        rows.push_back(x);
      }
    } else if (s.process == "brownian") {
      rows = simulate_brownian_path(s.sigma, s.horizon, s.dt, d, rng);
    } else {
      throw UsageError("unknown --process '" + s.process + "' (expected kac or brownian)");
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::vector<double> values{grid_time(k)};
      values.insert(values.end(), rows[k].begin(), rows[k].end());
      csv.row(values, id);
    }
  }
  const nlohmann::json config{{"process", s.process}, {"a", s.a}, {"c", s.c}, {"T", s.horizon}, {"dt", s.dt},
                              {"n", s.n}, {"dim", s.dim}, {"sigma", s.sigma}};
  detail::emit(s.out, csv.str(), "paths", config, s.seed, out);
}

struct SampleArgs {
  double a = 25.0, c = 5.0, t = 1.0;
  long n = 1000;
  std::string method = "icdf", out;
  std::uint64_t seed = 0;
};

inline void run_sample(const SampleArgs& s, std::ostream& out) {
  if (s.n < 1) throw UsageError("--n must be at least 1");
  RngStream rng(s.seed, 0);
  const auto draws = sample_kac(KacParams(s.a, s.c), s.t, static_cast<std::size_t>(s.n), rng, parse_sampler(s.method));
  CsvWriter csv({"sample_id", "x"});
  for (std::size_t k = 0; k < draws.size(); ++k) csv.row({draws[k]}, static_cast<long>(k));
  const nlohmann::json config{{"a", s.a}, {"c", s.c}, {"t", s.t}, {"n", s.n}, {"method", s.method}};
  detail::emit(s.out, csv.str(), "sample", config, s.seed, out);
}

struct GridArgs {
  double a = 1.0, c = 1.0, t = 1.0, xmin = -1.0, xmax = 1.0;
  long points = 101;
  std::string out;
};

// Continuous density, flux and velocity on a uniform grid. The flux of the
// continuous part is reported as 0 outside the open support.
inline void run_grid(const std::string& command, const GridArgs& s, std::ostream& out) {
  if (s.points < 1) throw UsageError("--points must be at least 1");
  if (!(s.xmax >= s.xmin)) throw UsageError("--xmax must not be below --xmin");
  const KacParams p(s.a, s.c);
  CsvWriter csv({"x", "u_cont", "flux", "velocity"});
  for (long k = 0; k < s.points; ++k) {
    const double x = s.points == 1 ? s.xmin
                                   : s.xmin + (s.xmax - s.xmin) * static_cast<double>(k) / static_cast<double>(s.points - 1);
    const double j = std::abs(x) < p.c * s.t ? kac1d::flux(p, s.t, x).value : 0.0;
    csv.row({x, kac1d::density_cont(p, s.t, x), j, kac1d::velocity(p, s.t, x)});
  }
  const nlohmann::json config{{"a", s.a}, {"c", s.c}, {"t", s.t}, {"xmin", s.xmin}, {"xmax", s.xmax},
                              {"points", s.points}};
  detail::emit(s.out, csv.str(), command, config, 0, out);
}

struct TrainArgs {
  std::string config, out, loss;
  long iterations = -1;
  long long seed = -1;
};

inline void run_train(const TrainArgs& s, std::ostream& err) {
  nlohmann::json j = read_json(s.config);
  if (s.iterations >= 0) j["iterations"] = s.iterations;
  if (s.seed >= 0) j["seed"] = s.seed;
  const TrainConfig config = TrainConfig::from_json(j);
  TrainResult r = cfm_train(config, [&](long it, double loss) {
    err << "iteration " << it << " mean_loss " << format_double(loss) << '\n';
  });
  if (!s.loss.empty()) r.checkpoint.loss_history_path = std::filesystem::path(s.loss).filename().string();
  nlohmann::json manifest = make_manifest("train", config.to_json(), config.seed);
  manifest["note"] = kDeskScaleNote;
  if (!s.loss.empty()) write_artifact(s.loss, loss_csv(r.history), manifest);
  write_artifact(s.out, r.checkpoint.to_json().dump() + '\n', manifest);
  if (r.diverged) throw NumericalError("training diverged (last finite state saved): " + r.message);
}

struct GenerateArgs {
  std::string checkpoint, solver = "rk45", latent, out;
  long n = 1000;
  int steps = 100;
  double rtol = 1e-6, atol = 1e-6;
  bool exact = false;
  std::uint64_t seed = 0;
};

inline void run_generate(const GenerateArgs& s, std::ostream& out) {
  if (s.n < 1) throw UsageError("--n must be at least 1");
  const Checkpoint ck = Checkpoint::load(s.checkpoint);
  const TrainConfig tc = TrainConfig::from_json(ck.config);
  SolverConfig solver;
  solver.method = parse_solver(s.solver);
  solver.steps = s.steps;
  solver.rtol = s.rtol;
  solver.atol = s.atol;
  const LatentSpec latent{s.latent.empty() ? default_latent(tc.process) : parse_latent(s.latent), s.exact};
  const auto samples = generate(ck, static_cast<std::size_t>(s.n), latent, solver, s.seed, thread_count_from_env());
  const nlohmann::json config{{"checkpoint_config_hash", config_hash(ck.config)},
                              {"n", s.n},
                              {"solver", s.solver},
                              {"steps", s.steps},
                              {"rtol", s.rtol},
                              {"atol", s.atol},
                              {"latent", latent.kind == LatentKind::kac ? "kac" : "gaussian"},
                              {"exact", s.exact}};
  detail::emit(s.out, samples_csv(samples), "generate", config, s.seed, out);
}

struct ValidateArgs {
  std::string samples, target, out;
  double radius = 0.1;
};

inline void run_validate(const ValidateArgs& s, std::ostream& out) {
  const TargetSpec target = TargetSpec::from_json(read_json(s.target));
  const auto samples = read_samples_csv(s.samples);
  if (samples.empty()) throw UsageError("'" + s.samples + "' holds no samples");
  for (const auto& x : samples) target.check_dim(x);
  const nlohmann::json metrics = score_samples(samples, target, {s.radius});
  const nlohmann::json config{{"target", target.to_json()}, {"radius", s.radius}};
  detail::emit(s.out, metrics.dump(2) + '\n', "validate", config, 0, out);
}

struct ConvergenceArgs {
  double a = 1.0, c = 1.0, sigma0 = 0.1;
  std::vector<double> t_grid{1, 2, 4, 8, 16};
  std::string out;
};

inline void run_convergence(const ConvergenceArgs& s, std::ostream& out) {
  const auto ts = detail::check_grid(s.t_grid);
  const auto errors = kac_heat_l2_grid(KacParams(s.a, s.c), s.sigma0, ts, thread_count_from_env());
  CsvWriter csv({"t", "l2_error"});
  for (std::size_t i = 0; i < ts.size(); ++i) csv.row({ts[i], errors[i]});
  const nlohmann::json config{{"a", s.a}, {"c", s.c}, {"sigma0", s.sigma0}, {"t_grid", ts}};
  detail::emit(s.out, csv.str(), "convergence", config, 0, out);
}

struct VelonormArgs {
  std::string model = "kac", out;
  double a = 25.0, c = 5.0;
  std::vector<double> t_grid{0.1, 0.5, 0.9};
  long n = 10000;
  int dim = 2;
  std::uint64_t seed = 0;
};

// Monte Carlo ||v_t||^2 along the law each field transports, started at 0:
//   kac:       conditional Kac field, x ~ Kac law at t per coordinate
//   diffusion: reverse field -x / (2(1 - t)), x ~ N(0, (1 - t) I)
//   fm:        conditional field toward 0, x = t Z
inline MonteCarloEstimate velonorm_point(const VelonormArgs& s, double t, RngStream& rng) {
  const auto d = static_cast<std::size_t>(s.dim);
  const Point origin(d, 0.0);
  const auto gaussian = [d](double sd) {
    return [d, sd](RngStream& r) {
      Point x(d);
      for (double& xi : x) xi = sd * r.normal();
      return x;
    };
  };
  const auto n = static_cast<std::size_t>(s.n);
  if (s.model == "kac") {
    const KacParams p(s.a, s.c);
    const KacLaw1D law(p, t);
    return velocity_norm_mc([&](const Point& x) { return kac_cond_velocity(p, t, x, origin); },
                            [&](RngStream& r) {
                              Point x(d);
                              for (double& xi : x) xi = sample_kac_icdf(law, r);
                              return x;
                            },
                            n, rng);
  }
  if (s.model == "diffusion") {
    if (!(t >= 0.0 && t < 1.0)) throw DomainError("diffusion reverse field needs t in [0, 1)");
    return velocity_norm_mc([&](const Point& x) { return diffusion_reverse_velocity(t, x); },
                            gaussian(std::sqrt(1.0 - t)), n, rng);
  }
  if (s.model == "fm") {
    if (!(t > 0.0 && t <= 1.0)) throw DomainError("fm field needs t in (0, 1]");
    return velocity_norm_mc([&](const Point& x) { return fm_cond_velocity(t, x, origin); }, gaussian(t), n, rng);
  }
  throw UsageError("unknown --model '" + s.model + "' (expected kac, diffusion or fm)");
}

inline void run_velonorm(const VelonormArgs& s, std::ostream& out) {
  if (s.dim < 1) throw UsageError("--dim must be at least 1");
  const auto ts = detail::check_grid(s.t_grid);
  std::vector<MonteCarloEstimate> est(ts.size());
  parallel_for(ts.size(), thread_count_from_env(), [&](std::size_t i) {
    RngStream rng(s.seed, i);
    est[i] = velonorm_point(s, ts[i], rng);
  });
  CsvWriter csv({"t", "estimate", "stderr"});
  for (std::size_t i = 0; i < ts.size(); ++i) csv.row({ts[i], est[i].estimate, est[i].standard_error});
  const nlohmann::json config{{"model", s.model}, {"a", s.a}, {"c", s.c}, {"t_grid", ts}, {"n", s.n}, {"dim", s.dim}};
  detail::emit(s.out, csv.str(), "velonorm", config, s.seed, out);
}

struct ToyArgs {
  std::string config, output_dir;
};

inline void run_toy(const ToyArgs& s, std::ostream& out, std::ostream& err) {
  nlohmann::json j = read_json(s.config);
  if (!s.output_dir.empty()) j["output_dir"] = s.output_dir;
  const ExperimentConfig config = ExperimentConfig::from_json(j);
  const RunReport report = run_toy_experiment(
      config,
      [&](const std::string& run, long it, double loss) {
        err << run << " iteration " << it << " mean_loss " << format_double(loss) << '\n';
      },
      thread_count_from_env());
  out << report.metrics.dump(2) << '\n';
}

// Parses argv and runs one subcommand. Streams are injectable for tests.
inline int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                              std::ostream& err = std::cerr) {
  CLI::App app{"kacflow: Kac-process flow matching toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  PathsArgs paths;
  auto* cmd_paths = app.add_subcommand("paths", "Simulate Kac or Brownian paths (CSV path_id,t,x[,y])");
  cmd_paths->add_option("--process", paths.process, "kac or brownian")->capture_default_str();
  cmd_paths->add_option("--a", paths.a, "Kac damping a > 0")->capture_default_str();
  cmd_paths->add_option("--c", paths.c, "Kac speed c > 0")->capture_default_str();
  cmd_paths->add_option("--sigma", paths.sigma, "Brownian scale")->capture_default_str();
  cmd_paths->add_option("--T", paths.horizon, "time horizon")->capture_default_str();
  cmd_paths->add_option("--dt", paths.dt, "output grid spacing")->capture_default_str();
  cmd_paths->add_option("--n", paths.n, "number of paths")->capture_default_str();
  cmd_paths->add_option("--dim", paths.dim, "dimension, 1 or 2")->capture_default_str();
  cmd_paths->add_option("--seed", paths.seed, "random seed")->capture_default_str();
  cmd_paths->add_option("--out", paths.out, "output CSV (stdout if omitted)");

  SampleArgs sample;
  auto* cmd_sample = app.add_subcommand("sample", "Draw from the Kac law at time t (CSV sample_id,x)");
  cmd_sample->add_option("--a", sample.a, "Kac damping a > 0")->capture_default_str();
  cmd_sample->add_option("--c", sample.c, "Kac speed c > 0")->capture_default_str();
  cmd_sample->add_option("--t", sample.t, "time t > 0")->capture_default_str();
  cmd_sample->add_option("--n", sample.n, "number of draws")->capture_default_str();
  cmd_sample->add_option("--method", sample.method, "icdf (inverse CDF) or walk (random walk)")->capture_default_str();
  cmd_sample->add_option("--seed", sample.seed, "random seed")->capture_default_str();
  cmd_sample->add_option("--out", sample.out, "output CSV (stdout if omitted)");

  GridArgs density, velocity;
  const auto add_grid = [&](const char* name, const char* help, GridArgs& g) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--a", g.a, "Kac damping a > 0")->capture_default_str();
    cmd->add_option("--c", g.c, "Kac speed c > 0")->capture_default_str();
    cmd->add_option("--t", g.t, "time t > 0")->capture_default_str();
    cmd->add_option("--xmin", g.xmin, "grid start")->capture_default_str();
    cmd->add_option("--xmax", g.xmax, "grid end")->capture_default_str();
    cmd->add_option("--points", g.points, "number of grid points")->capture_default_str();
    cmd->add_option("--out", g.out, "output CSV (stdout if omitted)");
    return cmd;
  };
  auto* cmd_density = add_grid("density", "Kac density, flux and velocity on a grid (CSV x,u_cont,flux,velocity)", density);
  auto* cmd_velocity = add_grid("velocity", "Kac velocity field on a grid (CSV x,u_cont,flux,velocity)", velocity);

  TrainArgs train;
  auto* cmd_train = app.add_subcommand("train", std::string("Train a velocity network by flow matching; ") + kDeskScaleNote);
  cmd_train->add_option("--config", train.config, "training config JSON")->required();
  cmd_train->add_option("--out", train.out, "checkpoint JSON")->required();
  cmd_train->add_option("--loss", train.loss, "loss history CSV (iteration,mean_loss)");
  cmd_train->add_option("--iterations", train.iterations, "override config iterations");
  cmd_train->add_option("--seed", train.seed, "override config seed");

  GenerateArgs gen;
  auto* cmd_generate = app.add_subcommand("generate", "Generate samples from a checkpoint (CSV sample_id,x1..xd)");
  cmd_generate->add_option("--checkpoint", gen.checkpoint, "checkpoint JSON")->required();
  cmd_generate->add_option("--n", gen.n, "number of samples")->capture_default_str();
  cmd_generate->add_option("--solver", gen.solver, "euler, rk4 or rk45")->capture_default_str();
  cmd_generate->add_option("--steps", gen.steps, "steps for euler/rk4")->capture_default_str();
  cmd_generate->add_option("--rtol", gen.rtol, "relative tolerance for rk45")->capture_default_str();
  cmd_generate->add_option("--atol", gen.atol, "absolute tolerance for rk45")->capture_default_str();
  cmd_generate->add_option("--latent", gen.latent, "kac or gaussian (default: matches the trained process)");
  cmd_generate->add_flag("--exact", gen.exact, "include the data term in the latent (X0 + noise)");
  cmd_generate->add_option("--seed", gen.seed, "random seed")->capture_default_str();
  cmd_generate->add_option("--out", gen.out, "output CSV (stdout if omitted)");

  ValidateArgs val;
  auto* cmd_validate = app.add_subcommand("validate", "Score samples against a target (NLL, mode coverage)");
  cmd_validate->add_option("--samples", val.samples, "samples CSV")->required();
  cmd_validate->add_option("--target", val.target, "target JSON")->required();
  cmd_validate->add_option("--radius", val.radius, "mode coverage radius")->capture_default_str();
  cmd_validate->add_option("--out", val.out, "metrics JSON (stdout if omitted)");

  ConvergenceArgs conv;
  auto* cmd_conv = app.add_subcommand("convergence", "L2 distance between Kac- and heat-smoothed Gaussians (CSV t,l2_error)");
  cmd_conv->add_option("--a", conv.a, "Kac damping a > 0")->capture_default_str();
  cmd_conv->add_option("--c", conv.c, "Kac speed c > 0")->capture_default_str();
  cmd_conv->add_option("--sigma0", conv.sigma0, "initial Gaussian width")->capture_default_str();
  cmd_conv->add_option("--t-grid", conv.t_grid, "comma-separated times")->delimiter(',')->capture_default_str();
  cmd_conv->add_option("--out", conv.out, "output CSV (stdout if omitted)");

  VelonormArgs vn;
  auto* cmd_vn = app.add_subcommand("velonorm", "Monte Carlo velocity norm ||v_t||^2 (CSV t,estimate,stderr)");
  cmd_vn->add_option("--model", vn.model, "kac, diffusion or fm")->capture_default_str();
  cmd_vn->add_option("--a", vn.a, "Kac damping a > 0")->capture_default_str();
  cmd_vn->add_option("--c", vn.c, "Kac speed c > 0")->capture_default_str();
  cmd_vn->add_option("--t-grid", vn.t_grid, "comma-separated times")->delimiter(',')->capture_default_str();
  cmd_vn->add_option("--n", vn.n, "Monte Carlo samples per time (>= 1000)")->capture_default_str();
  cmd_vn->add_option("--dim", vn.dim, "dimension")->capture_default_str();
  cmd_vn->add_option("--seed", vn.seed, "random seed")->capture_default_str();
  cmd_vn->add_option("--out", vn.out, "output CSV (stdout if omitted)");

  ToyArgs toy;
  auto* cmd_toy = app.add_subcommand("toy", std::string("Run the 9-mode toy experiment; ") + kDeskScaleNote);
  cmd_toy->add_option("--config", toy.config, "experiment config JSON")->required();
  cmd_toy->add_option("--output-dir", toy.output_dir, "override output_dir from the config");

  app.footer("Environment: KACFLOW_THREADS caps worker threads without changing results.\n"
             "Exit codes: 0 success, 1 runtime failure, 2 invalid usage.");

  if (argc > 1 && argv[1][0] != '-' && app.get_subcommand_no_throw(argv[1]) == nullptr) {
    err << "error: unknown subcommand '" << argv[1] << "'\n" << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_paths->parsed()) run_paths(paths, out);
    else if (cmd_sample->parsed()) run_sample(sample, out);
    else if (cmd_density->parsed()) run_grid("density", density, out);
    else if (cmd_velocity->parsed()) run_grid("velocity", velocity, out);
    else if (cmd_train->parsed()) run_train(train, err);
    else if (cmd_generate->parsed()) run_generate(gen, out);
    else if (cmd_validate->parsed()) run_validate(val, out);
    else if (cmd_conv->parsed()) run_convergence(conv, out);
    else if (cmd_vn->parsed()) run_velonorm(vn, out);
    else if (cmd_toy->parsed()) run_toy(toy, out, err);
    return 0;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace kacflow::cli
