#pragma once

// Conditional flow matching: regress the network onto conditional velocities
// sampled along the forward process.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "kacflow/error.hpp"
#include "kacflow/fields.hpp"
#include "kacflow/nn.hpp"
#include "kacflow/process.hpp"
#include "kacflow/rng.hpp"
#include "kacflow/schedule.hpp"
#include "kacflow/target.hpp"

namespace kacflow {

// Forward process the network is trained on.
//   kac_ve:    X0 + K(t), t in (0, T)
//   kac_vp:    f(t) X0 + K_{g(t)}, t in (0, 1)
//   diffusion: X0 + sigma B_t, t in (eps, T)
//   fm:        (1 - t) X0 + t Z with Z ~ N(0, I), t in (0, 1)
enum class TrainProcess { kac_ve, kac_vp, diffusion, fm };

inline std::string to_string(TrainProcess p) {
  switch (p) {
    case TrainProcess::kac_ve: return "kac_ve";
    case TrainProcess::kac_vp: return "kac_vp";
    case TrainProcess::diffusion: return "diffusion";
    case TrainProcess::fm: return "fm";
  }
  return "kac_ve";
}

inline TrainProcess parse_train_process(const std::string& name) {
  if (name == "kac_ve") return TrainProcess::kac_ve;
  if (name == "kac_vp") return TrainProcess::kac_vp;
  if (name == "diffusion") return TrainProcess::diffusion;
  if (name == "fm") return TrainProcess::fm;
  throw UsageError("unknown process '" + name + "' (expected kac_ve, kac_vp, diffusion or fm)");
}

struct TrainConfig {
  TargetSpec target = TargetSpec::grid3x3();
  TrainProcess process = TrainProcess::kac_ve;
  KacParams params{25.0, 5.0};
  std::string schedule = "linear_t";
  ModelSpec model;
  long iterations = 20000;
  long batch_size = 256;
  double learning_rate = 5e-4;
  std::uint64_t seed = 0;
  double horizon = 1.0;
  long loss_log_every = 100;
  double diffusion_eps = kDiffusionEpsilon;
  double diffusion_sigma = 1.0;

  void validate() const {
    if (iterations < 1) throw UsageError("iterations must be at least 1");
    if (batch_size < 1) throw UsageError("batch_size must be at least 1");
    if (loss_log_every < 1) throw UsageError("loss_log_every must be at least 1");
    if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw UsageError("time horizon T must be positive");
    if ((process == TrainProcess::kac_vp || process == TrainProcess::fm) && horizon != 1.0) {
      throw UsageError("kac_vp and fm processes live on [0, 1]; set T = 1");
    }
    if (process == TrainProcess::diffusion && !(diffusion_eps >= 0.0 && diffusion_eps < horizon)) {
      throw UsageError("diffusion truncation must lie in [0, T)");
    }
    if (!(diffusion_sigma > 0.0)) throw UsageError("diffusion sigma must be positive");
    if (model.dim != target.dim()) throw UsageError("model dimension does not match target dimension");
    Schedule::from_name(schedule);
    model.validate();
  }

  KacProcessSpec kac_process() const {
    return process == TrainProcess::kac_vp ? KacProcessSpec::vp(params, Schedule::from_name(schedule))
                                           : KacProcessSpec::ve(params);
  }

  nlohmann::json to_json() const {
    return {{"target", target.to_json()},
            {"process", to_string(process)},
            {"a", params.a},
            {"c", params.c},
            {"schedule", schedule},
            {"model", model.to_json()},
            {"iterations", iterations},
            {"batch_size", batch_size},
            {"learning_rate", learning_rate},
            {"seed", seed},
            {"T", horizon},
            {"loss_log_every", loss_log_every},
            {"diffusion_eps", diffusion_eps},
            {"diffusion_sigma", diffusion_sigma}};
  }

  // Strict parse: unknown keys are rejected, missing keys keep defaults.
  static TrainConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw UsageError("training config must be a JSON object");
    TrainConfig c;
    double a = c.params.a, speed = c.params.c;
    bool model_given = false;
    try {
      for (const auto& [key, value] : j.items()) {
        if (key == "target") c.target = TargetSpec::from_json(value);
        else if (key == "process") c.process = parse_train_process(value.get<std::string>());
        else if (key == "a") a = value.get<double>();
        else if (key == "c") speed = value.get<double>();
        else if (key == "schedule") c.schedule = value.get<std::string>();
        else if (key == "model") { c.model = ModelSpec::from_json(value); model_given = true; }
        else if (key == "iterations") c.iterations = value.get<long>();
        else if (key == "batch_size") c.batch_size = value.get<long>();
        else if (key == "learning_rate") c.learning_rate = value.get<double>();
        else if (key == "seed") c.seed = value.get<std::uint64_t>();
        else if (key == "T") c.horizon = value.get<double>();
        else if (key == "loss_log_every") c.loss_log_every = value.get<long>();
        else if (key == "diffusion_eps") c.diffusion_eps = value.get<double>();
        else if (key == "diffusion_sigma") c.diffusion_sigma = value.get<double>();
        else throw UsageError("unknown key in training config: '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("malformed training config: ") + e.what());
    }
    try {
      c.params = KacParams(a, speed);
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
    if (!model_given || !j.at("model").contains("dim")) c.model.dim = c.target.dim();
    c.validate();
    return c;
  }
};

// One training batch: times, positions and conditional velocities.
struct CfmBatch {
  Eigen::VectorXd t;
  Eigen::MatrixXd x;
  Eigen::MatrixXd v;
};

inline CfmBatch draw_cfm_batch(const TrainConfig& config, RngStream& rng) {
  const auto d = static_cast<Eigen::Index>(config.target.dim());
  const auto B = static_cast<Eigen::Index>(config.batch_size);
  CfmBatch batch{Eigen::VectorXd(B), Eigen::MatrixXd(d, B), Eigen::MatrixXd(d, B)};
  const KacProcessSpec kac = config.kac_process();
  for (Eigen::Index k = 0; k < B; ++k) {
    const Point x0 = config.target.sample(rng);
    Point x(x0.size());
    Point v;
    double t = 0.0;
    switch (config.process) {
      case TrainProcess::kac_ve:
      case TrainProcess::kac_vp: {
        t = config.horizon * rng.uniform_open();
        const double f = kac.shrink(t);
        const double s = kac.noise_time(t);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = f * x0[i] + sample_kac_walk(config.params, s, rng);
        v = kac.cond_velocity(t, x, x0);
        break;
      }
      case TrainProcess::diffusion: {
        t = config.diffusion_eps + (config.horizon - config.diffusion_eps) * rng.uniform_open();
        const double sd = config.diffusion_sigma * std::sqrt(t);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = x0[i] + sd * rng.normal();
        v = diffusion_cond_velocity(t, x, x0, config.diffusion_sigma, config.diffusion_eps);
        break;
      }
      case TrainProcess::fm: {
        t = rng.uniform_open();
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = (1.0 - t) * x0[i] + t * rng.normal();
        v = fm_cond_velocity(t, x, x0);
        break;
      }
    }
    batch.t(k) = t;
    for (Eigen::Index i = 0; i < d; ++i) {
      batch.x(i, k) = x[static_cast<std::size_t>(i)];
      batch.v(i, k) = v[static_cast<std::size_t>(i)];
    }
  }
  return batch;
}

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossRecord> history;
  bool diverged = false;
  std::string message;
};

// Runs CFM training. The model is initialized from stream (seed, 1) and
// batches are drawn from stream (seed, 0), so the result depends only on the
// config. A non-finite loss or parameter stops training and returns the last
// finite state with `diverged` set.
inline TrainResult cfm_train(const TrainConfig& config, const std::function<void(long, double)>& progress = {}) {
  config.validate();
  RngStream init_rng(config.seed, 1);
  RngStream rng(config.seed, 0);
  TrainResult result;
  Checkpoint& ck = result.checkpoint;
  ck.model = VelocityModel(config.model, init_rng);
  ck.optimizer = AdamState::zeros_like(ck.model);
  ck.config = config.to_json();
  double window = 0.0;
  long in_window = 0;
  for (long it = 1; it <= config.iterations; ++it) {
    const CfmBatch batch = draw_cfm_batch(config, rng);
    Gradients g;
    try {
      g = grad(ck.model, batch.t, batch.x, batch.v);
    } catch (const NumericalError& e) {
      result.diverged = true;
      result.message = "iteration " + std::to_string(it) + ": " + e.what();
      break;
    }
    VelocityModel before = ck.model;
    AdamState opt_before = ck.optimizer;
    adam_step(ck.model, ck.optimizer, g, config.learning_rate);
    if (!ck.model.parameters_finite()) {
      ck.model = std::move(before);
      ck.optimizer = std::move(opt_before);
      result.diverged = true;
      result.message = "iteration " + std::to_string(it) + ": parameters became non-finite";
      break;
    }
    ck.iteration = it;
    window += g.loss;
    ++in_window;
    if (it % config.loss_log_every == 0 || it == config.iterations) {
      result.history.push_back({it, window / static_cast<double>(in_window)});
      if (progress) progress(it, result.history.back().mean_loss);
      window = 0.0;
      in_window = 0;
    }
  }
  return result;
}

}  // namespace kacflow
