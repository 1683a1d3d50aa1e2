#pragma once

// Sample generation: draw latents at the final time and integrate the learned
// field backward to the data end of the time interval.

#include <algorithm>
#include <string>
#include <vector>

#include "kacflow/error.hpp"
#include "kacflow/nn.hpp"
#include "kacflow/ode.hpp"
#include "kacflow/parallel.hpp"
#include "kacflow/process.hpp"
#include "kacflow/train.hpp"

namespace kacflow {

enum class LatentKind { kac, gaussian };

inline LatentKind parse_latent(const std::string& name) {
  if (name == "kac") return LatentKind::kac;
  if (name == "gaussian") return LatentKind::gaussian;
  throw UsageError("unknown latent '" + name + "' (expected kac or gaussian)");
}

inline LatentKind default_latent(TrainProcess p) {
  return p == TrainProcess::kac_ve || p == TrainProcess::kac_vp ? LatentKind::kac : LatentKind::gaussian;
}

// Latent options. With `exact` the latent is the forward process at the final
// time, data term included (X0 + K_T for kac_ve, X0 + sigma B_T for the
// diffusion baseline). Without it, the data term is dropped: K_T or
// N(0, sigma^2 T I). For kac_vp and fm the two coincide since f(1) = 0.
struct LatentSpec {
  LatentKind kind = LatentKind::kac;
  bool exact = false;
};

// Generation time window: [0, T] for kac_ve, [0, 1 - 1e-9] for kac_vp,
// [eps, T] for the diffusion baseline, [0, 1] for fm.
inline constexpr double kVpEndGap = 1e-9;

inline std::pair<double, double> generation_window(const TrainConfig& c) {
  switch (c.process) {
    case TrainProcess::kac_ve: return {0.0, c.horizon};
    case TrainProcess::kac_vp: return {0.0, 1.0 - kVpEndGap};
    case TrainProcess::diffusion: return {c.diffusion_eps, c.horizon};
    case TrainProcess::fm: return {0.0, 1.0};
  }
  return {0.0, c.horizon};
}

// Draws n latents, sample i from its own stream (seed, 2).split(i).
inline std::vector<Point> draw_latents(const TrainConfig& c, const LatentSpec& latent, std::size_t n,
                                       std::uint64_t seed) {
  const bool kac_process = c.process == TrainProcess::kac_ve || c.process == TrainProcess::kac_vp;
  if (kac_process != (latent.kind == LatentKind::kac)) {
    throw UsageError("latent '" + std::string(latent.kind == LatentKind::kac ? "kac" : "gaussian") +
                     "' does not match the trained process '" + to_string(c.process) + "'");
  }
  const std::size_t d = c.target.dim();
  const double T = generation_window(c).second;
  std::vector<Point> out(n, Point(d, 0.0));
  const RngStream base(seed, 2);
  if (kac_process) {
    const KacProcessSpec spec = c.kac_process();
    const KacLaw1D law(c.params, spec.noise_time(T));
    const double f = spec.shrink(T);
    for (std::size_t k = 0; k < n; ++k) {
      RngStream rng = base.split(k);
      if (latent.exact) {
        const Point x0 = c.target.sample(rng);
        for (std::size_t i = 0; i < d; ++i) out[k][i] = f * x0[i];
      }
      for (double& v : out[k]) v += sample_kac_icdf(law, rng);
    }
    return out;
  }
  const double sd = c.process == TrainProcess::diffusion ? c.diffusion_sigma * std::sqrt(T) : T;
  const double f = c.process == TrainProcess::diffusion ? 1.0 : 1.0 - T;
  for (std::size_t k = 0; k < n; ++k) {
    RngStream rng = base.split(k);
    if (latent.exact) {
      const Point x0 = c.target.sample(rng);
      for (std::size_t i = 0; i < d; ++i) out[k][i] = f * x0[i];
    }
    for (double& v : out[k]) v += sd * rng.normal();
  }
  return out;
}

// Integrates each latent backward through `field` over the generation window.
inline std::vector<Point> transport_latents(const VectorField& field, const std::vector<Point>& latents,
                                            SolverConfig solver, unsigned threads) {
  solver.direction = Direction::backward;
  solver.record = false;
  std::vector<Point> out(latents.size());
  parallel_for(latents.size(), threads,
               [&](std::size_t k) { out[k] = integrate_to_end(field, latents[k], solver); });
  return out;
}

// Generates n samples from a trained checkpoint.
inline std::vector<Point> generate(const Checkpoint& checkpoint, std::size_t n, const LatentSpec& latent,
                                   SolverConfig solver, std::uint64_t seed, unsigned threads = 1) {
  if (n < 1) throw UsageError("sample count must be at least 1");
  const TrainConfig config = TrainConfig::from_json(checkpoint.config);
  const auto [t0, t1] = generation_window(config);
  solver.t_start = t0;
  solver.t_end = t1;
  const auto latents = draw_latents(config, latent, n, seed);
  const VelocityModel& model = checkpoint.model;
  model.verify_finite();
  const VectorField field = [&model](double t, const Point& x) { return model.forward(t, x); };
  return transport_latents(field, latents, solver, threads);
}

}  // namespace kacflow
