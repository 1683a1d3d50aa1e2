#pragma once

// Target distributions: isotropic Gaussian mixtures and finite empirical
// point sets with uniform weights.

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"
#include "kacflow/error.hpp"
#include "kacflow/rng.hpp"

namespace kacflow {

using Point = std::vector<double>;

class TargetSpec {
 public:
  enum class Kind { gmm, empirical };

  static TargetSpec gmm(std::vector<double> weights, std::vector<Point> means,
                        std::vector<double> sigmas) {
    TargetSpec s;
    s.kind_ = Kind::gmm;
    s.weights_ = std::move(weights);
    s.points_ = std::move(means);
    s.sigmas_ = std::move(sigmas);
    s.validate();
    return s;
  }

  static TargetSpec empirical(std::vector<Point> points) {
    TargetSpec s;
    s.kind_ = Kind::empirical;
    s.points_ = std::move(points);
    if (!s.points_.empty()) {
      s.weights_.assign(s.points_.size(), 1.0 / static_cast<double>(s.points_.size()));
    }
    s.validate();
    return s;
  }

  // Equally weighted 9-mode mixture on the grid {-1, 0, 1}^2.
  static TargetSpec grid3x3(double sigma = 1e-4) {
    std::vector<Point> means;
    for (int i = -1; i <= 1; ++i) {
      for (int j = -1; j <= 1; ++j) means.push_back({static_cast<double>(i), static_cast<double>(j)});
    }
    return gmm(std::vector<double>(9, 1.0 / 9.0), std::move(means), std::vector<double>(9, sigma));
  }

  Kind kind() const { return kind_; }
  std::size_t dim() const { return points_.front().size(); }
  std::size_t size() const { return points_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  // Mixture means, or the empirical points.
  const std::vector<Point>& points() const { return points_; }
  const std::vector<double>& sigmas() const { return sigmas_; }

  // Index of a component drawn according to the weights.
  std::size_t draw_component(RngStream& rng) const {
    if (kind_ == Kind::empirical) return static_cast<std::size_t>(rng.below(points_.size()));
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < weights_.size(); ++k) {
      acc += weights_[k];
      if (u < acc) return k;
    }
    return weights_.size() - 1;
  }

  Point sample(RngStream& rng) const {
    const std::size_t k = draw_component(rng);
    Point x = points_[k];
    if (kind_ == Kind::gmm) {
      for (double& xi : x) xi += sigmas_[k] * rng.normal();
    }
    return x;
  }

  std::vector<Point> sample(std::size_t n, RngStream& rng) const {
    std::vector<Point> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample(rng));
    return out;
  }

  // Log density of the mixture, log-sum-exp stabilized. Mixtures only.
  double log_density(const Point& x) const {
    if (kind_ != Kind::gmm) throw UsageError("log_density is defined for Gaussian mixtures only");
    check_dim(x);
    const double d = static_cast<double>(dim());
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(points_.size());
    for (std::size_t k = 0; k < points_.size(); ++k) {
      double sq = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - points_[k][i];
        sq += diff * diff;
      }
      const double s2 = sigmas_[k] * sigmas_[k];
      terms[k] = std::log(weights_[k]) - 0.5 * d * std::log(2.0 * std::numbers::pi * s2) -
                 0.5 * sq / s2;
      best = std::max(best, terms[k]);
    }
    double acc = 0.0;
    for (double v : terms) acc += std::exp(v - best);
    return best + std::log(acc);
  }

  void check_dim(const Point& x) const {
    if (x.size() != dim()) {
      throw UsageError("point dimension " + std::to_string(x.size()) + " does not match target dimension " +
                       std::to_string(dim()));
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    if (kind_ == Kind::gmm) {
      j["kind"] = "gmm";
      j["weights"] = weights_;
      j["means"] = points_;
      j["sigmas"] = sigmas_;
    } else {
      j["kind"] = "empirical";
      j["points"] = points_;
    }
    return j;
  }

  // Strict parse: unknown keys are rejected.
  static TargetSpec from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw UsageError("target must be a JSON object");
    const std::string kind = j.value("kind", "");
    const auto allow = [&](std::initializer_list<const char*> keys) {
      for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : keys) ok = ok || key == k;
        if (!ok) throw UsageError("unknown key in target: '" + key + "'");
      }
    };
    try {
      if (kind == "gmm") {
        allow({"kind", "weights", "means", "sigmas"});
        return gmm(j.at("weights").get<std::vector<double>>(), j.at("means").get<std::vector<Point>>(),
                   j.at("sigmas").get<std::vector<double>>());
      }
      if (kind == "grid3x3") {
        allow({"kind", "sigma"});
        return grid3x3(j.value("sigma", 1e-4));
      }
      if (kind == "empirical") {
        allow({"kind", "points"});
        return empirical(j.at("points").get<std::vector<Point>>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("malformed target: ") + e.what());
    }
    throw UsageError("target kind must be 'gmm', 'grid3x3' or 'empirical'");
  }

 private:
  void validate() const {
    if (points_.empty()) throw UsageError("target needs at least one point");
    const std::size_t d = points_.front().size();
    if (d == 0) throw UsageError("target dimension must be positive");
    for (const auto& p : points_) {
      if (p.size() != d) throw UsageError("target points have inconsistent dimensions");
    }
    if (weights_.size() != points_.size()) throw UsageError("one weight per component required");
    const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) throw UsageError("target weights must sum to 1");
    for (double w : weights_) {
      if (!(w >= 0.0)) throw UsageError("target weights must be nonnegative");
    }
    if (kind_ == Kind::gmm) {
      if (sigmas_.size() != points_.size()) throw UsageError("one sigma per mixture component required");
      for (double s : sigmas_) {
        if (!(s > 0.0)) throw UsageError("mixture sigma must be positive");
      }
    }
  }

  Kind kind_ = Kind::empirical;
  std::vector<double> weights_;
  std::vector<Point> points_;
  std::vector<double> sigmas_;
};

}  // namespace kacflow
