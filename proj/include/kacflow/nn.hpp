#pragma once

// A small fully-connected velocity network v(t, x) with exact backpropagation
// of the mean squared error, an Adam optimizer and JSON checkpoints.
//
// Batches are stored column-wise: X is d x B, one sample per column. The time
// input is either the raw scalar t or the sinusoidal features
// sin(2^j t), cos(2^j t) for j < k, concatenated in front of x.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "kacflow/error.hpp"
#include "kacflow/rng.hpp"
#include "kacflow/target.hpp"

namespace kacflow {

enum class Activation { relu, silu };
enum class TimeEmbedding { raw, sinusoidal };

struct ModelSpec {
  std::size_t dim = 2;
  std::vector<int> hidden{128, 128, 128};
  Activation activation = Activation::relu;
  TimeEmbedding time_embedding = TimeEmbedding::raw;
  int frequencies = 8;

  std::size_t time_features() const {
    return time_embedding == TimeEmbedding::raw ? 1 : 2 * static_cast<std::size_t>(frequencies);
  }
  std::size_t input_dim() const { return dim + time_features(); }

  void validate() const {
    if (dim < 1) throw UsageError("model dimension must be at least 1");
    for (int h : hidden) {
      if (h < 1) throw UsageError("hidden widths must be positive");
    }
    if (time_embedding == TimeEmbedding::sinusoidal && (frequencies < 1 || frequencies > 30)) {
      throw UsageError("sinusoidal embedding needs 1..30 frequencies");
    }
  }

  nlohmann::json to_json() const {
    return {{"dim", dim},
            {"hidden", hidden},
            {"activation", activation == Activation::relu ? "relu" : "silu"},
            {"time_embedding", time_embedding == TimeEmbedding::raw ? "raw" : "sinusoidal"},
            {"frequencies", frequencies}};
  }

  static ModelSpec from_json(const nlohmann::json& j) {
    ModelSpec s;
    for (const auto& [key, value] : j.items()) {
      if (key == "dim") {
        s.dim = value.get<std::size_t>();
      } else if (key == "hidden") {
        s.hidden = value.get<std::vector<int>>();
      } else if (key == "activation") {
        const auto a = value.get<std::string>();
        if (a != "relu" && a != "silu") throw UsageError("activation must be relu or silu");
        s.activation = a == "relu" ? Activation::relu : Activation::silu;
      } else if (key == "time_embedding") {
        const auto e = value.get<std::string>();
        if (e != "raw" && e != "sinusoidal") throw UsageError("time_embedding must be raw or sinusoidal");
        s.time_embedding = e == "raw" ? TimeEmbedding::raw : TimeEmbedding::sinusoidal;
      } else if (key == "frequencies") {
        s.frequencies = value.get<int>();
      } else {
        throw UsageError("unknown key in model: '" + key + "'");
      }
    }
    s.validate();
    return s;
  }
};

struct Layer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;  // out
};

class VelocityModel {
 public:
  VelocityModel() = default;

  // Weights and biases uniform on +-1/sqrt(fan_in).
  VelocityModel(ModelSpec spec, RngStream& rng) : spec_(std::move(spec)) {
    spec_.validate();
    std::vector<std::size_t> dims{spec_.input_dim()};
    for (int h : spec_.hidden) dims.push_back(static_cast<std::size_t>(h));
    dims.push_back(spec_.dim);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      const auto in = static_cast<Eigen::Index>(dims[l]);
      const auto out = static_cast<Eigen::Index>(dims[l + 1]);
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      Layer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
      for (Eigen::Index r = 0; r < out; ++r) {
        for (Eigen::Index c = 0; c < in; ++c) layer.W(r, c) = rng.uniform(-bound, bound);
      }
      for (Eigen::Index r = 0; r < out; ++r) layer.b(r) = rng.uniform(-bound, bound);
      layers_.push_back(std::move(layer));
    }
  }

  VelocityModel(ModelSpec spec, std::vector<Layer> layers) : spec_(std::move(spec)), layers_(std::move(layers)) {
    spec_.validate();
    check_shapes();
  }

  const ModelSpec& spec() const { return spec_; }
  std::size_t dim() const { return spec_.dim; }
  const std::vector<Layer>& layers() const { return layers_; }
  // Mutable access invalidates the cached finiteness check.
  std::vector<Layer>& mutable_layers() {
    finite_known_ = false;
    return layers_;
  }

  void zero_output_layer() {
    auto& last = mutable_layers().back();
    last.W.setZero();
    last.b.setZero();
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.W.size() + l.b.size());
    return n;
  }

  // Checks parameters once and caches the result. Call before sharing the
  // model across threads; forward() then only reads the cached flag.
  void verify_finite() const { ensure_finite(); }

  bool parameters_finite() const {
    for (const auto& l : layers_) {
      if (!l.W.allFinite() || !l.b.allFinite()) return false;
    }
    return true;
  }

  // Network input: time features stacked on top of x.
  Eigen::MatrixXd embed(const Eigen::VectorXd& t, const Eigen::MatrixXd& X) const {
    if (X.rows() != static_cast<Eigen::Index>(spec_.dim) || t.size() != X.cols()) {
      throw UsageError("batch shape does not match model dimension");
    }
    const auto tf = static_cast<Eigen::Index>(spec_.time_features());
    Eigen::MatrixXd in(tf + X.rows(), X.cols());
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
      if (spec_.time_embedding == TimeEmbedding::raw) {
        in(0, k) = t(k);
      } else {
        double w = 1.0;
        for (int j = 0; j < spec_.frequencies; ++j, w *= 2.0) {
          in(2 * j, k) = std::sin(w * t(k));
          in(2 * j + 1, k) = std::cos(w * t(k));
        }
      }
    }
    in.bottomRows(X.rows()) = X;
    return in;
  }

  Eigen::MatrixXd forward(const Eigen::VectorXd& t, const Eigen::MatrixXd& X) const {
    ensure_finite();
    Eigen::MatrixXd h = embed(t, X);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Eigen::MatrixXd z = layers_[l].W * h;
      z.colwise() += layers_[l].b;
      if (l + 1 < layers_.size()) {
        h = activate(z);
      } else {
        h = std::move(z);
      }
    }
    return h;
  }

  Point forward(double t, const Point& x) const {
    if (x.size() != spec_.dim) throw UsageError("input dimension does not match model dimension");
    Eigen::VectorXd tv(1);
    tv(0) = t;
    const Eigen::MatrixXd out =
        forward(tv, Eigen::Map<const Eigen::MatrixXd>(x.data(), static_cast<Eigen::Index>(x.size()), 1));
    return Point(out.data(), out.data() + out.size());
  }

  Eigen::MatrixXd activate(const Eigen::MatrixXd& z) const {
    if (spec_.activation == Activation::relu) return z.cwiseMax(0.0);
    return z.unaryExpr([](double v) { return v / (1.0 + std::exp(-v)); });
  }

  // Derivative of the activation evaluated at the pre-activation z.
  Eigen::MatrixXd activate_derivative(const Eigen::MatrixXd& z) const {
    if (spec_.activation == Activation::relu) {
      return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    }
    return z.unaryExpr([](double v) {
      const double s = 1.0 / (1.0 + std::exp(-v));
      return s * (1.0 + v * (1.0 - s));
    });
  }

  nlohmann::json layers_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& l : layers_) arr.push_back(layer_to_json(l));
    return arr;
  }

  static nlohmann::json layer_to_json(const Layer& l) {
    std::vector<double> w(static_cast<std::size_t>(l.W.size()));
    for (Eigen::Index r = 0; r < l.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) w[static_cast<std::size_t>(r * l.W.cols() + c)] = l.W(r, c);
    }
    return {{"rows", l.W.rows()},
            {"cols", l.W.cols()},
            {"W", w},
            {"b", std::vector<double>(l.b.data(), l.b.data() + l.b.size())}};
  }

  static Layer layer_from_json(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto w = j.at("W").get<std::vector<double>>();
    const auto b = j.at("b").get<std::vector<double>>();
    if (rows < 1 || cols < 1 || static_cast<Eigen::Index>(w.size()) != rows * cols ||
        static_cast<Eigen::Index>(b.size()) != rows) {
      throw UsageError("layer arrays do not match their declared shape");
    }
    Layer l{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) l.W(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      l.b(r) = b[static_cast<std::size_t>(r)];
    }
    return l;
  }

 private:
  void ensure_finite() const {
    if (finite_known_) return;
    if (!parameters_finite()) throw NumericalError("poisoned model: non-finite parameters");
    finite_known_ = true;
  }

  void check_shapes() const {
    auto in = static_cast<Eigen::Index>(spec_.input_dim());
    if (layers_.size() != spec_.hidden.size() + 1) throw UsageError("layer count does not match model spec");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto out = l + 1 < layers_.size() ? static_cast<Eigen::Index>(spec_.hidden[l])
                                              : static_cast<Eigen::Index>(spec_.dim);
      if (layers_[l].W.rows() != out || layers_[l].W.cols() != in || layers_[l].b.size() != out) {
        throw UsageError("layer " + std::to_string(l) + " has the wrong shape");
      }
      in = out;
    }
  }

  ModelSpec spec_;
  std::vector<Layer> layers_;
  mutable bool finite_known_ = false;
};

struct Gradients {
  std::vector<Layer> layers;
  double loss = 0.0;
};

// Loss mean_k |v(t_k, x_k) - V_k|^2 and its exact gradient.
inline Gradients grad(const VelocityModel& model, const Eigen::VectorXd& t, const Eigen::MatrixXd& X,
                      const Eigen::MatrixXd& V) {
  if (X.cols() == 0) throw UsageError("gradient needs a nonempty batch");
  if (V.rows() != X.rows() || V.cols() != X.cols()) throw UsageError("target batch shape mismatch");
  if (!model.parameters_finite()) throw NumericalError("poisoned model: non-finite parameters");
  const auto& layers = model.layers();
  const std::size_t L = layers.size();
  std::vector<Eigen::MatrixXd> acts{model.embed(t, X)};
  std::vector<Eigen::MatrixXd> pre;
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd z = layers[l].W * acts.back();
    z.colwise() += layers[l].b;
    pre.push_back(z);
    acts.push_back(l + 1 < L ? model.activate(z) : z);
  }
  const Eigen::MatrixXd diff = acts.back() - V;
  const Eigen::RowVectorXd per_sample = diff.colwise().squaredNorm();
  if (!per_sample.allFinite()) {
    std::ostringstream msg;
    msg << "non-finite loss at batch indices";
    int shown = 0;
    for (Eigen::Index k = 0; k < per_sample.size() && shown < 10; ++k) {
      if (!std::isfinite(per_sample(k))) {
        msg << ' ' << k;
        ++shown;
      }
    }
    throw NumericalError(msg.str());
  }
  const double batch = static_cast<double>(X.cols());
  Gradients g;
  g.loss = per_sample.sum() / batch;
  g.layers.resize(L);
  Eigen::MatrixXd delta = (2.0 / batch) * diff;
  for (std::size_t l = L; l-- > 0;) {
    g.layers[l].W = delta * acts[l].transpose();
    g.layers[l].b = delta.rowwise().sum();
    if (l > 0) delta = (layers[l].W.transpose() * delta).cwiseProduct(model.activate_derivative(pre[l - 1]));
  }
  return g;
}

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Layer> m;
  std::vector<Layer> v;

  static AdamState zeros_like(const VelocityModel& model) {
    AdamState s;
    for (const auto& l : model.layers()) {
      s.m.push_back({Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()), Eigen::VectorXd::Zero(l.b.size())});
      s.v.push_back(s.m.back());
    }
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json jm = nlohmann::json::array(), jv = nlohmann::json::array();
    for (const auto& l : m) jm.push_back(VelocityModel::layer_to_json(l));
    for (const auto& l : v) jv.push_back(VelocityModel::layer_to_json(l));
    return {{"beta1", beta1}, {"beta2", beta2}, {"eps", eps}, {"step", step}, {"m", jm}, {"v", jv}};
  }

  static AdamState from_json(const nlohmann::json& j) {
    AdamState s;
    s.beta1 = j.at("beta1").get<double>();
    s.beta2 = j.at("beta2").get<double>();
    s.eps = j.at("eps").get<double>();
    s.step = j.at("step").get<long>();
    for (const auto& l : j.at("m")) s.m.push_back(VelocityModel::layer_from_json(l));
    for (const auto& l : j.at("v")) s.v.push_back(VelocityModel::layer_from_json(l));
    return s;
  }
};

// One bias-corrected Adam update of the model parameters.
inline void adam_step(VelocityModel& model, AdamState& state, const Gradients& g, double learning_rate) {
  auto& layers = model.mutable_layers();
  if (state.m.size() != layers.size() || g.layers.size() != layers.size()) {
    throw UsageError("optimizer state, gradients and model have different layer counts");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto same = [](const Layer& a, const Layer& b) {
      return a.W.rows() == b.W.rows() && a.W.cols() == b.W.cols() && a.b.size() == b.b.size();
    };
    if (!same(layers[l], g.layers[l]) || !same(layers[l], state.m[l]) || !same(layers[l], state.v[l])) {
      throw UsageError("shape mismatch in layer " + std::to_string(l));
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const double b1 = state.beta1, b2 = state.beta2, eps = state.eps;
  const auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    param -= (learning_rate * (m / c1).array() / ((v / c2).array().sqrt() + eps)).matrix();
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].W, state.m[l].W, state.v[l].W, g.layers[l].W);
    update(layers[l].b, state.m[l].b, state.v[l].b, g.layers[l].b);
  }
}

struct LossRecord {
  long iteration = 0;
  double mean_loss = 0.0;
};

struct Checkpoint {
  VelocityModel model;
  nlohmann::json config = nlohmann::json::object();
  long iteration = 0;
  AdamState optimizer;
  std::string loss_history_path;  // CSV written alongside, if any

  nlohmann::json to_json() const {
    nlohmann::json meta{{"config", config}, {"iteration", iteration}};
    if (!loss_history_path.empty()) meta["loss_history"] = loss_history_path;
    return {{"meta", meta},
            {"model", model.spec().to_json()},
            {"layers", model.layers_json()},
            {"optimizer", optimizer.to_json()}};
  }

  static Checkpoint from_json(const nlohmann::json& j) {
    try {
      Checkpoint c;
      const auto& meta = j.at("meta");
      c.config = meta.at("config");
      c.iteration = meta.at("iteration").get<long>();
      c.loss_history_path = meta.value("loss_history", "");
      std::vector<Layer> layers;
      for (const auto& l : j.at("layers")) layers.push_back(VelocityModel::layer_from_json(l));
      c.model = VelocityModel(ModelSpec::from_json(j.at("model")), std::move(layers));
      if (j.contains("optimizer")) c.optimizer = AdamState::from_json(j.at("optimizer"));
      return c;
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("malformed checkpoint: ") + e.what());
    }
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    out << to_json().dump() << '\n';
    if (!out) throw IoError("failed writing checkpoint '" + path + "'");
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("checkpoint '" + path + "' is not valid JSON: " + e.what());
    }
    return from_json(j);
  }
};

}  // namespace kacflow
