#include "relcheck/ml.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relcheck/errors.hpp"

namespace relcheck::ml {
namespace {

struct Trace {
  std::vector<Matrix> pre;  // pre-activation per layer
  std::vector<Matrix> act;  // act[0] = input, act[l+1] = f(pre[l]) for hidden layers
};

void check_params(const ModelSpec& spec, const ModelParams& params) {
  if (params.size() != spec.param_count()) {
    throw DimensionError("parameter vector has " + std::to_string(params.size()) +
                         " entries, model expects " + std::to_string(spec.param_count()));
  }
}

Matrix affine(const Matrix& in, const LayerShape& shape, std::span<const double> flat) {
  Matrix out(in.rows, shape.out);
  const double* w = flat.data() + shape.weight_offset;
  const double* b = flat.data() + shape.bias_offset;
  for (std::size_t r = 0; r < in.rows; ++r) {
    const double* x = in.data.data() + r * in.cols;
    for (std::size_t j = 0; j < shape.out; ++j) {
      const double* wj = w + j * shape.in;
      double acc = b[j];
      for (std::size_t i = 0; i < shape.in; ++i) acc += wj[i] * x[i];
      out(r, j) = acc;
    }
  }
  return out;
}

Trace run_forward(const ModelSpec& spec, const ModelParams& params, const Matrix& X) {
  spec.validate();
  check_params(spec, params);
  if (X.cols != spec.input_dim) {
    throw DimensionError("input has " + std::to_string(X.cols) + " features, model expects " +
                         std::to_string(spec.input_dim));
  }
  const auto shapes = spec.layers();
  Trace t;
  t.act.push_back(X);
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    Matrix z = affine(t.act.back(), shapes[l], params.flat);
    if (l + 1 < shapes.size()) {
      Matrix a = z;
      const Activation f = spec.hidden_layers[l].activation;
      for (double& v : a.data) v = activate(f, v, spec.leaky_slope);
      t.act.push_back(std::move(a));
    }
    t.pre.push_back(std::move(z));
  }
  return t;
}

// Output-unit activations: sigmoid for single-unit and per-class sigmoid
// models, softmax otherwise.
Matrix output_activations(const ModelSpec& spec, const Matrix& logits) {
  Matrix out = logits;
  if (spec.output_units() == 1 || spec.sigmoid_output) {
    for (double& v : out.data) v = sigmoid(v);
    return out;
  }
  for (std::size_t r = 0; r < out.rows; ++r) {
    auto row = out.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - peak);
      total += v;
    }
    for (double& v : row) v /= total;
  }
  return out;
}

// Target in output-unit space: a single column holding y[1] for binary models.
Matrix output_targets(const ModelSpec& spec, const Matrix& Y) {
  if (spec.output_units() != 1) return Y;
  Matrix t(Y.rows, 1);
  for (std::size_t r = 0; r < Y.rows; ++r) t(r, 0) = Y(r, 1);
  return t;
}

double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

void check_batch(const ModelSpec& spec, const MiniBatch& batch) {
  if (batch.X.rows != batch.Y.rows) throw DimensionError("X and Y row counts differ");
  if (batch.Y.cols != spec.num_classes) {
    throw DimensionError("Y has " + std::to_string(batch.Y.cols) + " columns, model has " +
                         std::to_string(spec.num_classes) + " classes");
  }
  if (batch.X.rows == 0) throw UsageError("empty mini-batch");
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "relu") return Activation::kRelu;
  if (name == "leaky_relu") return Activation::kLeakyRelu;
  if (name == "tanh") return Activation::kTanh;
  throw UsageError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kRelu: return "relu";
    case Activation::kLeakyRelu: return "leaky_relu";
    case Activation::kTanh: return "tanh";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "logistic") return ModelKind::kLogistic;
  if (name == "mlp") return ModelKind::kMlp;
  throw UsageError("unknown model kind '" + name + "'");
}

std::string to_string(ModelKind k) { return k == ModelKind::kLogistic ? "logistic" : "mlp"; }

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double relu(double t) { return t > 0 ? t : 0.0; }

double leaky_relu(double t, double beta) { return t > 0 ? t : beta * t; }

double tanh_act(double t) { return std::tanh(t); }

double activate(Activation a, double t, double beta) {
  switch (a) {
    case Activation::kSigmoid: return sigmoid(t);
    case Activation::kRelu: return relu(t);
    case Activation::kLeakyRelu: return leaky_relu(t, beta);
    case Activation::kTanh: return tanh_act(t);
  }
  return t;
}

double activate_grad(Activation a, double t, double beta) {
  switch (a) {
    case Activation::kSigmoid: {
      const double s = sigmoid(t);
      return s * (1.0 - s);
    }
    case Activation::kRelu: return t > 0 ? 1.0 : 0.0;
    case Activation::kLeakyRelu: return t > 0 ? 1.0 : beta;
    case Activation::kTanh: {
      const double th = std::tanh(t);
      return 1.0 - th * th;
    }
  }
  return 1.0;
}

void ModelSpec::validate() const {
  if (input_dim == 0) throw UsageError("model input_dim must be positive");
  if (num_classes < 2) throw UsageError("model needs at least 2 classes");
  if (kind == ModelKind::kLogistic && !hidden_layers.empty()) {
    throw UsageError("logistic model cannot have hidden layers");
  }
  if (kind == ModelKind::kMlp && hidden_layers.empty()) {
    throw UsageError("mlp model needs at least one hidden layer");
  }
  for (const auto& h : hidden_layers) {
    if (h.width == 0) throw UsageError("hidden layer width must be positive");
  }
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw UsageError("leaky slope must lie in (0, 1)");
}

std::vector<LayerShape> ModelSpec::layers() const {
  std::vector<LayerShape> out;
  std::size_t in = input_dim;
  std::size_t offset = 0;
  auto push = [&](std::size_t width) {
    LayerShape s{in, width, offset, offset + in * width};
    offset += s.param_count();
    out.push_back(s);
    in = width;
  };
  for (const auto& h : hidden_layers) push(h.width);
  push(output_units());
  return out;
}

std::size_t ModelSpec::param_count() const {
  std::size_t total = 0;
  for (const auto& s : layers()) total += s.param_count();
  return total;
}

std::vector<LayerParams> unflatten(const ModelSpec& spec, const ModelParams& params) {
  check_params(spec, params);
  std::vector<LayerParams> out;
  for (const auto& s : spec.layers()) {
    LayerParams lp;
    lp.weights = Matrix(s.out, s.in);
    std::copy_n(params.flat.begin() + static_cast<std::ptrdiff_t>(s.weight_offset), s.in * s.out,
                lp.weights.data.begin());
    lp.bias.assign(params.flat.begin() + static_cast<std::ptrdiff_t>(s.bias_offset),
                   params.flat.begin() + static_cast<std::ptrdiff_t>(s.bias_offset + s.out));
    out.push_back(std::move(lp));
  }
  return out;
}

ModelParams flatten(const ModelSpec& spec, const std::vector<LayerParams>& layers) {
  const auto shapes = spec.layers();
  if (layers.size() != shapes.size()) throw DimensionError("layer count mismatch");
  ModelParams out;
  out.flat.reserve(spec.param_count());
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    if (layers[l].weights.rows != shapes[l].out || layers[l].weights.cols != shapes[l].in ||
        layers[l].bias.size() != shapes[l].out) {
      throw DimensionError("layer " + std::to_string(l) + " has the wrong shape");
    }
    out.flat.insert(out.flat.end(), layers[l].weights.data.begin(), layers[l].weights.data.end());
    out.flat.insert(out.flat.end(), layers[l].bias.begin(), layers[l].bias.end());
  }
  return out;
}

MiniBatch make_batch(const Dataset& ds, std::span<const std::size_t> indices) {
  MiniBatch b{Matrix(indices.size(), ds.dim()), Matrix(indices.size(), ds.class_count)};
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t src = indices[r];
    std::copy_n(ds.X.row(src).begin(), ds.dim(), b.X.row(r).begin());
    b.Y(r, static_cast<std::size_t>(ds.labels[src])) = 1.0;
  }
  return b;
}

MiniBatch make_batch(const Dataset& ds) {
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return make_batch(ds, all);
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
  if (batch_size == 0) throw UsageError("batch_size must be positive");
}

ModelParams init_params(const ModelSpec& spec, Rng& rng) {
  spec.validate();
  ModelParams p;
  p.flat.assign(spec.param_count(), 0.0);
  for (const auto& s : spec.layers()) {
    const double r = std::sqrt(6.0 / static_cast<double>(s.in + s.out));
    std::uniform_real_distribution<double> dist(-r, r);
    for (std::size_t i = 0; i < s.in * s.out; ++i) p.flat[s.weight_offset + i] = dist(rng);
  }
  return p;
}

Matrix forward(const ModelSpec& spec, const ModelParams& params, const Matrix& X) {
  const Trace t = run_forward(spec, params, X);
  const Matrix out = output_activations(spec, t.pre.back());
  Matrix probs(X.rows, spec.num_classes);
  for (std::size_t r = 0; r < X.rows; ++r) {
    if (spec.output_units() == 1) {
      probs(r, 1) = out(r, 0);
      probs(r, 0) = 1.0 - out(r, 0);
    } else if (spec.sigmoid_output) {
      const auto row = out.row(r);
      const double total = std::accumulate(row.begin(), row.end(), 0.0);
      for (std::size_t k = 0; k < spec.num_classes; ++k) probs(r, k) = row[k] / total;
    } else {
      std::copy_n(out.row(r).begin(), spec.num_classes, probs.row(r).begin());
    }
  }
  return probs;
}

double cost(const ModelSpec& spec, const ModelParams& params, const MiniBatch& batch) {
  check_batch(spec, batch);
  const Trace t = run_forward(spec, params, batch.X);
  const Matrix out = output_activations(spec, t.pre.back());
  const Matrix target = output_targets(spec, batch.Y);
  const bool per_unit_bce = spec.output_units() == 1 || spec.sigmoid_output;
  double total = 0.0;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double p = clamp_prob(out.data[i]);
    const double y = target.data[i];
    total -= y * std::log(p);
    if (per_unit_bce) total -= (1.0 - y) * std::log(1.0 - p);
  }
  return total / static_cast<double>(batch.X.rows);
}

std::vector<double> gradients(const ModelSpec& spec, const ModelParams& params, const MiniBatch& batch) {
  check_batch(spec, batch);
  const Trace t = run_forward(spec, params, batch.X);
  const auto shapes = spec.layers();
  const double inv_batch = 1.0 / static_cast<double>(batch.X.rows);

  // Softmax + categorical CE and sigmoid + binary CE share dC/dz = a - y.
  Matrix delta = output_activations(spec, t.pre.back());
  const Matrix target = output_targets(spec, batch.Y);
  for (std::size_t i = 0; i < delta.data.size(); ++i) delta.data[i] = (delta.data[i] - target.data[i]) * inv_batch;

  std::vector<double> grad(params.size(), 0.0);
  for (std::size_t l = shapes.size(); l-- > 0;) {
    const LayerShape& s = shapes[l];
    const Matrix& input = t.act[l];
    double* gw = grad.data() + s.weight_offset;
    double* gb = grad.data() + s.bias_offset;
    for (std::size_t r = 0; r < delta.rows; ++r) {
      const double* x = input.data.data() + r * input.cols;
      for (std::size_t j = 0; j < s.out; ++j) {
        const double d = delta(r, j);
        if (d == 0.0) continue;
        gb[j] += d;
        double* row = gw + j * s.in;
        for (std::size_t i = 0; i < s.in; ++i) row[i] += d * x[i];
      }
    }
    if (l == 0) break;
    Matrix prev(delta.rows, s.in);
    const double* w = params.flat.data() + s.weight_offset;
    const Activation f = spec.hidden_layers[l - 1].activation;
    for (std::size_t r = 0; r < delta.rows; ++r) {
      for (std::size_t j = 0; j < s.out; ++j) {
        const double d = delta(r, j);
        if (d == 0.0) continue;
        const double* wj = w + j * s.in;
        for (std::size_t i = 0; i < s.in; ++i) prev(r, i) += d * wj[i];
      }
      for (std::size_t i = 0; i < s.in; ++i) {
        prev(r, i) *= activate_grad(f, t.pre[l - 1](r, i), spec.leaky_slope);
      }
    }
    delta = std::move(prev);
  }
  return grad;
}

ModelParams sgd_step(const ModelParams& params, std::span<const double> grad, double learning_rate) {
  if (grad.size() != params.size()) {
    throw DimensionError("gradient length " + std::to_string(grad.size()) + " != parameter length " +
                         std::to_string(params.size()));
  }
  ModelParams out = params;
  for (std::size_t i = 0; i < out.flat.size(); ++i) out.flat[i] -= learning_rate * grad[i];
  return out;
}

ModelParams train_local(const ModelSpec& spec, const ModelParams& params, const Dataset& ds,
                        const TrainConfig& cfg, Rng& rng) {
  if (ds.empty()) throw UsageError("train_local: empty dataset");
  cfg.validate();
  check_params(spec, params);
  ModelParams current = params;
  std::vector<std::size_t> order(ds.size());
  for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(order[i], order[pick(rng)]);
    }
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const MiniBatch batch = make_batch(ds, std::span(order).subspan(start, stop - start));
      current = sgd_step(current, gradients(spec, current, batch), cfg.learning_rate);
    }
  }
  return current;
}

ModelParams train_local(const ModelSpec& spec, const ModelParams& params, const Dataset& ds,
                        const TrainConfig& cfg) {
  Rng rng(cfg.seed);
  return train_local(spec, params, ds, cfg, rng);
}

Evaluation evaluate(const ModelSpec& spec, const ModelParams& params, const Dataset& ds) {
  if (ds.empty()) throw UsageError("evaluate: empty dataset");
  const MiniBatch all = make_batch(ds);
  const Matrix probs = forward(spec, params, all.X);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < probs.rows; ++r) {
    const auto row = probs.row(r);
    const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == ds.labels[r]) ++correct;
  }
  Evaluation e;
  e.accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
  e.test_error = cost(spec, params, all);
  return e;
}

}  // namespace relcheck::ml
