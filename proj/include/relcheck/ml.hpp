#pragma once

// Plaintext training engine: multinomial logistic regression and MLPs trained
// by mini-batch SGD on a flat parameter vector.
//
// Flat layout, layer by layer from input to output: the weight matrix in
// row-major [out][in] order, followed by the bias vector [out].

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "relcheck/dataset.hpp"
#include "relcheck/matrix.hpp"
#include "relcheck/random.hpp"

namespace relcheck::ml {

enum class Activation { kSigmoid, kRelu, kLeakyRelu, kTanh };
enum class ModelKind { kLogistic, kMlp };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);
ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind k);

double sigmoid(double t);
double relu(double t);
double leaky_relu(double t, double beta);
double tanh_act(double t);
double activate(Activation a, double t, double beta);
// Derivative expressed through the pre-activation t.
double activate_grad(Activation a, double t, double beta);

struct HiddenLayer {
  std::size_t width = 0;
  Activation activation = Activation::kRelu;

  friend bool operator==(const HiddenLayer&, const HiddenLayer&) = default;
};

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;

  std::size_t param_count() const { return in * out + out; }
};

struct ModelSpec {
  ModelKind kind = ModelKind::kLogistic;
  std::size_t input_dim = 0;
  std::vector<HiddenLayer> hidden_layers;
  std::size_t num_classes = 2;
  double leaky_slope = 0.01;
  // Independent per-class sigmoid outputs with per-class binary cross-entropy
  // instead of softmax. Only meaningful when num_classes > 2.
  bool sigmoid_output = false;

  // Throws UsageError on inconsistent fields.
  void validate() const;

  // One sigmoid unit for binary problems, one unit per class otherwise.
  std::size_t output_units() const { return num_classes == 2 ? 1 : num_classes; }
  std::vector<LayerShape> layers() const;
  std::size_t param_count() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct ModelParams {
  std::vector<double> flat;

  std::size_t size() const { return flat.size(); }
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct LayerParams {
  Matrix weights;  // out x in
  std::vector<double> bias;
};

std::vector<LayerParams> unflatten(const ModelSpec& spec, const ModelParams& params);
ModelParams flatten(const ModelSpec& spec, const std::vector<LayerParams>& layers);

struct MiniBatch {
  Matrix X;
  Matrix Y;  // one-hot, batch x num_classes
};

MiniBatch make_batch(const Dataset& ds, std::span<const std::size_t> indices);
MiniBatch make_batch(const Dataset& ds);

struct TrainConfig {
  double learning_rate = 0.13;
  std::size_t batch_size = 128;
  std::size_t local_epochs = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

// Uniform in [-r, r], r = sqrt(6 / (fan_in + fan_out)); biases zero.
ModelParams init_params(const ModelSpec& spec, Rng& rng);

// Class-probability matrix (rows x num_classes); rows sum to 1.
Matrix forward(const ModelSpec& spec, const ModelParams& params, const Matrix& X);

// Mean cross-entropy over the batch, probabilities clamped at kProbFloor.
double cost(const ModelSpec& spec, const ModelParams& params, const MiniBatch& batch);

// Analytic gradient of cost() with respect to the flat parameters.
std::vector<double> gradients(const ModelSpec& spec, const ModelParams& params, const MiniBatch& batch);

ModelParams sgd_step(const ModelParams& params, std::span<const double> grad, double learning_rate);

// local_epochs passes of shuffled mini-batch SGD; the final partial batch is kept.
ModelParams train_local(const ModelSpec& spec, const ModelParams& params, const Dataset& ds,
                        const TrainConfig& cfg, Rng& rng);
ModelParams train_local(const ModelSpec& spec, const ModelParams& params, const Dataset& ds,
                        const TrainConfig& cfg);

struct Evaluation {
  double test_error = 0.0;  // mean cross-entropy
  double accuracy = 0.0;
};

Evaluation evaluate(const ModelSpec& spec, const ModelParams& params, const Dataset& ds);

inline constexpr double kProbFloor = 1e-12;

}  // namespace relcheck::ml
