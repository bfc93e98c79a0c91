#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

// Dense MLP with softmax cross-entropy, operating on a flat parameter vector.
// Forward and backward are exact (no stochastic layers), so the gradient is
// a deterministic function of (params, batch, spec): the property every
// perturbation-and-compare experiment in this project leans on.

namespace sanerlab::model {

// Flat parameter vector. Layout: per layer, the weight matrix (out x in,
// row-major) followed by that layer's bias (out), layers in order.
using ParamVector = std::vector<double>;

enum class Activation { relu, tanh };

struct ModelSpec {
  // [input_dim, hidden..., num_classes]; at least 2 entries, all positive.
  std::vector<int> layer_sizes;
  Activation activation = Activation::relu;

  int input_dim() const { return layer_sizes.front(); }
  int num_classes() const { return layer_sizes.back(); }
  std::size_t param_count() const;

  // Throws std::invalid_argument on malformed layer sizes.
  void validate() const;
};

struct Batch {
  std::vector<double> features;        // m x dim, row-major
  std::vector<int> labels;             // observed labels, values in [0, C)
  std::vector<std::uint8_t> is_noisy;  // per-sample flag, same length as labels
  int dim = 0;

  std::size_t size() const { return labels.size(); }
  const double* row(std::size_t r) const { return features.data() + r * static_cast<std::size_t>(dim); }
};

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// He-style init: weights ~ N(0, 2 / fan_in), biases zero.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

struct ForwardResult {
  double loss = 0.0;                    // mean cross-entropy over the batch
  std::vector<double> logits;           // m x C, row-major
};

// Throws std::runtime_error naming the layer if an activation goes non-finite.
ForwardResult forward_loss(const ParamVector& params, const Batch& batch, const ModelSpec& spec);

// Gradient of the mean loss w.r.t. params; exact backprop.
ParamVector backward(const ParamVector& params, const Batch& batch, const ModelSpec& spec);

// Gradient restricted to a subset of samples but normalized by the full batch
// size, so subset gradients stay additive.
ParamVector backward_subset_scaled(const ParamVector& params, const Batch& subset,
                                   const ModelSpec& spec, std::size_t full_batch_size);

// Splits the batch gradient into clean-sample and noisy-sample halves sharing
// the full batch's 1/m normalizer, so g_clean + g_noise recovers backward()
// up to summation rounding.
std::pair<ParamVector, ParamVector> split_gradient(const ParamVector& params, const Batch& batch,
                                                   const ModelSpec& spec);

}  // namespace sanerlab::model
