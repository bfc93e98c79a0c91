#include "sanerlab/model.hpp"

#include <cmath>
#include <stdexcept>

#include "sanerlab/kernels.hpp"
#include "sanerlab/rng.hpp"

namespace sanerlab::model {
namespace {

struct LayerView {
  std::size_t w_off = 0;  // weight block offset into the flat vector
  std::size_t b_off = 0;  // bias block offset
  int in = 0;
  int out = 0;
};

std::vector<LayerView> layout(const ModelSpec& spec) {
  std::vector<LayerView> layers;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    LayerView v;
    v.in = spec.layer_sizes[l];
    v.out = spec.layer_sizes[l + 1];
    v.w_off = off;
    v.b_off = off + static_cast<std::size_t>(v.in) * v.out;
    off = v.b_off + v.out;
    layers.push_back(v);
  }
  return layers;
}

void check_finite(const std::vector<double>& values, std::size_t layer_index, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw std::runtime_error("non-finite " + std::string(what) + " in layer " +
                               std::to_string(layer_index));
    }
  }
}

void check_batch(const Batch& batch, const ModelSpec& spec) {
  if (batch.size() == 0) throw std::invalid_argument("empty batch");
  if (batch.dim != spec.input_dim()) {
    throw std::invalid_argument("batch feature dim " + std::to_string(batch.dim) +
                                " does not match model input dim " +
                                std::to_string(spec.input_dim()));
  }
  if (batch.features.size() != batch.size() * static_cast<std::size_t>(batch.dim) ||
      batch.is_noisy.size() != batch.size()) {
    throw std::invalid_argument("inconsistent batch buffers");
  }
  for (int label : batch.labels) {
    if (label < 0 || label >= spec.num_classes()) {
      throw std::invalid_argument("label " + std::to_string(label) + " outside [0, " +
                                  std::to_string(spec.num_classes()) + ")");
    }
  }
}

// Post-activation values for every layer: acts[0] is the input view copy,
// acts[l+1] the output of layer l (logits stay pre-softmax).
struct Trace {
  std::vector<std::vector<double>> acts;
};

// z[r][o] = dot(W_o, a[r]) + b[o], then the hidden nonlinearity.
void run_forward(const ParamVector& params, const Batch& batch, const ModelSpec& spec,
                 const std::vector<LayerView>& layers, Trace& trace) {
  const auto& ops = kernels::active();
  const std::size_t m = batch.size();

  trace.acts.resize(layers.size() + 1);
  trace.acts[0] = batch.features;

  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerView& lv = layers[l];
    const double* w = params.data() + lv.w_off;
    const double* b = params.data() + lv.b_off;
    const std::vector<double>& prev = trace.acts[l];
    std::vector<double>& next = trace.acts[l + 1];
    next.assign(m * static_cast<std::size_t>(lv.out), 0.0);

    for (std::size_t r = 0; r < m; ++r) {
      const double* a_row = prev.data() + r * static_cast<std::size_t>(lv.in);
      double* z_row = next.data() + r * static_cast<std::size_t>(lv.out);
      for (int o = 0; o < lv.out; ++o) {
        z_row[o] = ops.dot(w + static_cast<std::size_t>(o) * lv.in, a_row,
                           static_cast<std::size_t>(lv.in)) +
                   b[o];
      }
    }
    check_finite(next, l, "pre-activation");

    const bool is_output = l + 1 == layers.size();
    if (!is_output) {
      if (spec.activation == Activation::relu) {
        ops.relu(next.data(), next.data(), next.size());
      } else {
        for (double& v : next) v = std::tanh(v);
      }
    }
  }
}

// Mean cross-entropy from logits; log-sum-exp stabilized per row.
double mean_cross_entropy(const std::vector<double>& logits, const std::vector<int>& labels,
                          int num_classes) {
  const std::size_t m = labels.size();
  double total = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double* z = logits.data() + r * static_cast<std::size_t>(num_classes);
    double zmax = z[0];
    for (int c = 1; c < num_classes; ++c) zmax = std::max(zmax, z[c]);
    double sum = 0.0;
    for (int c = 0; c < num_classes; ++c) sum += std::exp(z[c] - zmax);
    total += std::log(sum) - (z[labels[r]] - zmax);
  }
  double loss = total / static_cast<double>(m);
  if (!std::isfinite(loss)) throw std::runtime_error("non-finite loss in output layer");
  return loss;
}

// Backprop from the softmax cross-entropy head; `normalizer` is 1/m of the
// batch the caller is averaging over (not necessarily this sub-batch).
ParamVector run_backward(const ParamVector& params, const Batch& batch, const ModelSpec& spec,
                         double normalizer) {
  const auto& ops = kernels::active();
  const std::vector<LayerView> layers = layout(spec);
  const std::size_t m = batch.size();
  const int num_classes = spec.num_classes();

  Trace trace;
  run_forward(params, batch, spec, layers, trace);
  const std::vector<double>& logits = trace.acts.back();

  // delta = normalizer * (softmax(z) - onehot(label)) at the output.
  std::vector<double> delta(m * static_cast<std::size_t>(num_classes));
  for (std::size_t r = 0; r < m; ++r) {
    const double* z = logits.data() + r * static_cast<std::size_t>(num_classes);
    double* d = delta.data() + r * static_cast<std::size_t>(num_classes);
    double zmax = z[0];
    for (int c = 1; c < num_classes; ++c) zmax = std::max(zmax, z[c]);
    double sum = 0.0;
    for (int c = 0; c < num_classes; ++c) {
      d[c] = std::exp(z[c] - zmax);
      sum += d[c];
    }
    for (int c = 0; c < num_classes; ++c) d[c] /= sum;
    d[batch.labels[r]] -= 1.0;
    for (int c = 0; c < num_classes; ++c) d[c] *= normalizer;
  }

  ParamVector grad(params.size(), 0.0);
  for (std::size_t l = layers.size(); l-- > 0;) {
    const LayerView& lv = layers[l];
    const double* w = params.data() + lv.w_off;
    double* dw = grad.data() + lv.w_off;
    double* db = grad.data() + lv.b_off;
    const std::vector<double>& prev = trace.acts[l];

    // dW_o += delta[r][o] * a[r], db_o += delta[r][o].
    for (std::size_t r = 0; r < m; ++r) {
      const double* a_row = prev.data() + r * static_cast<std::size_t>(lv.in);
      const double* d_row = delta.data() + r * static_cast<std::size_t>(lv.out);
      for (int o = 0; o < lv.out; ++o) {
        if (d_row[o] != 0.0) {
          ops.axpy(d_row[o], a_row, dw + static_cast<std::size_t>(o) * lv.in,
                   static_cast<std::size_t>(lv.in));
        }
        db[o] += d_row[o];
      }
    }

    if (l == 0) break;

    // d_prev[r] = sum_o delta[r][o] * W_o, gated by the activation derivative.
    std::vector<double> d_prev(m * static_cast<std::size_t>(lv.in), 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      const double* d_row = delta.data() + r * static_cast<std::size_t>(lv.out);
      double* p_row = d_prev.data() + r * static_cast<std::size_t>(lv.in);
      for (int o = 0; o < lv.out; ++o) {
        if (d_row[o] != 0.0) {
          ops.axpy(d_row[o], w + static_cast<std::size_t>(o) * lv.in, p_row,
                   static_cast<std::size_t>(lv.in));
        }
      }
    }
    if (spec.activation == Activation::relu) {
      // Post-activation a > 0 iff pre-activation z > 0, so a gates correctly.
      ops.relu_grad(prev.data(), d_prev.data(), d_prev.size());
    } else {
      for (std::size_t i = 0; i < d_prev.size(); ++i) {
        d_prev[i] *= 1.0 - prev[i] * prev[i];
      }
    }
    delta = std::move(d_prev);
  }

  check_finite(grad, 0, "gradient");
  return grad;
}

Batch select_rows(const Batch& batch, bool want_noisy) {
  Batch out;
  out.dim = batch.dim;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    if ((batch.is_noisy[r] != 0) != want_noisy) continue;
    const double* row = batch.row(r);
    out.features.insert(out.features.end(), row, row + batch.dim);
    out.labels.push_back(batch.labels[r]);
    out.is_noisy.push_back(batch.is_noisy[r]);
  }
  return out;
}

}  // namespace

std::size_t ModelSpec::param_count() const {
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    count += static_cast<std::size_t>(layer_sizes[l]) * layer_sizes[l + 1] + layer_sizes[l + 1];
  }
  return count;
}

void ModelSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("model needs at least input and output layer sizes");
  }
  for (int s : layer_sizes) {
    if (s <= 0) throw std::invalid_argument("layer sizes must be positive");
  }
  if (layer_sizes.back() < 2) {
    throw std::invalid_argument("softmax output needs at least 2 classes");
  }
}

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + name + "' (expected relu or tanh)");
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamVector params(spec.param_count(), 0.0);
  Rng rng(seed);
  for (const LayerView& lv : layout(spec)) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(lv.in));
    double* w = params.data() + lv.w_off;
    const std::size_t count = static_cast<std::size_t>(lv.in) * lv.out;
    for (std::size_t i = 0; i < count; ++i) w[i] = stddev * rng.normal();
    // biases stay zero
  }
  return params;
}

ForwardResult forward_loss(const ParamVector& params, const Batch& batch, const ModelSpec& spec) {
  spec.validate();
  check_batch(batch, spec);
  if (params.size() != spec.param_count()) {
    throw std::invalid_argument("parameter vector length does not match model spec");
  }
  const std::vector<LayerView> layers = layout(spec);
  Trace trace;
  run_forward(params, batch, spec, layers, trace);
  ForwardResult result;
  result.logits = std::move(trace.acts.back());
  result.loss = mean_cross_entropy(result.logits, batch.labels, spec.num_classes());
  return result;
}

ParamVector backward(const ParamVector& params, const Batch& batch, const ModelSpec& spec) {
  spec.validate();
  check_batch(batch, spec);
  if (params.size() != spec.param_count()) {
    throw std::invalid_argument("parameter vector length does not match model spec");
  }
  return run_backward(params, batch, spec, 1.0 / static_cast<double>(batch.size()));
}

ParamVector backward_subset_scaled(const ParamVector& params, const Batch& subset,
                                   const ModelSpec& spec, std::size_t full_batch_size) {
  if (full_batch_size == 0) throw std::invalid_argument("full batch size must be positive");
  if (subset.size() == 0) return ParamVector(spec.param_count(), 0.0);
  spec.validate();
  check_batch(subset, spec);
  return run_backward(params, subset, spec, 1.0 / static_cast<double>(full_batch_size));
}

std::pair<ParamVector, ParamVector> split_gradient(const ParamVector& params, const Batch& batch,
                                                   const ModelSpec& spec) {
  spec.validate();
  check_batch(batch, spec);
  Batch clean = select_rows(batch, false);
  Batch noisy = select_rows(batch, true);
  ParamVector g_clean = backward_subset_scaled(params, clean, spec, batch.size());
  ParamVector g_noise = backward_subset_scaled(params, noisy, spec, batch.size());
  return {std::move(g_clean), std::move(g_noise)};
}

}  // namespace sanerlab::model
