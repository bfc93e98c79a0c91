#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sanerlab/model.hpp"

// Sharpness-aware optimizers with component-wise gradient reweighting.
//
// One step works on a single mini-batch:
//   1. g_sgd = gradient at the current weights;
//   2. g_sam = gradient at weights + rho * g_sgd / ||g_sgd||;
//   3. r_i   = g_sam_i / g_sgd_i (undefined where g_sgd_i = 0, encoded NaN);
//   4. components with 0 <= r_i < 1 (the ones the ascent step shrank without
//      flipping) get scaled by alpha, everything else passes through;
//   5. the reweighted gradient feeds a plain SGD step with momentum and
//      weight decay, at the learning rate the schedule supplies.
// The ratio is always computed from the two raw loss gradients, before decay
// or momentum touch anything.

namespace sanerlab::optim {

using model::Batch;
using model::ModelSpec;
using model::ParamVector;

enum class Mode { sgd, sam, saner, sgd_gr_a, sgd_gr_b };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

struct OptimConfig {
  Mode mode = Mode::saner;
  double eta = 0.1;            // base learning rate (schedule applies decay)
  double rho = 0.1;            // ascent-step radius; ignored by mode sgd
  double alpha_target = 0.5;   // final reweighting factor; only mode saner uses it
  int k = 0;                   // epochs to anneal alpha from 1 to alpha_target; 0 = constant
  double momentum = 0.9;
  double weight_decay = 5e-4;

  // Mode sgd is exactly the rho = 0 special case, so sgd runs and sam --rho 0
  // runs produce identical trajectories and identical diagnostics.
  double effective_rho() const { return mode == Mode::sgd ? 0.0 : rho; }

  void validate() const;
};

struct OptimizerState {
  ParamVector momentum_buffer;  // sized on first update
  long steps = 0;
};

// Everything one step computed, kept for diagnostics.
struct GradientBundle {
  ParamVector g_sgd;
  ParamVector g_sam;                 // gradient at the perturbed point
  std::vector<double> ratio;         // NaN where undefined (g_sgd component zero)
  std::vector<std::uint8_t> mask_b;  // 1 where 0 <= ratio < 1
  ParamVector g_final;
};

// rho * g / ||g||; the zero vector when rho = 0 or ||g|| = 0.
ParamVector sam_perturbation(const ParamVector& g_sgd, double rho);

// (g_sgd, g_sam), both on the same batch. When the perturbation is the zero
// vector the second gradient equals the first bit for bit.
std::pair<ParamVector, ParamVector> sam_gradient(const ParamVector& params, const Batch& batch,
                                                 const ModelSpec& spec, double rho);

// Component-wise g_sam / g_sgd with NaN marking undefined components.
std::vector<double> component_ratio(const ParamVector& g_sam, const ParamVector& g_sgd);

// 1 where the ratio is defined and lies in [0, 1); boundary: 0 is in, 1 is out.
std::vector<std::uint8_t> mask_b(const std::vector<double>& ratio);

// Masked components scaled by alpha, others passed through. alpha = 1 returns
// g_sam bit for bit; alpha > 1 amplifies instead of suppressing.
ParamVector saner_combine(const ParamVector& g_sam, const std::vector<std::uint8_t>& mask,
                          double alpha);

// Linear anneal from 1 at epoch 0 to alpha_target at epoch k, constant after;
// k = 0 means alpha_target from the start.
double alpha_schedule(int epoch, int k, double alpha_target);

// buf = momentum * buf + (g_final + weight_decay * params); params -= eta *
// buf. Decay is applied to the final (already reweighted) gradient.
// Throws std::runtime_error if a parameter goes non-finite.
void apply_update(ParamVector& params, const ParamVector& g_final, OptimizerState& state,
                  const OptimConfig& config, double eta);

// Assembles ratio, mask, and the reweighted gradient from a pair of raw
// gradients. The native training path and wrap_variant both call this, so a
// wrapped two-step producer is the native path by construction.
GradientBundle reweight_two_step(ParamVector g_sgd, ParamVector g_star, double alpha);

// Any optimizer that yields (base gradient, modified gradient) per step.
using TwoStepGradientFn =
    std::function<std::pair<ParamVector, ParamVector>(const ParamVector&, const Batch&,
                                                      const ModelSpec&)>;

// Reweighted gradient producer derived from such an optimizer.
using ReweightedGradientFn =
    std::function<GradientBundle(const ParamVector&, const Batch&, const ModelSpec&, double)>;

ReweightedGradientFn wrap_variant(TwoStepGradientFn two_step);

}  // namespace sanerlab::optim
