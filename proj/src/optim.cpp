#include "sanerlab/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "sanerlab/kernels.hpp"

namespace sanerlab::optim {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::sgd: return "sgd";
    case Mode::sam: return "sam";
    case Mode::saner: return "saner";
    case Mode::sgd_gr_a: return "sgd_gr_a";
    case Mode::sgd_gr_b: return "sgd_gr_b";
  }
  return "sgd";
}

Mode mode_from_string(const std::string& name) {
  if (name == "sgd") return Mode::sgd;
  if (name == "sam") return Mode::sam;
  if (name == "saner") return Mode::saner;
  if (name == "sgd_gr_a") return Mode::sgd_gr_a;
  if (name == "sgd_gr_b") return Mode::sgd_gr_b;
  throw std::invalid_argument("unknown mode '" + name +
                              "' (expected sgd, sam, saner, sgd_gr_a, or sgd_gr_b)");
}

void OptimConfig::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (!(rho >= 0.0)) throw std::invalid_argument("rho must be nonnegative");
  if (!(alpha_target >= 0.0)) throw std::invalid_argument("alpha_target must be nonnegative");
  if (k < 0) throw std::invalid_argument("k must be nonnegative");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be nonnegative");
}

ParamVector sam_perturbation(const ParamVector& g_sgd, double rho) {
  if (!(rho >= 0.0)) throw std::invalid_argument("rho must be nonnegative");
  if (rho == 0.0) return ParamVector(g_sgd.size(), 0.0);
  const auto& ops = kernels::active();
  const double norm = std::sqrt(ops.sum_sq(g_sgd.data(), g_sgd.size()));
  if (norm == 0.0) return ParamVector(g_sgd.size(), 0.0);
  ParamVector eps = g_sgd;
  ops.scale(rho / norm, eps.data(), eps.size());
  return eps;
}

std::pair<ParamVector, ParamVector> sam_gradient(const ParamVector& params, const Batch& batch,
                                                 const ModelSpec& spec, double rho) {
  ParamVector g_sgd = model::backward(params, batch, spec);
  const auto& ops = kernels::active();
  const double norm_sq = ops.sum_sq(g_sgd.data(), g_sgd.size());
  if (rho == 0.0 || norm_sq == 0.0) {
    // Zero perturbation: the second gradient is the first, bit for bit.
    ParamVector g_sam = g_sgd;
    return {std::move(g_sgd), std::move(g_sam)};
  }
  ParamVector perturbed(params.size());
  ops.add_scaled(params.data(), rho / std::sqrt(norm_sq), g_sgd.data(), perturbed.data(),
                 params.size());
  ParamVector g_sam = model::backward(perturbed, batch, spec);
  return {std::move(g_sgd), std::move(g_sam)};
}

std::vector<double> component_ratio(const ParamVector& g_sam, const ParamVector& g_sgd) {
  if (g_sam.size() != g_sgd.size()) {
    throw std::invalid_argument("gradient length mismatch in component_ratio");
  }
  std::vector<double> ratio(g_sgd.size());
  kernels::active().ratio(g_sam.data(), g_sgd.data(), ratio.data(), ratio.size());
  return ratio;
}

std::vector<std::uint8_t> mask_b(const std::vector<double>& ratio) {
  std::vector<std::uint8_t> mask(ratio.size());
  kernels::active().mask_unit_interval(ratio.data(), mask.data(), mask.size());
  return mask;
}

ParamVector saner_combine(const ParamVector& g_sam, const std::vector<std::uint8_t>& mask,
                          double alpha) {
  if (g_sam.size() != mask.size()) {
    throw std::invalid_argument("mask length mismatch in saner_combine");
  }
  ParamVector out(g_sam.size());
  kernels::active().scale_masked(g_sam.data(), mask.data(), alpha, out.data(), out.size());
  return out;
}

double alpha_schedule(int epoch, int k, double alpha_target) {
  if (epoch < 0 || k < 0) throw std::invalid_argument("alpha_schedule wants nonnegative epoch, k");
  if (k == 0) return alpha_target;
  const int clamped = epoch < k ? epoch : k;
  const double progress = static_cast<double>(clamped) / static_cast<double>(k);
  return 1.0 - (1.0 - alpha_target) * progress;
}

void apply_update(ParamVector& params, const ParamVector& g_final, OptimizerState& state,
                  const OptimConfig& config, double eta) {
  if (params.size() != g_final.size()) {
    throw std::invalid_argument("gradient length mismatch in apply_update");
  }
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (state.momentum_buffer.empty()) {
    state.momentum_buffer.assign(params.size(), 0.0);
  } else if (state.momentum_buffer.size() != params.size()) {
    throw std::invalid_argument("momentum buffer length mismatch");
  }
  kernels::active().sgd_momentum_step(state.momentum_buffer.data(), params.data(), g_final.data(),
                                      config.momentum, config.weight_decay, eta, params.size());
  state.steps += 1;
  for (double v : params) {
    if (!std::isfinite(v)) throw std::runtime_error("non-finite parameter after update");
  }
}

GradientBundle reweight_two_step(ParamVector g_sgd, ParamVector g_star, double alpha) {
  if (g_sgd.size() != g_star.size()) {
    throw std::invalid_argument("two-step gradients differ in length");
  }
  GradientBundle bundle;
  bundle.g_sgd = std::move(g_sgd);
  bundle.g_sam = std::move(g_star);
  bundle.ratio = component_ratio(bundle.g_sam, bundle.g_sgd);
  bundle.mask_b = mask_b(bundle.ratio);
  bundle.g_final = saner_combine(bundle.g_sam, bundle.mask_b, alpha);
  return bundle;
}

ReweightedGradientFn wrap_variant(TwoStepGradientFn two_step) {
  return [fn = std::move(two_step)](const ParamVector& params, const Batch& batch,
                                    const ModelSpec& spec, double alpha) {
    auto [g_sgd, g_star] = fn(params, batch, spec);
    return reweight_two_step(std::move(g_sgd), std::move(g_star), alpha);
  };
}

}  // namespace sanerlab::optim
