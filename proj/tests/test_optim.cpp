// Optimizer tests: perturbation geometry, ratio/mask boundaries, the
// reweighting identities (alpha = 1 is a bitwise no-op), the momentum
// recurrence against a hand-written reference, the alpha anneal, and the
// wrap_variant adapter.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sanerlab/model.hpp"
#include "sanerlab/optim.hpp"
#include "sanerlab/rng.hpp"

using sanerlab::Rng;
using sanerlab::model::Batch;
using sanerlab::model::ModelSpec;
using sanerlab::model::ParamVector;
using sanerlab::optim::GradientBundle;
using sanerlab::optim::Mode;
using sanerlab::optim::OptimConfig;
using sanerlab::optim::OptimizerState;

namespace {

bool same_bits(double a, double b) {
  std::uint64_t ba, bb;
  std::memcpy(&ba, &a, sizeof ba);
  std::memcpy(&bb, &b, sizeof bb);
  return ba == bb;
}

bool all_same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_bits(a[i], b[i])) return false;
  }
  return true;
}

Batch random_batch(Rng& rng, std::size_t m, int dim, int classes) {
  Batch b;
  b.dim = dim;
  b.features.resize(m * static_cast<std::size_t>(dim));
  for (double& f : b.features) f = rng.normal();
  b.labels.resize(m);
  b.is_noisy.assign(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    b.labels[i] = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(classes)));
  }
  return b;
}

}  // namespace

TEST_CASE("mode names round-trip") {
  for (Mode mode : {Mode::sgd, Mode::sam, Mode::saner, Mode::sgd_gr_a, Mode::sgd_gr_b}) {
    CHECK(sanerlab::optim::mode_from_string(sanerlab::optim::to_string(mode)) == mode);
  }
  CHECK_THROWS_AS(sanerlab::optim::mode_from_string("adam"), std::invalid_argument);
}

TEST_CASE("config validation") {
  OptimConfig ok;
  ok.validate();

  OptimConfig bad = ok;
  bad.eta = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.rho = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.alpha_target = -0.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.momentum = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.k = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.weight_decay = -1e-4;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  OptimConfig sgd;
  sgd.mode = Mode::sgd;
  sgd.rho = 0.7;
  CHECK(sgd.effective_rho() == 0.0);
  sgd.mode = Mode::sam;
  CHECK(sgd.effective_rho() == 0.7);
}

TEST_CASE("sam_perturbation has norm rho and direction g / ||g||") {
  Rng rng(7);
  ParamVector g(37);
  for (double& v : g) v = rng.normal();
  const double rho = 0.05;
  const ParamVector eps = sanerlab::optim::sam_perturbation(g, rho);
  REQUIRE(eps.size() == g.size());

  double norm_sq = 0.0, dot = 0.0, g_norm_sq = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    norm_sq += eps[i] * eps[i];
    dot += eps[i] * g[i];
    g_norm_sq += g[i] * g[i];
  }
  CHECK(std::sqrt(norm_sq) == doctest::Approx(rho).epsilon(1e-12));
  // perfectly aligned with g
  CHECK(dot == doctest::Approx(rho * std::sqrt(g_norm_sq)).epsilon(1e-12));

  // degenerate inputs give the exact zero vector
  const ParamVector zero_rho = sanerlab::optim::sam_perturbation(g, 0.0);
  for (double v : zero_rho) CHECK(v == 0.0);
  const ParamVector zero_g = sanerlab::optim::sam_perturbation(ParamVector(5, 0.0), rho);
  for (double v : zero_g) CHECK(v == 0.0);
}

TEST_CASE("sam_gradient: perturbed evaluation point and rho = 0 degeneration") {
  Rng rng(11);
  ModelSpec spec;
  spec.layer_sizes = {4, 6, 3};
  spec.activation = sanerlab::model::Activation::tanh;
  const Batch batch = random_batch(rng, 8, 4, 3);
  ParamVector params(spec.param_count());
  for (double& v : params) v = 0.4 * rng.normal();

  const double rho = 0.05;
  const auto [g_sgd, g_sam] = sanerlab::optim::sam_gradient(params, batch, spec, rho);
  const ParamVector base = sanerlab::model::backward(params, batch, spec);
  CHECK(all_same_bits(g_sgd, base));

  // Independent recomputation: gradient at params + sam_perturbation(g_sgd).
  const ParamVector eps = sanerlab::optim::sam_perturbation(g_sgd, rho);
  ParamVector shifted = params;
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += eps[i];
  const ParamVector expected = sanerlab::model::backward(shifted, batch, spec);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(g_sam[i] == doctest::Approx(expected[i]).epsilon(1e-9));
  }
  // and g_sam differs from g_sgd somewhere
  CHECK(!all_same_bits(g_sam, g_sgd));

  // rho = 0: bitwise copy
  const auto [g0, g0_sam] = sanerlab::optim::sam_gradient(params, batch, spec, 0.0);
  CHECK(all_same_bits(g0, g0_sam));
}

TEST_CASE("component_ratio and mask boundaries") {
  const ParamVector g_sam = {2.0, -1.0, 0.0, 3.0, 1.0, -2.0, 0.5, 1.0};
  const ParamVector g_sgd = {4.0, 2.0, 5.0, 0.0, 1.0, -2.0, -1.0, -0.0};
  const auto r = sanerlab::optim::component_ratio(g_sam, g_sgd);
  REQUIRE(r.size() == 8);
  CHECK(r[0] == 0.5);    // shrank -> group B
  CHECK(r[1] == -0.5);   // flipped -> group C
  CHECK(r[2] == 0.0);    // vanished -> boundary, inside B
  CHECK(std::isnan(r[3]));  // undefined: base component zero
  CHECK(r[4] == 1.0);    // unchanged -> boundary, outside B
  CHECK(r[5] == 1.0);
  CHECK(r[6] == -0.5);
  CHECK(std::isnan(r[7]));  // -0.0 base is still zero

  const auto mask = sanerlab::optim::mask_b(r);
  CHECK(mask == std::vector<std::uint8_t>{1, 0, 1, 0, 0, 0, 0, 0});
}

TEST_CASE("saner_combine: scaling, pass-through, and the alpha = 1 identity") {
  const ParamVector g = {2.0, -4.0, 8.0, 1e-300, -0.0};
  const std::vector<std::uint8_t> mask = {1, 0, 1, 1, 0};

  const ParamVector half = sanerlab::optim::saner_combine(g, mask, 0.5);
  CHECK(half[0] == 1.0);
  CHECK(half[1] == -4.0);
  CHECK(half[2] == 4.0);
  CHECK(half[3] == 0.5e-300);
  CHECK(same_bits(half[4], -0.0));

  const ParamVector twice = sanerlab::optim::saner_combine(g, mask, 2.0);
  CHECK(twice[0] == 4.0);  // alpha above 1 amplifies

  const ParamVector same = sanerlab::optim::saner_combine(g, mask, 1.0);
  CHECK(all_same_bits(same, g));
}

TEST_CASE("alpha_schedule anneals linearly and clamps at k") {
  // k = 0: constant at the target
  CHECK(sanerlab::optim::alpha_schedule(0, 0, 0.5) == 0.5);
  CHECK(sanerlab::optim::alpha_schedule(100, 0, 0.5) == 0.5);

  // endpoints and midpoint
  CHECK(sanerlab::optim::alpha_schedule(0, 50, 0.5) == 1.0);
  CHECK(sanerlab::optim::alpha_schedule(25, 50, 0.5) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(sanerlab::optim::alpha_schedule(50, 50, 0.5) == 0.5);
  CHECK(sanerlab::optim::alpha_schedule(200, 50, 0.5) == 0.5);

  // alpha_target = 1 stays exactly 1 at every epoch
  for (int epoch : {0, 1, 13, 49, 50, 51, 1000}) {
    CHECK(sanerlab::optim::alpha_schedule(epoch, 50, 1.0) == 1.0);
  }
}

TEST_CASE("apply_update follows the momentum recurrence exactly") {
  OptimConfig config;
  config.momentum = 0.9;
  config.weight_decay = 0.01;

  ParamVector w = {1.0, -2.0, 0.5};
  const ParamVector g = {0.2, 0.1, -0.3};
  OptimizerState state;

  // Hand-written reference recurrence, run side by side for 5 steps.
  std::vector<double> ref_w = {1.0, -2.0, 0.5};
  std::vector<double> ref_buf = {0.0, 0.0, 0.0};
  const double eta = 0.05;
  for (int step = 0; step < 5; ++step) {
    sanerlab::optim::apply_update(w, g, state, config, eta);
    for (std::size_t i = 0; i < ref_w.size(); ++i) {
      const double u = g[i] + 0.01 * ref_w[i];
      ref_buf[i] = 0.9 * ref_buf[i] + u;
      ref_w[i] -= eta * ref_buf[i];
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(w[i] == doctest::Approx(ref_w[i]).epsilon(1e-14));
    }
  }
  CHECK(state.steps == 5);

  // Zero gradient with decay only: pure shrinkage toward the origin.
  OptimizerState fresh;
  OptimConfig plain;
  plain.momentum = 0.0;
  plain.weight_decay = 0.1;
  ParamVector w2 = {2.0};
  sanerlab::optim::apply_update(w2, ParamVector{0.0}, fresh, plain, 0.5);
  CHECK(w2[0] == doctest::Approx(2.0 * (1.0 - 0.5 * 0.1)).epsilon(1e-15));

  // Non-finite parameters raise
  ParamVector w3 = {1.0};
  OptimizerState s3;
  CHECK_THROWS_AS(
      sanerlab::optim::apply_update(w3, ParamVector{std::numeric_limits<double>::infinity()}, s3,
                                    plain, 1.0),
      std::runtime_error);
}

TEST_CASE("reweight_two_step assembles ratio, mask, and final gradient consistently") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.next_below(40);
    ParamVector g_sgd(n), g_star(n);
    for (std::size_t i = 0; i < n; ++i) {
      g_sgd[i] = rng.uniform() < 0.15 ? 0.0 : rng.normal();
      g_star[i] = rng.uniform() < 0.15 ? 0.0 : rng.normal();
    }
    const double alpha = rng.uniform() * 1.5;
    const GradientBundle bundle = sanerlab::optim::reweight_two_step(g_sgd, g_star, alpha);

    REQUIRE(bundle.ratio.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
      if (g_sgd[i] == 0.0) {
        CHECK(std::isnan(bundle.ratio[i]));
        CHECK(bundle.mask_b[i] == 0);
      } else {
        CHECK(bundle.ratio[i] == g_star[i] / g_sgd[i]);
        const bool in_b = bundle.ratio[i] >= 0.0 && bundle.ratio[i] < 1.0;
        CHECK(bundle.mask_b[i] == (in_b ? 1 : 0));
      }
      const double expected = bundle.mask_b[i] ? alpha * g_star[i] : g_star[i];
      CHECK(same_bits(bundle.g_final[i], expected));
    }
    CHECK(all_same_bits(bundle.g_sgd, g_sgd));
    CHECK(all_same_bits(bundle.g_sam, g_star));
  }
}

TEST_CASE("wrap_variant reproduces the native path bit for bit") {
  Rng rng(17);
  ModelSpec spec;
  spec.layer_sizes = {5, 7, 4};
  const double rho = 0.08;

  auto two_step = [rho](const ParamVector& p, const Batch& b, const ModelSpec& s) {
    return sanerlab::optim::sam_gradient(p, b, s, rho);
  };
  const auto wrapped = sanerlab::optim::wrap_variant(two_step);

  for (int trial = 0; trial < 10; ++trial) {
    const Batch batch = random_batch(rng, 6, 5, 4);
    ParamVector params(spec.param_count());
    for (double& v : params) v = 0.3 * rng.normal();
    const double alpha = 0.25 + rng.uniform();

    const GradientBundle via_wrap = wrapped(params, batch, spec, alpha);

    auto [g_sgd, g_sam] = sanerlab::optim::sam_gradient(params, batch, spec, rho);
    const GradientBundle native =
        sanerlab::optim::reweight_two_step(std::move(g_sgd), std::move(g_sam), alpha);

    CHECK(all_same_bits(via_wrap.g_final, native.g_final));
    CHECK(all_same_bits(via_wrap.ratio, native.ratio));
    CHECK(via_wrap.mask_b == native.mask_b);
  }
}

TEST_CASE("alpha = 1 reweighting leaves a full sam step bitwise unchanged") {
  Rng rng(19);
  ModelSpec spec;
  spec.layer_sizes = {4, 5, 3};
  const Batch batch = random_batch(rng, 8, 4, 3);
  ParamVector params(spec.param_count());
  for (double& v : params) v = 0.4 * rng.normal();

  auto [g_sgd, g_sam] = sanerlab::optim::sam_gradient(params, batch, spec, 0.1);
  const GradientBundle bundle = sanerlab::optim::reweight_two_step(g_sgd, g_sam, 1.0);
  CHECK(all_same_bits(bundle.g_final, g_sam));
}
