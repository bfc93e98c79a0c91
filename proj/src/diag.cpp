#include "sanerlab/diag.hpp"

#include <cmath>
#include <stdexcept>

#include "sanerlab/kernels.hpp"

namespace sanerlab::diag {

GroupPartition partition_groups(const std::vector<double>& ratio) {
  GroupPartition p;
  for (std::size_t i = 0; i < ratio.size(); ++i) {
    const double r = ratio[i];
    const auto idx = static_cast<std::uint32_t>(i);
    if (std::isnan(r)) {
      p.undefined.push_back(idx);
    } else if (r >= 1.0) {
      p.set_a.push_back(idx);
    } else if (r >= 0.0) {
      p.set_b.push_back(idx);
    } else {
      p.set_c.push_back(idx);
    }
  }
  return p;
}

GroupFractions group_fractions(const GroupPartition& partition, std::size_t total) {
  const std::size_t counted = partition.set_a.size() + partition.set_b.size() +
                              partition.set_c.size() + partition.undefined.size();
  if (counted != total) {
    throw std::invalid_argument("partition does not cover the stated component count");
  }
  GroupFractions f;
  if (total == 0) return f;
  const double denom = static_cast<double>(total);
  f.a = static_cast<double>(partition.set_a.size()) / denom;
  f.b = static_cast<double>(partition.set_b.size()) / denom;
  f.c = static_cast<double>(partition.set_c.size()) / denom;
  f.undefined = static_cast<double>(partition.undefined.size()) / denom;
  return f;
}

ParamVector hybrid_gradient(const ParamVector& g_sgd, const ParamVector& g_sam,
                            const GroupPartition& partition, HybridKind kind) {
  if (g_sgd.size() != g_sam.size()) {
    throw std::invalid_argument("gradient length mismatch in hybrid_gradient");
  }
  const std::vector<std::uint32_t>& group =
      kind == HybridKind::sgd_gr_a ? partition.set_a : partition.set_b;
  std::vector<std::uint8_t> mask(g_sgd.size(), 0);
  for (std::uint32_t idx : group) {
    if (idx >= mask.size()) throw std::invalid_argument("partition index out of range");
    mask[idx] = 1;
  }
  ParamVector out(g_sgd.size());
  kernels::active().blend_masked(g_sgd.data(), g_sam.data(), mask.data(), out.data(), out.size());
  return out;
}

DominanceSets dominance_sets(const ParamVector& g_clean, const ParamVector& g_noise,
                             const ParamVector& g_sgd) {
  const std::size_t d = g_sgd.size();
  if (g_clean.size() != d || g_noise.size() != d) {
    throw std::invalid_argument("gradient length mismatch in dominance_sets");
  }
  // The halves must reassemble the full gradient; allow only summation
  // rounding, scaled by the gradient's own magnitude.
  double max_abs = 1.0;
  for (double v : g_sgd) max_abs = std::max(max_abs, std::fabs(v));
  const double tol = 1e-9 * max_abs;
  for (std::size_t i = 0; i < d; ++i) {
    if (std::fabs(g_clean[i] + g_noise[i] - g_sgd[i]) > tol) {
      throw std::invalid_argument("clean + noisy halves do not reassemble the batch gradient");
    }
  }

  DominanceSets sets;
  for (std::size_t i = 0; i < d; ++i) {
    if (!(g_clean[i] * g_noise[i] < 0.0)) continue;  // aligned, or either is zero
    const auto idx = static_cast<std::uint32_t>(i);
    sets.s_o.push_back(idx);
    if (g_clean[i] * g_sgd[i] > 0.0) {
      sets.s_c.push_back(idx);
    } else if (g_noise[i] * g_sgd[i] > 0.0) {
      sets.s_n.push_back(idx);
    }
    // g_sgd exactly zero: opposing but unresolved, in neither winning set.
  }
  return sets;
}

DominanceReport pr_ratio(DominanceSets sets, const std::vector<std::uint8_t>& mask_b) {
  DominanceReport report;
  auto captured = [&mask_b](const std::vector<std::uint32_t>& set) {
    std::size_t hits = 0;
    for (std::uint32_t idx : set) {
      if (idx >= mask_b.size()) throw std::invalid_argument("dominance index out of range");
      hits += mask_b[idx] != 0;
    }
    return hits;
  };
  if (!sets.s_c.empty()) {
    report.p_clean = static_cast<double>(captured(sets.s_c)) / static_cast<double>(sets.s_c.size());
  }
  if (!sets.s_n.empty()) {
    report.p_noise = static_cast<double>(captured(sets.s_n)) / static_cast<double>(sets.s_n.size());
  }
  if (report.p_clean && report.p_noise && *report.p_clean > 0.0) {
    report.pr = *report.p_noise / *report.p_clean;
  }
  report.sets = std::move(sets);
  return report;
}

}  // namespace sanerlab::diag
