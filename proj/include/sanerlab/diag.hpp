#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sanerlab/model.hpp"

// Component-level gradient forensics. The ratio r_i = g_sam_i / g_sgd_i
// splits coordinates into three groups:
//   A: r >= 1      (ascent step grew the component)
//   B: 0 <= r < 1  (shrank it, same sign)
//   C: r < 0       (flipped its sign)
// plus the coordinates where the ratio is undefined (g_sgd_i = 0).
//
// Separately, splitting the batch gradient into clean-sample and noisy-sample
// halves identifies opposing coordinates (the halves disagree in sign) and
// which half wins each one. Tracking how often group B captures clean-won vs
// noise-won coordinates yields p_clean, p_noise, and their quotient pr: a
// pr above 1 late in training means suppression lands mostly on coordinates
// the noisy samples are driving.

namespace sanerlab::diag {

using model::ParamVector;

struct GroupPartition {
  std::vector<std::uint32_t> set_a;
  std::vector<std::uint32_t> set_b;
  std::vector<std::uint32_t> set_c;
  std::vector<std::uint32_t> undefined;
};

// Every index lands in exactly one of the four sets; NaN means undefined.
GroupPartition partition_groups(const std::vector<double>& ratio);

struct GroupFractions {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double undefined = 0.0;  // the four sum to 1 for nonempty input
};

GroupFractions group_fractions(const GroupPartition& partition, std::size_t total);

enum class HybridKind { sgd_gr_a, sgd_gr_b };

// g_sgd substituted on the named group, g_sam elsewhere (undefined
// coordinates keep g_sam). Exact substitution, no blending.
ParamVector hybrid_gradient(const ParamVector& g_sgd, const ParamVector& g_sam,
                            const GroupPartition& partition, HybridKind kind);

struct DominanceSets {
  std::vector<std::uint32_t> s_o;  // clean and noisy halves oppose in sign
  std::vector<std::uint32_t> s_c;  // opposing, clean half wins the sum
  std::vector<std::uint32_t> s_n;  // opposing, noisy half wins the sum
};

// Requires g_sgd ~ g_clean + g_noise (checked; the halves come from
// split_gradient so only summation rounding separates them). Coordinates
// where g_sgd is exactly zero belong to neither winning set.
DominanceSets dominance_sets(const ParamVector& g_clean, const ParamVector& g_noise,
                             const ParamVector& g_sgd);

struct DominanceReport {
  DominanceSets sets;
  std::optional<double> p_clean;  // |s_c ∩ B| / |s_c|, absent when s_c is empty
  std::optional<double> p_noise;  // |s_n ∩ B| / |s_n|, absent when s_n is empty
  std::optional<double> pr;       // p_noise / p_clean, absent unless p_clean > 0
};

// Fractions of each winning set that the suppression mask catches. Undefined
// quantities stay absent rather than erroring; downstream writers emit them
// as empty cells.
DominanceReport pr_ratio(DominanceSets sets, const std::vector<std::uint8_t>& mask_b);

}  // namespace sanerlab::diag
