#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

// Synthetic datasets and controlled label corruption. Every injector is a
// pure function of (dataset, rate, seed): it never touches features, never
// flips a label to itself, and records the flip in is_noisy, so experiments
// can always measure accuracy on clean and corrupted subsets separately.

namespace sanerlab::data {

struct LabeledDataset {
  std::vector<double> features;          // n x dim, row-major
  std::vector<int> true_labels;          // ground truth, in [0, num_classes)
  std::vector<int> observed_labels;      // training labels, possibly corrupted
  std::vector<std::uint8_t> is_noisy;    // observed != true
  int dim = 0;
  int num_classes = 0;

  std::size_t size() const { return true_labels.size(); }
  const double* row(std::size_t r) const {
    return features.data() + r * static_cast<std::size_t>(dim);
  }
  double realized_noise_rate() const;

  // Throws std::invalid_argument if buffers, labels, or flags are inconsistent.
  void validate() const;
};

enum class NoiseKind { none, symmetric, asymmetric_circular, asymmetric_pairmap, instance_proxy };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double rate = 0.0;                 // in [0, 1]
  std::uint64_t seed = 0;
  std::map<int, int> pair_map;       // asymmetric_pairmap only: class -> class

  void validate(int num_classes) const;
};

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

// Canonical injection stream for a dataset seed. Every synthesis path (the
// data tool and in-run synthesis) derives the noise RNG this way, so the same
// data seed corrupts the same samples everywhere.
std::uint64_t noise_seed_for(std::uint64_t data_seed);

// Isotropic Gaussian clusters (unit covariance) with centers at pairwise
// distance >= separation and balanced labels (class counts differ by at most
// one). Throws std::runtime_error if centers cannot be packed at the
// requested separation in `dim` dimensions.
LabeledDataset make_gaussian_blobs(std::size_t n, int classes, int dim, double separation,
                                   std::uint64_t seed);

// Each sample flips with probability `rate`, uniformly to one of the other
// C-1 classes. Input must be uncorrupted (is_noisy all false).
LabeledDataset inject_symmetric(LabeledDataset ds, double rate, std::uint64_t seed);

// Each selected sample moves to (y+1) mod C; with a pair map, only mapped
// classes are eligible and move to their mapped target.
LabeledDataset inject_asymmetric(LabeledDataset ds, double rate, std::uint64_t seed,
                                 const std::map<int, int>& pair_map = {});

// Feature-dependent flip probability: q_i = rate * s_i / mean(s), clipped to
// 1, where s_i is the sigmoid of a fixed seeded random projection of the
// features. The flip target is the highest-scoring non-true class under a
// second fixed projection, so identical features always flip the same way.
LabeledDataset inject_instance_proxy(LabeledDataset ds, double rate, std::uint64_t seed);

// Dispatch on spec.kind (none returns the dataset unchanged).
LabeledDataset apply_noise(LabeledDataset ds, const NoiseSpec& spec);

// Text format, one sample per line after the header:
//   saner-ds v1 n=<n> d=<dim> c=<classes>
//   <true_label>,<observed_label>,<f_1>,...,<f_dim>
// Floats are written in shortest round-trip form, so load(save(ds)) is
// lossless and re-saving reproduces the file byte for byte.
void save_dataset(const LabeledDataset& ds, const std::string& path);

// Throws std::runtime_error with a line number on any malformed or truncated
// input; never returns a partial dataset. is_noisy is reconstructed as
// observed != true.
LabeledDataset load_dataset(const std::string& path);

}  // namespace sanerlab::data
