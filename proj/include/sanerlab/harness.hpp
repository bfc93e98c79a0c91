#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sanerlab/data.hpp"
#include "sanerlab/model.hpp"
#include "sanerlab/optim.hpp"

// Experiment orchestration: resolves a flat key=value config into a fully
// concrete run, trains with per-epoch metric and diagnostic tracking, and
// persists everything as deterministic text. Identical (config, seed) pairs
// produce byte-identical outputs within one build and kernel selection.

namespace sanerlab::harness {

using model::Batch;
using model::ModelSpec;
using model::ParamVector;

struct ExperimentConfig {
  optim::OptimConfig optim;
  std::vector<int> hidden{64};
  model::Activation activation = model::Activation::relu;

  int epochs = 200;
  int batch_size = 128;
  double lr_decay = 0.1;
  std::optional<std::vector<int>> lr_milestones;  // default: epochs/2 and 3*epochs/4
  std::optional<int> k;                           // default: epochs/4
  std::uint64_t seed = 1;

  // Either file paths or a synthesis block. Noise applies to synthesized
  // training data only; file datasets arrive with noise already baked in.
  std::string data_path;
  std::string test_data_path;
  std::size_t synth_n = 5000;
  int synth_classes = 10;
  int synth_dim = 32;
  double synth_separation = 10.0;
  std::size_t synth_test_n = 1000;
  std::optional<std::uint64_t> data_seed;  // default: seed
  data::NoiseSpec noise;                   // seed field is derived internally

  bool diagnostics = true;
  int probe_size = 512;
  std::string kernels = "auto";
  std::string output_dir = ".";

  // Fills every defaulted field with its concrete value. Idempotent.
  void resolve();
  // Throws std::invalid_argument on out-of-range values. Call after resolve().
  void validate() const;
};

// key=value configuration, one pair per line, '#' comments allowed.
std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path);

// Applies one key to the config; throws std::invalid_argument on unknown keys
// or unparsable values. Shared by config files and CLI flag overrides, so
// both accept exactly the same vocabulary.
void apply_kv(ExperimentConfig& config, const std::string& key, const std::string& value);

// Serializes a resolved config; parsing the result reproduces it exactly.
void write_config(const ExperimentConfig& config, const std::string& path);
std::string config_to_string(const ExperimentConfig& config);

struct MetricsRow {
  int epoch = 0;
  double eta = 0.0;
  double alpha = 1.0;
  double train_acc_overall = 0.0;
  std::optional<double> clean_train_acc;
  std::optional<double> noisy_train_acc;
  std::optional<double> clean_noisy_gap;  // clean - noisy
  double test_acc = 0.0;
  double generalization_gap = 0.0;  // train_acc_overall - test_acc
  std::optional<double> frac_a;
  std::optional<double> frac_b;
  std::optional<double> frac_c;
  std::optional<double> p_clean;
  std::optional<double> p_noise;
  std::optional<double> pr;
};

struct RunRecord {
  std::vector<MetricsRow> rows;
  ParamVector final_params;
  ModelSpec spec;
  double train_noise_rate = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

// eta = base_eta * decay^(number of milestones <= epoch).
double lr_schedule(int epoch, double base_eta, const std::vector<int>& milestones, double decay);

struct SplitAccuracy {
  std::optional<double> clean;  // absent when the subset is empty
  std::optional<double> noisy;
  double overall = 0.0;
};

// Accuracy against observed labels, overall and per clean/noisy subset.
SplitAccuracy evaluate_split(const ParamVector& params, const ModelSpec& spec,
                             const data::LabeledDataset& ds);

Batch gather(const data::LabeledDataset& ds, const std::vector<std::uint32_t>& indices);

// Synthesized (train, test) pair sharing one set of cluster centers; noise
// applied to the training half only.
std::pair<data::LabeledDataset, data::LabeledDataset> synthesize_datasets(
    const ExperimentConfig& config);

// Full training run. Numeric failure mid-run aborts and returns the rows
// collected so far with `aborted` set instead of throwing, so callers can
// persist the partial record.
RunRecord run_training(const ExperimentConfig& config);

// Metrics CSV with the fixed header
//   epoch,eta,alpha,train_acc_overall,clean_train_acc,noisy_train_acc,
//   clean_noisy_gap,test_acc,generalization_gap,frac_a,frac_b,frac_c,
//   p_clean,p_noise,pr
// (one line). Undefined values are empty cells; numbers use shortest
// round-trip formatting, so read(write(rows)) is lossless.
void write_metrics(const std::vector<MetricsRow>& rows, const std::string& path);
std::string metrics_to_string(const std::vector<MetricsRow>& rows);

// Throws std::runtime_error with a line number on malformed input; the two
// derived gap columns are recomputed from their parts on read.
std::vector<MetricsRow> read_metrics(const std::string& path);

struct NamedRun {
  std::string name;
  std::vector<MetricsRow> rows;
};

enum class ComparisonAssertion { noisy_acc_ordering, test_acc_ordering, pr_late_phase };
enum class Verdict { pass, fail, inconclusive };

std::string to_string(ComparisonAssertion a);
std::string to_string(Verdict v);
ComparisonAssertion assertion_from_string(const std::string& name);

struct RunDigest {
  std::string name;
  std::optional<double> final_noisy_acc;
  double best_test_acc = 0.0;                // max over epochs
  std::optional<double> late_pr_median;      // median of defined pr, final third
};

struct ComparisonReport {
  ComparisonAssertion assertion = ComparisonAssertion::noisy_acc_ordering;
  Verdict verdict = Verdict::inconclusive;
  double margin = 0.0;  // smallest adjacent gap in the asserted direction
  std::vector<RunDigest> runs;
  std::string text;  // human-readable, deterministic
};

// Checks an ordering across runs given in expected order:
//   noisy_acc_ordering: final noisy_train_acc strictly decreasing;
//   test_acc_ordering:  best test_acc strictly increasing;
//   pr_late_phase:      median late pr nonincreasing.
// Requires >= 2 runs on identical epoch grids. Ties fail with zero margin;
// missing inputs (all-empty noisy or pr columns) give `inconclusive`.
ComparisonReport compare_runs(const std::vector<NamedRun>& runs, ComparisonAssertion assertion);

}  // namespace sanerlab::harness
