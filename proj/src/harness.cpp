#include "sanerlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sanerlab/diag.hpp"
#include "sanerlab/kernels.hpp"
#include "sanerlab/rng.hpp"
#include "text_util.hpp"

namespace sanerlab::harness {
namespace {

constexpr char kMetricsHeader[] =
    "epoch,eta,alpha,train_acc_overall,clean_train_acc,noisy_train_acc,clean_noisy_gap,"
    "test_acc,generalization_gap,frac_a,frac_b,frac_c,p_clean,p_noise,pr";

// Seed stream tags; one purpose per tag keeps the streams independent.
constexpr std::uint64_t kTagInit = 0;
constexpr std::uint64_t kTagShuffle = 1;
constexpr std::uint64_t kTagProbe = 2;

std::vector<int> parse_int_list(const std::string& value, const std::string& key) {
  if (value == "none") return {};
  std::vector<int> out;
  for (const std::string& tok : text::split(value, ',')) {
    out.push_back(static_cast<int>(text::parse_int_strict(tok, "key '" + key + "'")));
  }
  return out;
}

std::string format_int_list(const std::vector<int>& values) {
  if (values.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::map<int, int> parse_pair_map(const std::string& value, const std::string& key) {
  std::map<int, int> out;
  for (const std::string& tok : text::split(value, ',')) {
    const std::vector<std::string> parts = text::split(tok, ':');
    if (parts.size() != 2) {
      throw std::runtime_error("key '" + key + "': expected from:to pairs, got '" + tok + "'");
    }
    const int from = static_cast<int>(text::parse_int_strict(parts[0], "key '" + key + "'"));
    const int to = static_cast<int>(text::parse_int_strict(parts[1], "key '" + key + "'"));
    if (!out.emplace(from, to).second) {
      throw std::runtime_error("key '" + key + "': duplicate source class " + parts[0]);
    }
  }
  return out;
}

std::string format_pair_map(const std::map<int, int>& pairs) {
  std::string out;
  for (const auto& [from, to] : pairs) {
    if (!out.empty()) out += ',';
    out += std::to_string(from);
    out += ':';
    out += std::to_string(to);
  }
  return out;
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw std::runtime_error("key '" + key + "': expected true or false, got '" + value + "'");
}

std::string opt_cell(const std::optional<double>& v) {
  return v ? text::format_double(*v) : std::string();
}

}  // namespace

void ExperimentConfig::resolve() {
  if (!k) k = epochs / 4;
  if (!lr_milestones) {
    std::vector<int> defaults{epochs / 2, 3 * epochs / 4};
    std::vector<int> kept;
    for (int m : defaults) {
      if (m > 0 && m < epochs && (kept.empty() || kept.back() != m)) kept.push_back(m);
    }
    lr_milestones = std::move(kept);
  }
  if (!data_seed) data_seed = seed;
  optim.k = *k;
  noise.seed = data::noise_seed_for(*data_seed);
}

void ExperimentConfig::validate() const {
  if (!k || !lr_milestones || !data_seed) {
    throw std::invalid_argument("config must be resolved before validation");
  }
  optim.validate();
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  if (!(lr_decay > 0.0)) throw std::invalid_argument("lr_decay must be positive");
  for (std::size_t i = 0; i < lr_milestones->size(); ++i) {
    if ((*lr_milestones)[i] < 0) throw std::invalid_argument("lr milestones must be nonnegative");
    if (i > 0 && (*lr_milestones)[i] <= (*lr_milestones)[i - 1]) {
      throw std::invalid_argument("lr milestones must be strictly increasing");
    }
  }
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("hidden layer sizes must be positive");
  }
  if (probe_size < 1) throw std::invalid_argument("probe_size must be at least 1");
  if (kernels != "auto" && kernels != "scalar" && kernels != "avx2") {
    throw std::invalid_argument("kernels must be auto, scalar, or avx2");
  }
  if (data_path.empty()) {
    if (synth_n < 1) throw std::invalid_argument("n must be at least 1");
    if (synth_test_n < 1) throw std::invalid_argument("test_n must be at least 1");
    if (synth_classes < 2) throw std::invalid_argument("classes must be at least 2");
    if (synth_dim < 1) throw std::invalid_argument("dim must be at least 1");
    if (!(synth_separation > 0.0)) throw std::invalid_argument("separation must be positive");
    noise.validate(synth_classes);
  } else {
    if (test_data_path.empty()) {
      throw std::invalid_argument("file-based runs need test_data alongside data");
    }
    if (noise.kind != data::NoiseKind::none) {
      throw std::invalid_argument(
          "noise injection applies to synthesized training data; corrupt files with make-data");
    }
  }
}

std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = text::trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    const std::size_t eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key=value, got '" + trimmed + "'");
    }
    pairs.emplace_back(text::trim(trimmed.substr(0, eq)), text::trim(trimmed.substr(eq + 1)));
  }
  return pairs;
}

void apply_kv(ExperimentConfig& config, const std::string& key, const std::string& value) {
  try {
    const std::string where = "key '" + key + "'";
    if (key == "mode") {
      config.optim.mode = optim::mode_from_string(value);
    } else if (key == "epochs") {
      config.epochs = static_cast<int>(text::parse_int_strict(value, where));
    } else if (key == "batch") {
      config.batch_size = static_cast<int>(text::parse_int_strict(value, where));
    } else if (key == "eta") {
      config.optim.eta = text::parse_double_strict(value, where);
    } else if (key == "lr_decay") {
      config.lr_decay = text::parse_double_strict(value, where);
    } else if (key == "lr_milestones") {
      config.lr_milestones = parse_int_list(value, key);
    } else if (key == "rho") {
      config.optim.rho = text::parse_double_strict(value, where);
    } else if (key == "alpha") {
      config.optim.alpha_target = text::parse_double_strict(value, where);
    } else if (key == "k") {
      config.k = static_cast<int>(text::parse_int_strict(value, where));
    } else if (key == "momentum") {
      config.optim.momentum = text::parse_double_strict(value, where);
    } else if (key == "weight_decay") {
      config.optim.weight_decay = text::parse_double_strict(value, where);
    } else if (key == "seed") {
      config.seed = text::parse_uint_strict(value, where);
    } else if (key == "hidden") {
      config.hidden = parse_int_list(value, key);
    } else if (key == "activation") {
      config.activation = model::activation_from_string(value);
    } else if (key == "data") {
      config.data_path = value;
    } else if (key == "test_data") {
      config.test_data_path = value;
    } else if (key == "n") {
      config.synth_n = static_cast<std::size_t>(text::parse_uint_strict(value, where));
    } else if (key == "classes") {
      config.synth_classes = static_cast<int>(text::parse_int_strict(value, where));
    } else if (key == "dim") {
      config.synth_dim = static_cast<int>(text::parse_int_strict(value, where));
    } else if (key == "separation") {
      config.synth_separation = text::parse_double_strict(value, where);
    } else if (key == "test_n") {
      config.synth_test_n = static_cast<std::size_t>(text::parse_uint_strict(value, where));
    } else if (key == "data_seed") {
      config.data_seed = text::parse_uint_strict(value, where);
    } else if (key == "noise_kind") {
      config.noise.kind = data::noise_kind_from_string(value);
    } else if (key == "noise_rate") {
      config.noise.rate = text::parse_double_strict(value, where);
    } else if (key == "pair_map") {
      config.noise.pair_map = parse_pair_map(value, key);
    } else if (key == "diagnostics") {
      config.diagnostics = parse_bool(value, key);
    } else if (key == "probe_size") {
      config.probe_size = static_cast<int>(text::parse_int_strict(value, where));
    } else if (key == "kernels") {
      config.kernels = value;
    } else if (key == "out") {
      config.output_dir = value;
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  } catch (const std::runtime_error& e) {
    throw std::invalid_argument(e.what());
  }
}

std::string config_to_string(const ExperimentConfig& config) {
  if (!config.k || !config.lr_milestones || !config.data_seed) {
    throw std::invalid_argument("config must be resolved before serialization");
  }
  std::string out;
  auto kv = [&out](const std::string& key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  kv("mode", optim::to_string(config.optim.mode));
  kv("epochs", std::to_string(config.epochs));
  kv("batch", std::to_string(config.batch_size));
  kv("eta", text::format_double(config.optim.eta));
  kv("lr_decay", text::format_double(config.lr_decay));
  kv("lr_milestones", format_int_list(*config.lr_milestones));
  kv("rho", text::format_double(config.optim.rho));
  kv("alpha", text::format_double(config.optim.alpha_target));
  kv("k", std::to_string(*config.k));
  kv("momentum", text::format_double(config.optim.momentum));
  kv("weight_decay", text::format_double(config.optim.weight_decay));
  kv("seed", std::to_string(config.seed));
  kv("hidden", format_int_list(config.hidden));
  kv("activation", model::to_string(config.activation));
  if (!config.data_path.empty()) {
    kv("data", config.data_path);
    kv("test_data", config.test_data_path);
  } else {
    kv("n", std::to_string(config.synth_n));
    kv("classes", std::to_string(config.synth_classes));
    kv("dim", std::to_string(config.synth_dim));
    kv("separation", text::format_double(config.synth_separation));
    kv("test_n", std::to_string(config.synth_test_n));
    kv("data_seed", std::to_string(*config.data_seed));
    kv("noise_kind", data::to_string(config.noise.kind));
    kv("noise_rate", text::format_double(config.noise.rate));
    if (config.noise.kind == data::NoiseKind::asymmetric_pairmap) {
      kv("pair_map", format_pair_map(config.noise.pair_map));
    }
  }
  kv("diagnostics", config.diagnostics ? "true" : "false");
  kv("probe_size", std::to_string(config.probe_size));
  kv("kernels", config.kernels);
  kv("out", config.output_dir);
  return out;
}

void write_config(const ExperimentConfig& config, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << config_to_string(config);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

double lr_schedule(int epoch, double base_eta, const std::vector<int>& milestones, double decay) {
  if (epoch < 0) throw std::invalid_argument("epoch must be nonnegative");
  double eta = base_eta;
  for (int m : milestones) {
    if (m <= epoch) eta *= decay;
  }
  return eta;
}

Batch gather(const data::LabeledDataset& ds, const std::vector<std::uint32_t>& indices) {
  Batch batch;
  batch.dim = ds.dim;
  batch.features.reserve(indices.size() * static_cast<std::size_t>(ds.dim));
  batch.labels.reserve(indices.size());
  batch.is_noisy.reserve(indices.size());
  for (std::uint32_t idx : indices) {
    if (idx >= ds.size()) throw std::invalid_argument("gather index out of range");
    const double* row = ds.row(idx);
    batch.features.insert(batch.features.end(), row, row + ds.dim);
    batch.labels.push_back(ds.observed_labels[idx]);
    batch.is_noisy.push_back(ds.is_noisy[idx]);
  }
  return batch;
}

SplitAccuracy evaluate_split(const ParamVector& params, const ModelSpec& spec,
                             const data::LabeledDataset& ds) {
  if (ds.size() == 0) throw std::invalid_argument("cannot evaluate an empty dataset");
  constexpr std::size_t kChunk = 1024;
  const int classes = spec.num_classes();
  std::size_t clean_total = 0, clean_hit = 0, noisy_total = 0, noisy_hit = 0;

  for (std::size_t start = 0; start < ds.size(); start += kChunk) {
    const std::size_t stop = std::min(ds.size(), start + kChunk);
    Batch chunk;
    chunk.dim = ds.dim;
    chunk.features.assign(ds.row(start), ds.row(start) + (stop - start) * ds.dim);
    chunk.labels.assign(ds.observed_labels.begin() + start, ds.observed_labels.begin() + stop);
    chunk.is_noisy.assign(ds.is_noisy.begin() + start, ds.is_noisy.begin() + stop);
    const model::ForwardResult fwd = model::forward_loss(params, chunk, spec);
    for (std::size_t r = 0; r < chunk.size(); ++r) {
      const double* z = fwd.logits.data() + r * static_cast<std::size_t>(classes);
      int best = 0;
      for (int c = 1; c < classes; ++c) {
        if (z[c] > z[best]) best = c;
      }
      const bool hit = best == chunk.labels[r];
      if (chunk.is_noisy[r]) {
        ++noisy_total;
        noisy_hit += hit;
      } else {
        ++clean_total;
        clean_hit += hit;
      }
    }
  }

  SplitAccuracy acc;
  if (clean_total > 0) {
    acc.clean = static_cast<double>(clean_hit) / static_cast<double>(clean_total);
  }
  if (noisy_total > 0) {
    acc.noisy = static_cast<double>(noisy_hit) / static_cast<double>(noisy_total);
  }
  acc.overall = static_cast<double>(clean_hit + noisy_hit) / static_cast<double>(ds.size());
  return acc;
}

std::pair<data::LabeledDataset, data::LabeledDataset> synthesize_datasets(
    const ExperimentConfig& config) {
  if (!config.data_seed) throw std::invalid_argument("config must be resolved");
  const std::size_t total = config.synth_n + config.synth_test_n;
  data::LabeledDataset all = data::make_gaussian_blobs(total, config.synth_classes,
                                                       config.synth_dim, config.synth_separation,
                                                       *config.data_seed);
  auto take = [&all](std::size_t begin, std::size_t end) {
    data::LabeledDataset part;
    part.dim = all.dim;
    part.num_classes = all.num_classes;
    part.features.assign(all.row(begin), all.row(begin) + (end - begin) * all.dim);
    part.true_labels.assign(all.true_labels.begin() + begin, all.true_labels.begin() + end);
    part.observed_labels.assign(all.observed_labels.begin() + begin,
                                all.observed_labels.begin() + end);
    part.is_noisy.assign(all.is_noisy.begin() + begin, all.is_noisy.begin() + end);
    return part;
  };
  data::LabeledDataset train = take(0, config.synth_n);
  data::LabeledDataset test = take(config.synth_n, total);
  train = data::apply_noise(std::move(train), config.noise);
  return {std::move(train), std::move(test)};
}

namespace {

ParamVector step_gradient(optim::Mode mode, const ParamVector& params, const Batch& batch,
                          const ModelSpec& spec, double eff_rho, double alpha) {
  switch (mode) {
    case optim::Mode::sgd:
      return model::backward(params, batch, spec);
    case optim::Mode::sam:
      return optim::sam_gradient(params, batch, spec, eff_rho).second;
    case optim::Mode::saner: {
      auto [g_sgd, g_sam] = optim::sam_gradient(params, batch, spec, eff_rho);
      return optim::reweight_two_step(std::move(g_sgd), std::move(g_sam), alpha).g_final;
    }
    case optim::Mode::sgd_gr_a:
    case optim::Mode::sgd_gr_b: {
      auto [g_sgd, g_sam] = optim::sam_gradient(params, batch, spec, eff_rho);
      const std::vector<double> ratio = optim::component_ratio(g_sam, g_sgd);
      const diag::GroupPartition partition = diag::partition_groups(ratio);
      const diag::HybridKind kind = mode == optim::Mode::sgd_gr_a ? diag::HybridKind::sgd_gr_a
                                                                  : diag::HybridKind::sgd_gr_b;
      return diag::hybrid_gradient(g_sgd, g_sam, partition, kind);
    }
  }
  throw std::invalid_argument("unhandled optimizer mode");
}

}  // namespace

RunRecord run_training(const ExperimentConfig& config_in) {
  ExperimentConfig config = config_in;
  config.resolve();
  config.validate();
  kernels::select(config.kernels);

  data::LabeledDataset train, test;
  if (!config.data_path.empty()) {
    train = data::load_dataset(config.data_path);
    test = data::load_dataset(config.test_data_path);
    if (test.dim != train.dim || test.num_classes != train.num_classes) {
      throw std::invalid_argument("train and test datasets disagree on dim or classes");
    }
  } else {
    std::tie(train, test) = synthesize_datasets(config);
  }

  ModelSpec spec;
  spec.layer_sizes.push_back(train.dim);
  for (int h : config.hidden) spec.layer_sizes.push_back(h);
  spec.layer_sizes.push_back(train.num_classes);
  spec.activation = config.activation;
  spec.validate();

  RunRecord record;
  record.spec = spec;
  record.train_noise_rate = train.realized_noise_rate();

  ParamVector params = model::init_params(spec, derive_seed(config.seed, kTagInit));
  optim::OptimizerState state;
  Rng shuffle_rng(derive_seed(config.seed, kTagShuffle));

  Batch probe;
  if (config.diagnostics) {
    std::vector<std::uint32_t> all(train.size());
    std::iota(all.begin(), all.end(), 0u);
    Rng probe_rng(derive_seed(config.seed, kTagProbe));
    probe_rng.shuffle(all);
    const std::size_t count = std::min<std::size_t>(config.probe_size, train.size());
    std::vector<std::uint32_t> chosen(all.begin(), all.begin() + count);
    std::sort(chosen.begin(), chosen.end());
    probe = gather(train, chosen);
  }

  std::vector<std::uint32_t> order(train.size());
  std::iota(order.begin(), order.end(), 0u);
  const optim::Mode mode = config.optim.mode;
  const double eff_rho = config.optim.effective_rho();

  try {
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      const double eta =
          lr_schedule(epoch, config.optim.eta, *config.lr_milestones, config.lr_decay);
      const double alpha =
          mode == optim::Mode::saner
              ? optim::alpha_schedule(epoch, config.optim.k, config.optim.alpha_target)
              : 1.0;

      shuffle_rng.shuffle(order);
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t stop =
            std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
        const std::vector<std::uint32_t> batch_idx(order.begin() + start, order.begin() + stop);
        const Batch batch = gather(train, batch_idx);
        const ParamVector g_final = step_gradient(mode, params, batch, spec, eff_rho, alpha);
        optim::apply_update(params, g_final, state, config.optim, eta);
      }

      MetricsRow row;
      row.epoch = epoch;
      row.eta = eta;
      row.alpha = alpha;
      const SplitAccuracy train_acc = evaluate_split(params, spec, train);
      const SplitAccuracy test_acc = evaluate_split(params, spec, test);
      row.train_acc_overall = train_acc.overall;
      row.clean_train_acc = train_acc.clean;
      row.noisy_train_acc = train_acc.noisy;
      if (train_acc.clean && train_acc.noisy) {
        row.clean_noisy_gap = *train_acc.clean - *train_acc.noisy;
      }
      row.test_acc = test_acc.overall;
      row.generalization_gap = train_acc.overall - test_acc.overall;

      if (config.diagnostics) {
        auto [g_sgd, g_sam] = optim::sam_gradient(params, probe, spec, eff_rho);
        const std::vector<double> ratio = optim::component_ratio(g_sam, g_sgd);
        const std::vector<std::uint8_t> mask = optim::mask_b(ratio);
        const diag::GroupPartition partition = diag::partition_groups(ratio);
        const diag::GroupFractions fractions = diag::group_fractions(partition, ratio.size());
        row.frac_a = fractions.a;
        row.frac_b = fractions.b;
        row.frac_c = fractions.c;
        auto [g_clean, g_noise] = model::split_gradient(params, probe, spec);
        diag::DominanceSets sets = diag::dominance_sets(g_clean, g_noise, g_sgd);
        const diag::DominanceReport report = diag::pr_ratio(std::move(sets), mask);
        row.p_clean = report.p_clean;
        row.p_noise = report.p_noise;
        row.pr = report.pr;
      }
      record.rows.push_back(row);
    }
  } catch (const std::runtime_error& e) {
    record.aborted = true;
    record.abort_reason = e.what();
  }
  record.final_params = std::move(params);
  return record;
}

std::string metrics_to_string(const std::vector<MetricsRow>& rows) {
  std::string out(kMetricsHeader);
  out += '\n';
  for (const MetricsRow& row : rows) {
    out += std::to_string(row.epoch);
    out += ',';
    out += text::format_double(row.eta);
    out += ',';
    out += text::format_double(row.alpha);
    out += ',';
    out += text::format_double(row.train_acc_overall);
    out += ',';
    out += opt_cell(row.clean_train_acc);
    out += ',';
    out += opt_cell(row.noisy_train_acc);
    out += ',';
    out += opt_cell(row.clean_noisy_gap);
    out += ',';
    out += text::format_double(row.test_acc);
    out += ',';
    out += text::format_double(row.generalization_gap);
    out += ',';
    out += opt_cell(row.frac_a);
    out += ',';
    out += opt_cell(row.frac_b);
    out += ',';
    out += opt_cell(row.frac_c);
    out += ',';
    out += opt_cell(row.p_clean);
    out += ',';
    out += opt_cell(row.p_noise);
    out += ',';
    out += opt_cell(row.pr);
    out += '\n';
  }
  return out;
}

void write_metrics(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << metrics_to_string(rows);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<MetricsRow> read_metrics(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw std::runtime_error("metrics schema mismatch in '" + path + "': bad header");
  }
  std::vector<MetricsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    const std::vector<std::string> cells = text::split(line, ',');
    if (cells.size() != 15) {
      throw std::runtime_error(where + ": expected 15 columns, got " +
                               std::to_string(cells.size()));
    }
    auto required = [&where](const std::string& cell, const char* name) {
      if (cell.empty()) {
        throw std::runtime_error(where + ": column '" + name + "' must not be empty");
      }
      return text::parse_double_strict(cell, where);
    };
    auto optional_cell = [&where](const std::string& cell) -> std::optional<double> {
      if (cell.empty()) return std::nullopt;
      return text::parse_double_strict(cell, where);
    };
    MetricsRow row;
    row.epoch = static_cast<int>(text::parse_int_strict(cells[0], where));
    row.eta = required(cells[1], "eta");
    row.alpha = required(cells[2], "alpha");
    row.train_acc_overall = required(cells[3], "train_acc_overall");
    row.clean_train_acc = optional_cell(cells[4]);
    row.noisy_train_acc = optional_cell(cells[5]);
    row.test_acc = required(cells[7], "test_acc");
    row.frac_a = optional_cell(cells[9]);
    row.frac_b = optional_cell(cells[10]);
    row.frac_c = optional_cell(cells[11]);
    row.p_clean = optional_cell(cells[12]);
    row.p_noise = optional_cell(cells[13]);
    row.pr = optional_cell(cells[14]);
    // Derived columns must at least parse, but their values are recomputed
    // from their parts rather than trusted.
    optional_cell(cells[6]);
    required(cells[8], "generalization_gap");
    if (row.clean_train_acc && row.noisy_train_acc) {
      row.clean_noisy_gap = *row.clean_train_acc - *row.noisy_train_acc;
    }
    row.generalization_gap = row.train_acc_overall - row.test_acc;
    rows.push_back(row);
  }
  return rows;
}

std::string to_string(ComparisonAssertion a) {
  switch (a) {
    case ComparisonAssertion::noisy_acc_ordering: return "noisy_acc_ordering";
    case ComparisonAssertion::test_acc_ordering: return "test_acc_ordering";
    case ComparisonAssertion::pr_late_phase: return "pr_late_phase";
  }
  return "noisy_acc_ordering";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

ComparisonAssertion assertion_from_string(const std::string& name) {
  if (name == "noisy_acc_ordering") return ComparisonAssertion::noisy_acc_ordering;
  if (name == "test_acc_ordering") return ComparisonAssertion::test_acc_ordering;
  if (name == "pr_late_phase") return ComparisonAssertion::pr_late_phase;
  throw std::invalid_argument("unknown assertion '" + name + "'");
}

namespace {

std::optional<double> median_of(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

RunDigest digest_run(const NamedRun& run) {
  RunDigest digest;
  digest.name = run.name;
  digest.final_noisy_acc = run.rows.back().noisy_train_acc;
  digest.best_test_acc = run.rows.front().test_acc;
  for (const MetricsRow& row : run.rows) {
    digest.best_test_acc = std::max(digest.best_test_acc, row.test_acc);
  }
  const std::size_t total = run.rows.size();
  const std::size_t window = (total + 2) / 3;
  std::vector<double> late_pr;
  for (std::size_t i = total - window; i < total; ++i) {
    if (run.rows[i].pr) late_pr.push_back(*run.rows[i].pr);
  }
  digest.late_pr_median = median_of(std::move(late_pr));
  return digest;
}

std::string digest_line(const RunDigest& d) {
  std::string line = "  " + d.name + ": final_noisy_acc=";
  line += d.final_noisy_acc ? text::format_double(*d.final_noisy_acc) : "undefined";
  line += " best_test_acc=" + text::format_double(d.best_test_acc);
  line += " late_pr_median=";
  line += d.late_pr_median ? text::format_double(*d.late_pr_median) : "undefined";
  return line;
}

}  // namespace

ComparisonReport compare_runs(const std::vector<NamedRun>& runs, ComparisonAssertion assertion) {
  if (runs.size() < 2) throw std::invalid_argument("compare_runs needs at least two runs");
  if (runs.front().rows.empty()) throw std::invalid_argument("compare_runs got an empty run");
  for (const NamedRun& run : runs) {
    if (run.rows.size() != runs.front().rows.size()) {
      throw std::invalid_argument("compare_runs: epoch grids are not aligned");
    }
    for (std::size_t i = 0; i < run.rows.size(); ++i) {
      if (run.rows[i].epoch != runs.front().rows[i].epoch) {
        throw std::invalid_argument("compare_runs: epoch grids are not aligned");
      }
    }
  }

  ComparisonReport report;
  report.assertion = assertion;
  for (const NamedRun& run : runs) report.runs.push_back(digest_run(run));

  bool usable = true;
  double margin = std::numeric_limits<double>::infinity();
  auto adjacent = [&](auto&& value_of, double direction) {
    // direction +1: expect strictly decreasing; -1: strictly increasing.
    for (std::size_t i = 1; i < report.runs.size(); ++i) {
      const auto prev = value_of(report.runs[i - 1]);
      const auto next = value_of(report.runs[i]);
      if (!prev || !next) {
        usable = false;
        return;
      }
      margin = std::min(margin, direction * (*prev - *next));
    }
  };

  switch (assertion) {
    case ComparisonAssertion::noisy_acc_ordering:
      adjacent([](const RunDigest& d) { return d.final_noisy_acc; }, 1.0);
      report.verdict = !usable          ? Verdict::inconclusive
                       : margin > 0.0   ? Verdict::pass
                                        : Verdict::fail;
      break;
    case ComparisonAssertion::test_acc_ordering:
      adjacent([](const RunDigest& d) { return std::optional<double>(d.best_test_acc); }, -1.0);
      report.verdict = margin > 0.0 ? Verdict::pass : Verdict::fail;
      break;
    case ComparisonAssertion::pr_late_phase:
      adjacent([](const RunDigest& d) { return d.late_pr_median; }, 1.0);
      report.verdict = !usable          ? Verdict::inconclusive
                       : margin >= 0.0  ? Verdict::pass
                                        : Verdict::fail;
      break;
  }
  report.margin = usable ? margin : 0.0;

  report.text = "assertion: " + to_string(assertion) + "\n";
  report.text += "verdict: " + to_string(report.verdict) + "\n";
  report.text += "margin: " + text::format_double(report.margin) + "\n";
  for (const RunDigest& d : report.runs) {
    report.text += digest_line(d);
    report.text += '\n';
  }
  return report;
}

}  // namespace sanerlab::harness
