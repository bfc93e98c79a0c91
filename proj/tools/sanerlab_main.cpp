// sanerlab command line: synthesize datasets, train with sgd/sam/saner and
// the hybrid gradient modes, sweep grids, extract diagnostics, and plot
// metric trajectories as SVG.
//
// Exit codes: 0 success, 2 usage error (bad flags, bad config, bad column),
// 3 runtime failure (I/O, numeric abort, infeasible synthesis).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "sanerlab/data.hpp"
#include "sanerlab/harness.hpp"
#include "sanerlab/kernels.hpp"
#include "sanerlab/plot.hpp"

namespace fs = std::filesystem;
using sanerlab::harness::ExperimentConfig;
using sanerlab::harness::MetricsRow;
using sanerlab::harness::RunRecord;

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Flag overrides carried as key=value pairs so config files and the command
// line share one vocabulary (sanerlab::harness::apply_kv).
struct KvCollector {
  std::vector<std::pair<std::string, std::string>> pairs;

  void add_option(CLI::App* cmd, const std::string& flag, const std::string& key,
                  const std::string& help) {
    cmd->add_option_function<std::string>(
           flag,
           [this, key](const std::string& value) { pairs.emplace_back(key, value); }, help)
        ->type_name("TEXT");
  }
};

void add_run_options(CLI::App* cmd, std::shared_ptr<std::string> config_path, KvCollector& kv) {
  cmd->add_option("--config", *config_path, "key=value config file; flags override it");
  kv.add_option(cmd, "--mode", "mode", "sgd, sam, saner, sgd_gr_a, or sgd_gr_b");
  kv.add_option(cmd, "--epochs", "epochs", "training epochs");
  kv.add_option(cmd, "--batch", "batch", "mini-batch size");
  kv.add_option(cmd, "--eta", "eta", "base learning rate");
  kv.add_option(cmd, "--lr-decay", "lr_decay", "multiplicative decay at each milestone");
  kv.add_option(cmd, "--lr-milestones", "lr_milestones",
                "comma list of epochs, or 'none' (default: epochs/2 and 3*epochs/4)");
  kv.add_option(cmd, "--rho", "rho", "ascent-step radius");
  kv.add_option(cmd, "--alpha", "alpha", "target reweighting factor");
  kv.add_option(cmd, "--k", "k", "epochs to anneal alpha from 1 (default: epochs/4)");
  kv.add_option(cmd, "--momentum", "momentum", "momentum coefficient");
  kv.add_option(cmd, "--weight-decay", "weight_decay", "L2 coefficient on the final gradient");
  kv.add_option(cmd, "--seed", "seed", "run seed (init, shuffling, probe)");
  kv.add_option(cmd, "--hidden", "hidden", "comma list of hidden sizes, or 'none'");
  kv.add_option(cmd, "--activation", "activation", "relu or tanh");
  kv.add_option(cmd, "--data", "data", "training dataset file (saner-ds v1)");
  kv.add_option(cmd, "--test-data", "test_data", "test dataset file");
  kv.add_option(cmd, "--n", "n", "synthesized training samples");
  kv.add_option(cmd, "--classes", "classes", "synthesized class count");
  kv.add_option(cmd, "--dim", "dim", "synthesized feature dimension");
  kv.add_option(cmd, "--separation", "separation", "minimum cluster center distance");
  kv.add_option(cmd, "--test-n", "test_n", "synthesized test samples");
  kv.add_option(cmd, "--data-seed", "data_seed", "dataset seed (default: run seed)");
  kv.add_option(cmd, "--noise-kind", "noise_kind",
                "none, symmetric, asymmetric_circular, asymmetric_pairmap, instance_proxy");
  kv.add_option(cmd, "--noise-rate", "noise_rate", "corruption rate in [0,1]");
  kv.add_option(cmd, "--pair-map", "pair_map", "from:to pairs for asymmetric_pairmap");
  kv.add_option(cmd, "--diagnostics", "diagnostics", "true or false");
  kv.add_option(cmd, "--probe-size", "probe_size", "probe batch size for diagnostics");
  kv.add_option(cmd, "--kernels", "kernels", "auto, scalar, or avx2");
  kv.add_option(cmd, "--out", "out", "output directory");
}

ExperimentConfig assemble_config(const std::string& config_path,
                                 const std::vector<std::pair<std::string, std::string>>& flags) {
  ExperimentConfig config;
  if (!config_path.empty()) {
    for (const auto& [key, value] : sanerlab::harness::parse_config_file(config_path)) {
      sanerlab::harness::apply_kv(config, key, value);
    }
  }
  for (const auto& [key, value] : flags) {
    sanerlab::harness::apply_kv(config, key, value);
  }
  return config;
}

// Runs training and persists metrics plus the resolved config. Returns the
// record; aborted runs still persist what they produced.
RunRecord execute_run(ExperimentConfig config) {
  config.resolve();
  config.validate();
  fs::create_directories(config.output_dir);
  RunRecord record = sanerlab::harness::run_training(config);
  const fs::path dir(config.output_dir);
  sanerlab::harness::write_metrics(record.rows, (dir / "metrics.csv").string());
  config.kernels = sanerlab::kernels::active().name;  // pin what actually ran
  sanerlab::harness::write_config(config, (dir / "config.resolved").string());
  return record;
}

int cmd_make_data(std::size_t n, int classes, int dim, double separation, std::uint64_t seed,
                  const std::string& kind_name, double rate, const std::string& pair_map_text,
                  const std::string& out_path) {
  sanerlab::data::NoiseSpec noise;
  noise.kind = sanerlab::data::noise_kind_from_string(kind_name);
  noise.rate = rate;
  noise.seed = sanerlab::data::noise_seed_for(seed);
  if (!pair_map_text.empty()) {
    ExperimentConfig scratch;  // reuse the shared pair-map parser
    sanerlab::harness::apply_kv(scratch, "pair_map", pair_map_text);
    noise.pair_map = scratch.noise.pair_map;
  }

  sanerlab::data::LabeledDataset ds =
      sanerlab::data::make_gaussian_blobs(n, classes, dim, separation, seed);
  ds = sanerlab::data::apply_noise(std::move(ds), noise);
  if (const fs::path parent = fs::path(out_path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  sanerlab::data::save_dataset(ds, out_path);

  std::size_t flips = 0;
  for (std::uint8_t flag : ds.is_noisy) flips += flag != 0;
  std::ofstream summary(out_path + ".summary", std::ios::binary);
  if (!summary) throw std::runtime_error("cannot write '" + out_path + ".summary'");
  summary << "n=" << ds.size() << "\nclasses=" << ds.num_classes << "\ndim=" << ds.dim
          << "\nseparation=" << format_double(separation) << "\nkind=" << to_string(noise.kind)
          << "\nrequested_rate=" << format_double(rate)
          << "\nrealized_rate=" << format_double(ds.realized_noise_rate()) << "\nflips=" << flips
          << "\nseed=" << seed << "\n";
  std::cout << "wrote " << out_path << " (n=" << ds.size()
            << ", realized_rate=" << format_double(ds.realized_noise_rate()) << ")\n";
  return 0;
}

int cmd_run(const std::string& config_path,
            const std::vector<std::pair<std::string, std::string>>& flags) {
  ExperimentConfig config = assemble_config(config_path, flags);
  RunRecord record = execute_run(std::move(config));
  if (record.aborted || record.rows.empty()) {
    std::cerr << "run aborted: " << record.abort_reason << " (partial metrics persisted)\n";
    return 3;
  }
  const MetricsRow& last = record.rows.back();
  std::cout << "run complete: " << record.rows.size()
            << " epochs, final test_acc=" << format_double(last.test_acc)
            << ", final noisy_train_acc="
            << (last.noisy_train_acc ? format_double(*last.noisy_train_acc) : "undefined") << "\n";
  return 0;
}

int cmd_diagnose(const std::string& config_path,
                 const std::vector<std::pair<std::string, std::string>>& flags) {
  ExperimentConfig config = assemble_config(config_path, flags);
  sanerlab::harness::apply_kv(config, "diagnostics", "true");
  config.resolve();
  config.validate();
  fs::create_directories(config.output_dir);
  RunRecord record = sanerlab::harness::run_training(config);
  if (record.train_noise_rate == 0.0) {
    std::cerr << "warning: training data has no noisy samples; p_clean/p_noise/pr stay empty\n";
  }

  std::string csv = "epoch,frac_a,frac_b,frac_c,p_clean,p_noise,pr\n";
  auto cell = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const MetricsRow& row : record.rows) {
    csv += std::to_string(row.epoch) + ',' + cell(row.frac_a) + ',' + cell(row.frac_b) + ',' +
           cell(row.frac_c) + ',' + cell(row.p_clean) + ',' + cell(row.p_noise) + ',' +
           cell(row.pr) + '\n';
  }
  const fs::path dir(config.output_dir);
  std::ofstream out(dir / "diagnostics.csv", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write diagnostics.csv");
  out << csv;
  config.kernels = sanerlab::kernels::active().name;
  sanerlab::harness::write_config(config, (dir / "config.resolved").string());
  if (record.aborted) {
    std::cerr << "run aborted: " << record.abort_reason << " (partial diagnostics persisted)\n";
    return 3;
  }
  std::cout << "diagnostics complete: " << record.rows.size() << " epochs\n";
  return 0;
}

std::vector<std::string> split_list(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const std::string& chunk : raw) {
    std::size_t start = 0;
    while (true) {
      const std::size_t pos = chunk.find(',', start);
      if (pos == std::string::npos) {
        out.push_back(chunk.substr(start));
        break;
      }
      out.push_back(chunk.substr(start, pos - start));
      start = pos + 1;
    }
  }
  return out;
}

int cmd_sweep(const std::string& config_path,
              const std::vector<std::pair<std::string, std::string>>& flags,
              const std::map<std::string, std::vector<std::string>>& axes,
              const std::string& assert_name, const std::string& out_dir) {
  // Cartesian product in fixed axis order so run order (and the report) is
  // reproducible.
  const std::vector<std::string> axis_order = {"mode", "alpha", "rho", "k", "seed"};
  std::vector<std::pair<std::string, std::vector<std::string>>> grid;
  for (const std::string& axis : axis_order) {
    auto it = axes.find(axis);
    if (it != axes.end() && !it->second.empty()) grid.emplace_back(axis, it->second);
  }

  std::vector<std::vector<std::pair<std::string, std::string>>> cells{{}};
  for (const auto& [axis, values] : grid) {
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& cell : cells) {
      for (const std::string& value : values) {
        auto extended = cell;
        extended.emplace_back(axis, value);
        next.push_back(std::move(extended));
      }
    }
    cells = std::move(next);
  }

  fs::create_directories(out_dir);
  std::vector<sanerlab::harness::NamedRun> named;
  bool any_aborted = false;
  for (const auto& cell : cells) {
    std::string name;
    for (const auto& [axis, value] : cell) {
      if (!name.empty()) name += '_';
      name += axis + "=" + value;
    }
    if (name.empty()) name = "single";

    ExperimentConfig config = assemble_config(config_path, flags);
    for (const auto& [axis, value] : cell) {
      sanerlab::harness::apply_kv(config, axis, value);
    }
    config.output_dir = (fs::path(out_dir) / name).string();
    std::cout << "sweep cell " << name << "\n";
    RunRecord record = execute_run(std::move(config));
    if (record.aborted) {
      std::cerr << "cell " << name << " aborted: " << record.abort_reason << "\n";
      any_aborted = true;
    }
    named.push_back({name, std::move(record.rows)});
  }

  std::string report = "cell,final_noisy_train_acc,best_test_acc,late_pr_median\n";
  for (const auto& run : named) {
    if (run.rows.empty()) {
      report += run.name + ",aborted,aborted,aborted\n";
      continue;
    }
    const MetricsRow& last = run.rows.back();
    double best_test = last.test_acc;
    for (const MetricsRow& row : run.rows) best_test = std::max(best_test, row.test_acc);
    const std::size_t total = run.rows.size();
    const std::size_t window = (total + 2) / 3;
    std::vector<double> late;
    for (std::size_t i = total - window; i < total; ++i) {
      if (run.rows[i].pr) late.push_back(*run.rows[i].pr);
    }
    std::string pr_text = "undefined";
    if (!late.empty()) {
      std::sort(late.begin(), late.end());
      const std::size_t mid = late.size() / 2;
      const double med =
          late.size() % 2 == 1 ? late[mid] : 0.5 * (late[mid - 1] + late[mid]);
      pr_text = format_double(med);
    }
    report += run.name + ',' +
              (last.noisy_train_acc ? format_double(*last.noisy_train_acc) : "undefined") + ',' +
              format_double(best_test) + ',' + pr_text + '\n';
  }
  if (!assert_name.empty() && named.size() >= 2 && !any_aborted) {
    const auto verdict = sanerlab::harness::compare_runs(
        named, sanerlab::harness::assertion_from_string(assert_name));
    report += "\n" + verdict.text;
    std::cout << verdict.text;
  } else if (!assert_name.empty() && any_aborted) {
    report += "\nassertion skipped: at least one run aborted\n";
  }
  std::ofstream out(fs::path(out_dir) / "report.txt", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write sweep report");
  out << report;
  std::cout << "sweep complete: " << named.size() << " runs under " << out_dir << "\n";
  return any_aborted ? 3 : 0;
}

int cmd_plot(const std::vector<std::string>& csv_args, const std::vector<std::string>& column_args,
             const std::string& out_dir, const std::string& title) {
  const std::vector<std::string> csvs = split_list(csv_args);
  const std::vector<std::string> columns = split_list(column_args);

  using Getter = std::optional<double> (*)(const MetricsRow&);
  static const std::map<std::string, Getter> getters = {
      {"eta", [](const MetricsRow& r) { return std::optional<double>(r.eta); }},
      {"alpha", [](const MetricsRow& r) { return std::optional<double>(r.alpha); }},
      {"train_acc_overall",
       [](const MetricsRow& r) { return std::optional<double>(r.train_acc_overall); }},
      {"clean_train_acc", [](const MetricsRow& r) { return r.clean_train_acc; }},
      {"noisy_train_acc", [](const MetricsRow& r) { return r.noisy_train_acc; }},
      {"clean_noisy_gap", [](const MetricsRow& r) { return r.clean_noisy_gap; }},
      {"test_acc", [](const MetricsRow& r) { return std::optional<double>(r.test_acc); }},
      {"generalization_gap",
       [](const MetricsRow& r) { return std::optional<double>(r.generalization_gap); }},
      {"frac_a", [](const MetricsRow& r) { return r.frac_a; }},
      {"frac_b", [](const MetricsRow& r) { return r.frac_b; }},
      {"frac_c", [](const MetricsRow& r) { return r.frac_c; }},
      {"p_clean", [](const MetricsRow& r) { return r.p_clean; }},
      {"p_noise", [](const MetricsRow& r) { return r.p_noise; }},
      {"pr", [](const MetricsRow& r) { return r.pr; }},
  };

  for (const std::string& column : columns) {
    if (!getters.count(column)) {
      std::string known;
      for (const auto& [name, getter] : getters) {
        if (!known.empty()) known += ", ";
        known += name;
      }
      throw std::invalid_argument("unknown column '" + column + "'; available: " + known);
    }
  }

  struct Loaded {
    std::string name;
    std::vector<MetricsRow> rows;
  };
  std::vector<Loaded> loaded;
  for (const std::string& path : csvs) {
    Loaded l;
    const fs::path p(path);
    l.name = p.filename() == "metrics.csv" && p.has_parent_path()
                 ? p.parent_path().filename().string()
                 : p.stem().string();
    l.rows = sanerlab::harness::read_metrics(path);
    if (l.rows.empty()) throw std::runtime_error("metrics file '" + path + "' has no rows");
    loaded.push_back(std::move(l));
  }

  fs::create_directories(out_dir);
  constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
  for (const std::string& column : columns) {
    const Getter get = getters.at(column);
    std::vector<sanerlab::plot::Series> series;
    for (const Loaded& l : loaded) {
      sanerlab::plot::Series s;
      s.label = l.name;
      for (const MetricsRow& row : l.rows) {
        s.x.push_back(static_cast<double>(row.epoch));
        const std::optional<double> v = get(row);
        s.y.push_back(v ? *v : kNan);
      }
      series.push_back(std::move(s));
    }
    const std::string svg = sanerlab::plot::render_line_chart(
        title.empty() ? column : title, "epoch", column, series);
    const fs::path out_path = fs::path(out_dir) / (column + ".svg");
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + out_path.string() + "'");
    out << svg;
    std::cout << "wrote " << out_path.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"label-noise optimizer laboratory"};
  app.require_subcommand(1);

  // make-data
  auto* make_data = app.add_subcommand("make-data", "synthesize a dataset file");
  std::size_t md_n = 5000;
  int md_classes = 10, md_dim = 32;
  double md_separation = 10.0, md_rate = 0.0;
  std::uint64_t md_seed = 1;
  std::string md_kind = "none", md_pair_map, md_out;
  make_data->add_option("--n", md_n, "sample count");
  make_data->add_option("--classes", md_classes, "class count");
  make_data->add_option("--dim", md_dim, "feature dimension");
  make_data->add_option("--separation", md_separation, "minimum center distance");
  make_data->add_option("--seed", md_seed, "dataset seed");
  make_data->add_option("--kind", md_kind, "noise kind");
  make_data->add_option("--rate", md_rate, "noise rate in [0,1]");
  make_data->add_option("--pair-map", md_pair_map, "from:to pairs for asymmetric_pairmap");
  make_data->add_option("--out", md_out, "output dataset path")->required();

  // run
  auto* run = app.add_subcommand("run", "train once and write metrics.csv");
  auto run_config = std::make_shared<std::string>();
  KvCollector run_kv;
  add_run_options(run, run_config, run_kv);

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "train and write only the diagnostic columns");
  auto diag_config = std::make_shared<std::string>();
  KvCollector diag_kv;
  add_run_options(diagnose, diag_config, diag_kv);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "grid of runs plus a comparison report");
  auto sweep_config = std::make_shared<std::string>();
  KvCollector sweep_kv;
  std::vector<std::string> sw_modes, sw_alphas, sw_rhos, sw_ks, sw_seeds;
  std::string sw_assert, sw_out = "sweep_out";
  add_run_options(sweep, sweep_config, sweep_kv);
  sweep->add_option("--modes", sw_modes, "comma list of modes to sweep");
  sweep->add_option("--alphas", sw_alphas, "comma list of alpha targets to sweep");
  sweep->add_option("--rhos", sw_rhos, "comma list of rho values to sweep");
  sweep->add_option("--ks", sw_ks, "comma list of k values to sweep");
  sweep->add_option("--seeds", sw_seeds, "comma list of seeds to sweep");
  sweep->add_option("--assert", sw_assert,
                    "noisy_acc_ordering, test_acc_ordering, or pr_late_phase");
  sweep->add_option("--sweep-out", sw_out, "sweep root directory");

  // plot
  auto* plot = app.add_subcommand("plot", "render metric columns as SVG line charts");
  std::vector<std::string> pl_csvs, pl_columns;
  std::string pl_out = ".", pl_title;
  plot->add_option("--csv", pl_csvs, "metrics.csv paths (repeat or comma-separate)")->required();
  plot->add_option("--column", pl_columns, "metric columns (repeat or comma-separate)")
      ->required();
  plot->add_option("--out", pl_out, "output directory");
  plot->add_option("--title", pl_title, "chart title (default: column name)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (make_data->parsed()) {
      return cmd_make_data(md_n, md_classes, md_dim, md_separation, md_seed, md_kind, md_rate,
                           md_pair_map, md_out);
    }
    if (run->parsed()) return cmd_run(*run_config, run_kv.pairs);
    if (diagnose->parsed()) return cmd_diagnose(*diag_config, diag_kv.pairs);
    if (sweep->parsed()) {
      std::map<std::string, std::vector<std::string>> axes;
      if (!sw_modes.empty()) axes["mode"] = split_list(sw_modes);
      if (!sw_alphas.empty()) axes["alpha"] = split_list(sw_alphas);
      if (!sw_rhos.empty()) axes["rho"] = split_list(sw_rhos);
      if (!sw_ks.empty()) axes["k"] = split_list(sw_ks);
      if (!sw_seeds.empty()) axes["seed"] = split_list(sw_seeds);
      return cmd_sweep(*sweep_config, sweep_kv.pairs, axes, sw_assert, sw_out);
    }
    if (plot->parsed()) return cmd_plot(pl_csvs, pl_columns, pl_out, pl_title);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
