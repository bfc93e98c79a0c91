// Harness tests: configuration parsing and round-trips, the learning-rate
// schedule, split accuracy against an enumeration oracle, metrics CSV
// losslessness, run comparison verdicts, and end-to-end training determinism
// including the bitwise mode equivalences.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sanerlab/harness.hpp"
#include "sanerlab/kernels.hpp"
#include "sanerlab/rng.hpp"

using sanerlab::harness::ComparisonAssertion;
using sanerlab::harness::ExperimentConfig;
using sanerlab::harness::MetricsRow;
using sanerlab::harness::NamedRun;
using sanerlab::harness::RunRecord;
using sanerlab::harness::Verdict;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "sanerlab_harness_tests";
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Small, fast config used by the training tests.
ExperimentConfig tiny_config(const std::string& mode) {
  ExperimentConfig config;
  sanerlab::harness::apply_kv(config, "mode", mode);
  sanerlab::harness::apply_kv(config, "epochs", "3");
  sanerlab::harness::apply_kv(config, "batch", "64");
  sanerlab::harness::apply_kv(config, "n", "360");
  sanerlab::harness::apply_kv(config, "classes", "4");
  sanerlab::harness::apply_kv(config, "dim", "6");
  sanerlab::harness::apply_kv(config, "test_n", "120");
  sanerlab::harness::apply_kv(config, "separation", "8");
  sanerlab::harness::apply_kv(config, "hidden", "16");
  sanerlab::harness::apply_kv(config, "noise_kind", "symmetric");
  sanerlab::harness::apply_kv(config, "noise_rate", "0.3");
  sanerlab::harness::apply_kv(config, "seed", "5");
  return config;
}

MetricsRow sample_row(int epoch) {
  MetricsRow row;
  row.epoch = epoch;
  row.eta = 0.1;
  row.alpha = 0.75;
  row.train_acc_overall = 0.625;
  row.clean_train_acc = 0.7;
  row.noisy_train_acc = 0.1 + 0.2 / 3.0;  // not exactly representable
  row.clean_noisy_gap = *row.clean_train_acc - *row.noisy_train_acc;
  row.test_acc = 0.5;
  row.generalization_gap = row.train_acc_overall - row.test_acc;
  row.frac_a = 0.5;
  row.frac_b = 0.25;
  row.frac_c = 0.25;
  row.p_clean = 0.2;
  row.p_noise = 0.6;
  row.pr = 3.0;
  return row;
}

}  // namespace

TEST_CASE("lr_schedule steps down at each milestone") {
  const std::vector<int> milestones = {100, 150};
  CHECK(sanerlab::harness::lr_schedule(0, 0.1, milestones, 0.1) == 0.1);
  CHECK(sanerlab::harness::lr_schedule(99, 0.1, milestones, 0.1) == 0.1);
  CHECK(sanerlab::harness::lr_schedule(100, 0.1, milestones, 0.1) ==
        doctest::Approx(0.01).epsilon(1e-15));
  CHECK(sanerlab::harness::lr_schedule(149, 0.1, milestones, 0.1) ==
        doctest::Approx(0.01).epsilon(1e-15));
  CHECK(sanerlab::harness::lr_schedule(150, 0.1, milestones, 0.1) ==
        doctest::Approx(0.001).epsilon(1e-15));
  CHECK(sanerlab::harness::lr_schedule(10, 0.1, {}, 0.1) == 0.1);
}

TEST_CASE("config resolve fills documented defaults") {
  ExperimentConfig config;
  config.epochs = 200;
  config.resolve();
  REQUIRE(config.lr_milestones.has_value());
  CHECK(*config.lr_milestones == std::vector<int>{100, 150});
  REQUIRE(config.k.has_value());
  CHECK(*config.k == 50);
  CHECK(config.optim.k == 50);
  REQUIRE(config.data_seed.has_value());
  CHECK(*config.data_seed == config.seed);
  config.validate();

  // resolve is idempotent
  const std::string once = sanerlab::harness::config_to_string(config);
  config.resolve();
  CHECK(sanerlab::harness::config_to_string(config) == once);

  // short runs drop milestones that would land at epoch 0
  ExperimentConfig tiny;
  tiny.epochs = 1;
  tiny.resolve();
  CHECK(tiny.lr_milestones->empty());
  CHECK(*tiny.k == 0);
}

TEST_CASE("apply_kv parses every key and rejects unknown ones") {
  ExperimentConfig config;
  sanerlab::harness::apply_kv(config, "mode", "sam");
  CHECK(config.optim.mode == sanerlab::optim::Mode::sam);
  sanerlab::harness::apply_kv(config, "eta", "0.05");
  CHECK(config.optim.eta == 0.05);
  sanerlab::harness::apply_kv(config, "lr_milestones", "30,60");
  CHECK(*config.lr_milestones == std::vector<int>{30, 60});
  sanerlab::harness::apply_kv(config, "lr_milestones", "none");
  CHECK(config.lr_milestones->empty());
  sanerlab::harness::apply_kv(config, "hidden", "32,16");
  CHECK(config.hidden == std::vector<int>{32, 16});
  sanerlab::harness::apply_kv(config, "hidden", "none");
  CHECK(config.hidden.empty());
  sanerlab::harness::apply_kv(config, "pair_map", "0:2,3:1");
  CHECK(config.noise.pair_map == std::map<int, int>{{0, 2}, {3, 1}});
  sanerlab::harness::apply_kv(config, "diagnostics", "false");
  CHECK(config.diagnostics == false);

  CHECK_THROWS_AS(sanerlab::harness::apply_kv(config, "learning_rate", "0.1"),
                  std::invalid_argument);
  CHECK_THROWS_AS(sanerlab::harness::apply_kv(config, "eta", "fast"), std::invalid_argument);
  CHECK_THROWS_AS(sanerlab::harness::apply_kv(config, "epochs", "3.5"), std::invalid_argument);
  CHECK_THROWS_AS(sanerlab::harness::apply_kv(config, "diagnostics", "yes"),
                  std::invalid_argument);
}

TEST_CASE("config file parsing: comments, blanks, and errors") {
  const fs::path path = temp_dir() / "conf.txt";
  {
    std::ofstream out(path, std::ios::binary);
    out << "# a comment\n\nmode=saner\n  epochs = 7 \nalpha=0.25\n";
  }
  const auto kvs = sanerlab::harness::parse_config_file(path.string());
  REQUIRE(kvs.size() == 3);
  CHECK(kvs[0] == std::pair<std::string, std::string>("mode", "saner"));
  CHECK(kvs[1] == std::pair<std::string, std::string>("epochs", "7"));
  CHECK(kvs[2] == std::pair<std::string, std::string>("alpha", "0.25"));

  {
    std::ofstream out(path, std::ios::binary);
    out << "mode saner\n";  // missing '='
  }
  CHECK_THROWS_AS(sanerlab::harness::parse_config_file(path.string()), std::invalid_argument);
  CHECK_THROWS_AS(sanerlab::harness::parse_config_file((temp_dir() / "missing.txt").string()),
                  std::invalid_argument);
}

TEST_CASE("config serialization round-trips byte-identically") {
  ExperimentConfig config = tiny_config("saner");
  config.resolve();
  config.validate();
  const std::string text = sanerlab::harness::config_to_string(config);

  const fs::path path = temp_dir() / "round.conf";
  sanerlab::harness::write_config(config, path.string());
  CHECK(read_file(path) == text);

  ExperimentConfig reread;
  for (const auto& [key, value] : sanerlab::harness::parse_config_file(path.string())) {
    sanerlab::harness::apply_kv(reread, key, value);
  }
  reread.resolve();
  CHECK(sanerlab::harness::config_to_string(reread) == text);
}

TEST_CASE("validation rejects inconsistent configs") {
  ExperimentConfig config = tiny_config("saner");

  SUBCASE("unresolved config") { CHECK_THROWS_AS(config.validate(), std::invalid_argument); }
  SUBCASE("batch size zero") {
    sanerlab::harness::apply_kv(config, "batch", "0");
    config.resolve();
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  }
  SUBCASE("milestones not increasing") {
    sanerlab::harness::apply_kv(config, "lr_milestones", "2,2");
    config.resolve();
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  }
  SUBCASE("bad kernels name") {
    sanerlab::harness::apply_kv(config, "kernels", "sse9");
    config.resolve();
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  }
  SUBCASE("file mode with noise requested") {
    sanerlab::harness::apply_kv(config, "data", "train.ds");
    sanerlab::harness::apply_kv(config, "test_data", "test.ds");
    config.resolve();
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  }
  SUBCASE("file mode without a test file") {
    ExperimentConfig file_config;
    sanerlab::harness::apply_kv(file_config, "data", "train.ds");
    file_config.resolve();
    CHECK_THROWS_AS(file_config.validate(), std::invalid_argument);
  }
}

TEST_CASE("metrics serialization: exact header, lossless round-trip") {
  std::vector<MetricsRow> rows = {sample_row(0), sample_row(1)};
  rows[1].clean_train_acc.reset();  // exercise empty cells
  rows[1].noisy_train_acc.reset();
  rows[1].clean_noisy_gap.reset();
  rows[1].pr.reset();

  const std::string text = sanerlab::harness::metrics_to_string(rows);
  const std::string header = text.substr(0, text.find('\n'));
  CHECK(header ==
        "epoch,eta,alpha,train_acc_overall,clean_train_acc,noisy_train_acc,clean_noisy_gap,"
        "test_acc,generalization_gap,frac_a,frac_b,frac_c,p_clean,p_noise,pr");

  const fs::path path = temp_dir() / "metrics.csv";
  sanerlab::harness::write_metrics(rows, path.string());
  CHECK(read_file(path) == text);

  const auto reread = sanerlab::harness::read_metrics(path.string());
  REQUIRE(reread.size() == 2);
  CHECK(reread[0].epoch == 0);
  CHECK(reread[0].eta == rows[0].eta);
  CHECK(reread[0].alpha == rows[0].alpha);
  CHECK(*reread[0].noisy_train_acc == *rows[0].noisy_train_acc);  // exact doubles
  CHECK(*reread[0].clean_noisy_gap ==
        doctest::Approx(*rows[0].clean_noisy_gap).epsilon(1e-15));
  CHECK(!reread[1].clean_train_acc.has_value());
  CHECK(!reread[1].pr.has_value());
  CHECK(*reread[0].pr == 3.0);

  // write(read(x)) is byte-identical
  sanerlab::harness::write_metrics(reread, path.string());
  CHECK(read_file(path) == text);
}

TEST_CASE("metrics reader rejects malformed input") {
  const fs::path path = temp_dir() / "bad_metrics.csv";
  auto write = [&](const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
  };

  write("epoch,eta\n0,0.1\n");
  CHECK_THROWS_AS(sanerlab::harness::read_metrics(path.string()), std::runtime_error);

  const std::string header =
      "epoch,eta,alpha,train_acc_overall,clean_train_acc,noisy_train_acc,clean_noisy_gap,"
      "test_acc,generalization_gap,frac_a,frac_b,frac_c,p_clean,p_noise,pr\n";
  write(header + "0,0.1,1,0.5\n");  // too few cells
  CHECK_THROWS_AS(sanerlab::harness::read_metrics(path.string()), std::runtime_error);
  write(header + "0,0.1,1,0.5,,,,oops,0,,,,,,\n");  // junk in a required cell
  CHECK_THROWS_AS(sanerlab::harness::read_metrics(path.string()), std::runtime_error);
  write(header + "0,0.1,1,0.5,,,,0.4,,,,,,,\n");  // missing required gap cell
  CHECK_THROWS_AS(sanerlab::harness::read_metrics(path.string()), std::runtime_error);
}

TEST_CASE("evaluate_split matches per-sample enumeration") {
  // Build a dataset and a model, then recompute accuracy by brute force.
  ExperimentConfig config = tiny_config("sgd");
  config.resolve();
  config.validate();
  const auto [train, test] = sanerlab::harness::synthesize_datasets(config);
  CHECK(train.size() == 360);
  CHECK(test.size() == 120);
  CHECK(test.realized_noise_rate() == 0.0);
  CHECK(train.realized_noise_rate() > 0.15);

  sanerlab::model::ModelSpec spec;
  spec.layer_sizes = {6, 16, 4};
  const auto params = sanerlab::model::init_params(spec, 3);
  const auto split = sanerlab::harness::evaluate_split(params, spec, train);

  std::size_t hits = 0, clean_hits = 0, noisy_hits = 0, clean_total = 0, noisy_total = 0;
  for (std::size_t s = 0; s < train.size(); ++s) {
    sanerlab::model::Batch one;
    one.dim = train.dim;
    one.features.assign(train.row(s), train.row(s) + train.dim);
    one.labels = {train.observed_labels[s]};
    one.is_noisy = {train.is_noisy[s]};
    const auto fwd = sanerlab::model::forward_loss(params, one, spec);
    int best = 0;
    for (int c = 1; c < 4; ++c) {
      if (fwd.logits[c] > fwd.logits[best]) best = c;
    }
    const bool hit = best == train.observed_labels[s];
    hits += hit;
    if (train.is_noisy[s]) {
      ++noisy_total;
      noisy_hits += hit;
    } else {
      ++clean_total;
      clean_hits += hit;
    }
  }
  CHECK(split.overall == static_cast<double>(hits) / train.size());
  REQUIRE(split.clean.has_value());
  REQUIRE(split.noisy.has_value());
  CHECK(*split.clean == static_cast<double>(clean_hits) / clean_total);
  CHECK(*split.noisy == static_cast<double>(noisy_hits) / noisy_total);

  // All-clean data leaves the noisy split absent.
  const auto clean_split = sanerlab::harness::evaluate_split(params, spec, test);
  CHECK(clean_split.clean.has_value());
  CHECK(!clean_split.noisy.has_value());
}

TEST_CASE("gather pulls rows with observed labels and flags") {
  ExperimentConfig config = tiny_config("sgd");
  config.resolve();
  const auto [train, test] = sanerlab::harness::synthesize_datasets(config);
  const std::vector<std::uint32_t> idx = {5, 0, 17};
  const auto batch = sanerlab::harness::gather(train, idx);
  REQUIRE(batch.size() == 3);
  CHECK(batch.dim == train.dim);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    CHECK(batch.labels[i] == train.observed_labels[idx[i]]);
    CHECK(batch.is_noisy[i] == train.is_noisy[idx[i]]);
    for (int j = 0; j < train.dim; ++j) CHECK(batch.row(i)[j] == train.row(idx[i])[j]);
  }
  CHECK_THROWS_AS(sanerlab::harness::gather(train, {100000}), std::invalid_argument);
}

TEST_CASE("run_training is deterministic and fills every column") {
  ExperimentConfig config = tiny_config("saner");
  const RunRecord first = sanerlab::harness::run_training([&] {
    auto c = config;
    c.resolve();
    c.validate();
    return c;
  }());
  const RunRecord second = sanerlab::harness::run_training([&] {
    auto c = config;
    c.resolve();
    c.validate();
    return c;
  }());

  REQUIRE(!first.aborted);
  REQUIRE(first.rows.size() == 3);
  CHECK(sanerlab::harness::metrics_to_string(first.rows) ==
        sanerlab::harness::metrics_to_string(second.rows));
  CHECK(first.final_params == second.final_params);

  for (const MetricsRow& row : first.rows) {
    CHECK(row.eta > 0.0);
    CHECK(row.alpha > 0.0);
    CHECK(row.train_acc_overall >= 0.0);
    CHECK(row.test_acc >= 0.0);
    REQUIRE(row.clean_train_acc.has_value());
    REQUIRE(row.noisy_train_acc.has_value());
    REQUIRE(row.frac_a.has_value());  // diagnostics on by default
    CHECK(*row.frac_a >= 0.0);
    CHECK(*row.frac_a <= 1.0);
  }

  // A different seed changes the trajectory.
  ExperimentConfig other = tiny_config("saner");
  sanerlab::harness::apply_kv(other, "seed", "6");
  other.resolve();
  other.validate();
  const RunRecord third = sanerlab::harness::run_training(other);
  CHECK(sanerlab::harness::metrics_to_string(first.rows) !=
        sanerlab::harness::metrics_to_string(third.rows));

  // Diagnostics off leaves the diagnostic columns absent.
  ExperimentConfig quiet = tiny_config("saner");
  sanerlab::harness::apply_kv(quiet, "diagnostics", "false");
  quiet.resolve();
  quiet.validate();
  const RunRecord plain = sanerlab::harness::run_training(quiet);
  for (const MetricsRow& row : plain.rows) {
    CHECK(!row.frac_a.has_value());
    CHECK(!row.pr.has_value());
  }
}

TEST_CASE("training equivalences hold bitwise on full runs") {
  // sgd vs sam at rho = 0: identical CSV text and final parameters.
  ExperimentConfig sgd_config = tiny_config("sgd");
  sgd_config.resolve();
  sgd_config.validate();
  const RunRecord sgd_run = sanerlab::harness::run_training(sgd_config);

  ExperimentConfig sam0 = tiny_config("sam");
  sanerlab::harness::apply_kv(sam0, "rho", "0");
  sam0.resolve();
  sam0.validate();
  const RunRecord sam0_run = sanerlab::harness::run_training(sam0);
  CHECK(sanerlab::harness::metrics_to_string(sgd_run.rows) ==
        sanerlab::harness::metrics_to_string(sam0_run.rows));
  CHECK(sgd_run.final_params == sam0_run.final_params);

  // saner with alpha_target = 1 vs sam: reweighting never changes anything.
  ExperimentConfig sam_config = tiny_config("sam");
  sam_config.resolve();
  sam_config.validate();
  const RunRecord sam_run = sanerlab::harness::run_training(sam_config);

  for (const char* k_value : {"0", "2"}) {
    ExperimentConfig saner1 = tiny_config("saner");
    sanerlab::harness::apply_kv(saner1, "alpha", "1");
    sanerlab::harness::apply_kv(saner1, "k", k_value);
    saner1.resolve();
    saner1.validate();
    const RunRecord saner_run = sanerlab::harness::run_training(saner1);
    CHECK(sanerlab::harness::metrics_to_string(sam_run.rows) ==
          sanerlab::harness::metrics_to_string(saner_run.rows));
    CHECK(sam_run.final_params == saner_run.final_params);
  }
}

TEST_CASE("file-based training consumes saved datasets") {
  const fs::path dir = temp_dir();
  ExperimentConfig synth = tiny_config("sgd");
  synth.resolve();
  const auto [train, test] = sanerlab::harness::synthesize_datasets(synth);
  sanerlab::data::save_dataset(train, (dir / "train.ds").string());
  sanerlab::data::save_dataset(test, (dir / "test.ds").string());

  ExperimentConfig file_config;
  sanerlab::harness::apply_kv(file_config, "mode", "sgd");
  sanerlab::harness::apply_kv(file_config, "epochs", "2");
  sanerlab::harness::apply_kv(file_config, "hidden", "16");
  sanerlab::harness::apply_kv(file_config, "seed", "5");
  sanerlab::harness::apply_kv(file_config, "data", (dir / "train.ds").string());
  sanerlab::harness::apply_kv(file_config, "test_data", (dir / "test.ds").string());
  file_config.resolve();
  file_config.validate();
  const RunRecord record = sanerlab::harness::run_training(file_config);
  REQUIRE(!record.aborted);
  CHECK(record.rows.size() == 2);
  CHECK(record.train_noise_rate == train.realized_noise_rate());
  REQUIRE(record.rows[0].noisy_train_acc.has_value());  // flags came from the file
}

TEST_CASE("compare_runs verdicts") {
  auto make_run = [](const std::string& name, std::vector<double> noisy,
                     std::vector<double> test, std::vector<double> pr) {
    NamedRun run;
    run.name = name;
    for (std::size_t e = 0; e < noisy.size(); ++e) {
      MetricsRow row;
      row.epoch = static_cast<int>(e);
      row.eta = 0.1;
      row.alpha = 1.0;
      row.noisy_train_acc = noisy[e];
      row.train_acc_overall = 0.5;
      row.test_acc = test[e];
      if (!pr.empty()) row.pr = pr[e];
      run.rows.push_back(row);
    }
    return run;
  };

  SUBCASE("noisy ordering pass and fail") {
    const auto a = make_run("a", {0.9, 0.8, 0.7}, {0.5, 0.5, 0.5}, {});
    const auto b = make_run("b", {0.8, 0.7, 0.5}, {0.5, 0.5, 0.5}, {});
    auto report = sanerlab::harness::compare_runs({a, b}, ComparisonAssertion::noisy_acc_ordering);
    CHECK(report.verdict == Verdict::pass);
    CHECK(report.margin == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(report.text.find("verdict: pass") != std::string::npos);

    report = sanerlab::harness::compare_runs({b, a}, ComparisonAssertion::noisy_acc_ordering);
    CHECK(report.verdict == Verdict::fail);

    // tie -> fail with zero margin
    report = sanerlab::harness::compare_runs({a, a}, ComparisonAssertion::noisy_acc_ordering);
    CHECK(report.verdict == Verdict::fail);
    CHECK(report.margin == 0.0);
  }

  SUBCASE("test accuracy ordering uses the best epoch") {
    const auto a = make_run("a", {0.5, 0.5, 0.5}, {0.4, 0.6, 0.3}, {});
    const auto b = make_run("b", {0.5, 0.5, 0.5}, {0.5, 0.7, 0.2}, {});
    const auto report =
        sanerlab::harness::compare_runs({a, b}, ComparisonAssertion::test_acc_ordering);
    CHECK(report.verdict == Verdict::pass);
    CHECK(report.margin == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(report.runs[0].best_test_acc == 0.6);
    CHECK(report.runs[1].best_test_acc == 0.7);
  }

  SUBCASE("pr late phase compares medians of the final third, ties pass") {
    const auto a = make_run("a", {0.5, 0.5, 0.5, 0.5, 0.5, 0.5}, std::vector<double>(6, 0.5),
                            {9.0, 9.0, 9.0, 9.0, 2.0, 4.0});
    const auto b = make_run("b", {0.5, 0.5, 0.5, 0.5, 0.5, 0.5}, std::vector<double>(6, 0.5),
                            {9.0, 9.0, 9.0, 9.0, 3.0, 3.0});
    // final third = last 2 rows; medians 3.0 and 3.0 -> nonincreasing holds
    const auto report =
        sanerlab::harness::compare_runs({a, b}, ComparisonAssertion::pr_late_phase);
    CHECK(report.verdict == Verdict::pass);
    CHECK(report.margin == 0.0);
    CHECK(report.runs[0].late_pr_median == 3.0);
  }

  SUBCASE("missing inputs give inconclusive") {
    const auto a = make_run("a", {0.5, 0.4, 0.3}, {0.5, 0.5, 0.5}, {});
    auto no_noisy_a = a;
    for (auto& row : no_noisy_a.rows) row.noisy_train_acc.reset();
    auto no_noisy_b = no_noisy_a;
    no_noisy_b.name = "b";
    const auto report = sanerlab::harness::compare_runs(
        {no_noisy_a, no_noisy_b}, ComparisonAssertion::noisy_acc_ordering);
    CHECK(report.verdict == Verdict::inconclusive);
  }

  SUBCASE("misaligned grids are rejected") {
    const auto a = make_run("a", {0.9, 0.8}, {0.5, 0.5}, {});
    const auto b = make_run("b", {0.8, 0.7, 0.6}, {0.5, 0.5, 0.5}, {});
    CHECK_THROWS_AS(sanerlab::harness::compare_runs({a, b},
                                                    ComparisonAssertion::noisy_acc_ordering),
                    std::invalid_argument);
    CHECK_THROWS_AS(sanerlab::harness::compare_runs({a},
                                                    ComparisonAssertion::noisy_acc_ordering),
                    std::invalid_argument);
  }

  SUBCASE("assertion names round-trip") {
    for (ComparisonAssertion assertion :
         {ComparisonAssertion::noisy_acc_ordering, ComparisonAssertion::test_acc_ordering,
          ComparisonAssertion::pr_late_phase}) {
      CHECK(sanerlab::harness::assertion_from_string(sanerlab::harness::to_string(assertion)) ==
            assertion);
    }
    CHECK_THROWS_AS(sanerlab::harness::assertion_from_string("vibes"), std::invalid_argument);
  }
}

TEST_CASE("kernel selection in the config pins the backend for the run") {
  ExperimentConfig config = tiny_config("saner");
  sanerlab::harness::apply_kv(config, "kernels", "scalar");
  config.resolve();
  config.validate();
  const RunRecord scalar_run = sanerlab::harness::run_training(config);
  CHECK(std::string(sanerlab::kernels::active().name) == "scalar");
  REQUIRE(!scalar_run.aborted);
  sanerlab::kernels::select("auto");
}
