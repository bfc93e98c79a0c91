#include "sanerlab/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sanerlab/rng.hpp"

namespace sanerlab::data {
namespace {

constexpr int kCenterAttempts = 10000;

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

void require_clean_input(const LabeledDataset& ds) {
  ds.validate();
  for (std::uint8_t flag : ds.is_noisy) {
    if (flag) throw std::invalid_argument("noise injection expects an uncorrupted dataset");
  }
}

void check_rate(double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw std::invalid_argument("noise rate must lie in [0, 1]");
  }
}

void mark_flip(LabeledDataset& ds, std::size_t i, int new_label) {
  ds.observed_labels[i] = new_label;
  ds.is_noisy[i] = new_label != ds.true_labels[i] ? 1 : 0;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, std::size_t line_no) {
  double v = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad float '" + token + "'");
  }
  if (!std::isfinite(v)) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": non-finite feature");
  }
  return v;
}

long parse_long(const std::string& token, std::size_t line_no, const char* what) {
  long v = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad " + what + " '" + token +
                             "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

double LabeledDataset::realized_noise_rate() const {
  if (size() == 0) return 0.0;
  std::size_t flips = 0;
  for (std::uint8_t flag : is_noisy) flips += flag != 0;
  return static_cast<double>(flips) / static_cast<double>(size());
}

void LabeledDataset::validate() const {
  if (dim <= 0) throw std::invalid_argument("dataset dim must be positive");
  if (num_classes < 2) throw std::invalid_argument("dataset needs at least 2 classes");
  const std::size_t n = size();
  if (observed_labels.size() != n || is_noisy.size() != n ||
      features.size() != n * static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("inconsistent dataset buffers");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (true_labels[i] < 0 || true_labels[i] >= num_classes || observed_labels[i] < 0 ||
        observed_labels[i] >= num_classes) {
      throw std::invalid_argument("label outside [0, num_classes) at sample " + std::to_string(i));
    }
    if ((is_noisy[i] != 0) != (observed_labels[i] != true_labels[i])) {
      throw std::invalid_argument("is_noisy flag inconsistent at sample " + std::to_string(i));
    }
  }
}

void NoiseSpec::validate(int num_classes) const {
  check_rate(rate);
  if (kind == NoiseKind::asymmetric_pairmap) {
    if (pair_map.empty()) {
      throw std::invalid_argument("asymmetric_pairmap needs a non-empty pair map");
    }
    for (const auto& [from, to] : pair_map) {
      if (from < 0 || from >= num_classes || to < 0 || to >= num_classes) {
        throw std::invalid_argument("pair map class outside [0, num_classes)");
      }
      if (from == to) throw std::invalid_argument("pair map may not map a class to itself");
    }
  }
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none: return "none";
    case NoiseKind::symmetric: return "symmetric";
    case NoiseKind::asymmetric_circular: return "asymmetric_circular";
    case NoiseKind::asymmetric_pairmap: return "asymmetric_pairmap";
    case NoiseKind::instance_proxy: return "instance_proxy";
  }
  return "none";
}

std::uint64_t noise_seed_for(std::uint64_t data_seed) { return derive_seed(data_seed, 101); }

NoiseKind noise_kind_from_string(const std::string& name) {
  if (name == "none") return NoiseKind::none;
  if (name == "symmetric") return NoiseKind::symmetric;
  if (name == "asymmetric_circular") return NoiseKind::asymmetric_circular;
  if (name == "asymmetric_pairmap") return NoiseKind::asymmetric_pairmap;
  if (name == "instance_proxy") return NoiseKind::instance_proxy;
  throw std::invalid_argument("unknown noise kind '" + name + "'");
}

LabeledDataset make_gaussian_blobs(std::size_t n, int classes, int dim, double separation,
                                   std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("blob dataset needs at least one sample");
  if (classes < 2) throw std::invalid_argument("blob dataset needs at least 2 classes");
  if (dim <= 0) throw std::invalid_argument("blob dataset dim must be positive");
  if (!(separation > 0.0)) throw std::invalid_argument("separation must be positive");

  Rng rng(seed);

  // Rejection-sampled centers: candidates spread ~0.75*separation per axis,
  // accepted only at pairwise distance >= separation.
  const double spread = 0.75 * separation;
  std::vector<double> centers(static_cast<std::size_t>(classes) * dim);
  for (int c = 0; c < classes; ++c) {
    double* center = centers.data() + static_cast<std::size_t>(c) * dim;
    bool placed = false;
    for (int attempt = 0; attempt < kCenterAttempts && !placed; ++attempt) {
      for (int k = 0; k < dim; ++k) center[k] = spread * rng.normal();
      placed = true;
      for (int prev = 0; prev < c && placed; ++prev) {
        const double* other = centers.data() + static_cast<std::size_t>(prev) * dim;
        double dist_sq = 0.0;
        for (int k = 0; k < dim; ++k) {
          double diff = center[k] - other[k];
          dist_sq += diff * diff;
        }
        placed = dist_sq >= separation * separation;
      }
    }
    if (!placed) {
      throw std::runtime_error("could not place " + std::to_string(classes) +
                               " cluster centers at separation " + format_double(separation) +
                               " in " + std::to_string(dim) + " dimensions");
    }
  }

  LabeledDataset ds;
  ds.dim = dim;
  ds.num_classes = classes;
  ds.features.resize(n * static_cast<std::size_t>(dim));
  ds.true_labels.resize(n);
  ds.observed_labels.resize(n);
  ds.is_noisy.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(classes));
    ds.true_labels[i] = label;
    ds.observed_labels[i] = label;
    const double* center = centers.data() + static_cast<std::size_t>(label) * dim;
    double* row = ds.features.data() + i * static_cast<std::size_t>(dim);
    for (int k = 0; k < dim; ++k) row[k] = center[k] + rng.normal();
  }
  return ds;
}

LabeledDataset inject_symmetric(LabeledDataset ds, double rate, std::uint64_t seed) {
  require_clean_input(ds);
  check_rate(rate);
  Rng rng(seed);
  const int c = ds.num_classes;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (rng.uniform() < rate) {
      const int offset = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(c - 1)));
      mark_flip(ds, i, (ds.true_labels[i] + offset) % c);
    }
  }
  return ds;
}

LabeledDataset inject_asymmetric(LabeledDataset ds, double rate, std::uint64_t seed,
                                 const std::map<int, int>& pair_map) {
  require_clean_input(ds);
  check_rate(rate);
  if (!pair_map.empty()) {
    NoiseSpec probe;
    probe.kind = NoiseKind::asymmetric_pairmap;
    probe.rate = rate;
    probe.pair_map = pair_map;
    probe.validate(ds.num_classes);
  }
  Rng rng(seed);
  const int c = ds.num_classes;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double u = rng.uniform();
    if (pair_map.empty()) {
      if (u < rate) mark_flip(ds, i, (ds.true_labels[i] + 1) % c);
    } else {
      auto it = pair_map.find(ds.true_labels[i]);
      if (it != pair_map.end() && u < rate) mark_flip(ds, i, it->second);
    }
  }
  return ds;
}

LabeledDataset inject_instance_proxy(LabeledDataset ds, double rate, std::uint64_t seed) {
  require_clean_input(ds);
  check_rate(rate);
  Rng rng(seed);
  const int c = ds.num_classes;
  const int d = ds.dim;
  const double proj_scale = 1.0 / std::sqrt(static_cast<double>(d));

  std::vector<double> difficulty_proj(d);
  for (double& v : difficulty_proj) v = proj_scale * rng.normal();
  std::vector<double> target_proj(static_cast<std::size_t>(c) * d);
  for (double& v : target_proj) v = proj_scale * rng.normal();

  const std::size_t n = ds.size();
  std::vector<double> s(n);
  double mean_s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = ds.row(i);
    double t = 0.0;
    for (int k = 0; k < d; ++k) t += difficulty_proj[k] * row[k];
    s[i] = sigmoid(t);
    mean_s += s[i];
  }
  mean_s /= static_cast<double>(n);

  for (std::size_t i = 0; i < n; ++i) {
    const double q = std::min(rate * s[i] / mean_s, 1.0);
    if (rng.uniform() >= q) continue;
    const double* row = ds.row(i);
    int best = -1;
    double best_score = 0.0;
    for (int cls = 0; cls < c; ++cls) {
      if (cls == ds.true_labels[i]) continue;
      const double* p = target_proj.data() + static_cast<std::size_t>(cls) * d;
      double score = 0.0;
      for (int k = 0; k < d; ++k) score += p[k] * row[k];
      if (best < 0 || score > best_score) {
        best = cls;
        best_score = score;
      }
    }
    mark_flip(ds, i, best);
  }
  return ds;
}

LabeledDataset apply_noise(LabeledDataset ds, const NoiseSpec& spec) {
  spec.validate(ds.num_classes);
  switch (spec.kind) {
    case NoiseKind::none: return ds;
    case NoiseKind::symmetric: return inject_symmetric(std::move(ds), spec.rate, spec.seed);
    case NoiseKind::asymmetric_circular:
      return inject_asymmetric(std::move(ds), spec.rate, spec.seed);
    case NoiseKind::asymmetric_pairmap:
      return inject_asymmetric(std::move(ds), spec.rate, spec.seed, spec.pair_map);
    case NoiseKind::instance_proxy:
      return inject_instance_proxy(std::move(ds), spec.rate, spec.seed);
  }
  return ds;
}

void save_dataset(const LabeledDataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream out(path, std::ios::binary);  // binary keeps line endings LF everywhere
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "saner-ds v1 n=" << ds.size() << " d=" << ds.dim << " c=" << ds.num_classes << "\n";
  std::string line;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    line.clear();
    line += std::to_string(ds.true_labels[i]);
    line += ',';
    line += std::to_string(ds.observed_labels[i]);
    const double* row = ds.row(i);
    for (int k = 0; k < ds.dim; ++k) {
      line += ',';
      line += format_double(row[k]);
    }
    line += '\n';
    out << line;
  }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

LabeledDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");

  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("line 1: missing header");
  std::istringstream hs(header);
  std::string magic, version, n_tok, d_tok, c_tok, extra;
  hs >> magic >> version >> n_tok >> d_tok >> c_tok;
  if (magic != "saner-ds" || version != "v1" || n_tok.rfind("n=", 0) != 0 ||
      d_tok.rfind("d=", 0) != 0 || c_tok.rfind("c=", 0) != 0 || (hs >> extra)) {
    throw std::runtime_error("line 1: bad header, expected 'saner-ds v1 n=<n> d=<d> c=<c>'");
  }
  const long n = parse_long(n_tok.substr(2), 1, "sample count");
  const long d = parse_long(d_tok.substr(2), 1, "feature dim");
  const long c = parse_long(c_tok.substr(2), 1, "class count");
  if (n < 0 || d <= 0 || c < 2) throw std::runtime_error("line 1: header values out of range");

  LabeledDataset ds;
  ds.dim = static_cast<int>(d);
  ds.num_classes = static_cast<int>(c);
  ds.features.reserve(static_cast<std::size_t>(n) * d);
  ds.true_labels.reserve(n);
  ds.observed_labels.reserve(n);
  ds.is_noisy.reserve(n);

  std::string line;
  for (long i = 0; i < n; ++i) {
    const std::size_t line_no = static_cast<std::size_t>(i) + 2;
    if (!std::getline(in, line)) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": truncated file, expected " +
                               std::to_string(n) + " samples");
    }
    std::vector<std::string> fields = split(line, ',');
    if (fields.size() != static_cast<std::size_t>(d) + 2) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(d + 2) + " fields, got " +
                               std::to_string(fields.size()));
    }
    const long t = parse_long(fields[0], line_no, "true label");
    const long o = parse_long(fields[1], line_no, "observed label");
    if (t < 0 || t >= c || o < 0 || o >= c) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": label outside [0, " +
                               std::to_string(c) + ")");
    }
    ds.true_labels.push_back(static_cast<int>(t));
    ds.observed_labels.push_back(static_cast<int>(o));
    ds.is_noisy.push_back(t != o ? 1 : 0);
    for (long k = 0; k < d; ++k) {
      ds.features.push_back(parse_double(fields[static_cast<std::size_t>(k) + 2], line_no));
    }
  }
  while (std::getline(in, line)) {
    if (!line.empty()) {
      throw std::runtime_error("unexpected extra data after " + std::to_string(n) + " samples");
    }
  }
  ds.validate();
  return ds;
}

}  // namespace sanerlab::data
