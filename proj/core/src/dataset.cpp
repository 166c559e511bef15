#include "ngcn/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <string_view>

#include "ngcn/errors.hpp"
#include "ngcn/rng.hpp"

namespace ngcn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError(file.string(), 0, "cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(file.string(), 0, "cannot open for writing");
  out << text;
  if (!out) throw DataError(file.string(), 0, "write failed");
}

json read_json(const fs::path& file) {
  try {
    return json::parse(read_text(file));
  } catch (const json::exception& e) {
    throw DataError(file.string(), 0, std::string("malformed JSON: ") + e.what());
  }
}

/// Splits text into lines, dropping a trailing '\r' and a final empty line.
std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
T parse_number(std::string_view token, const fs::path& file, std::size_t line, const char* what) {
  T value{};
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || token.empty()) {
    throw DataError(file.filename().string(), line,
                    std::string("invalid ") + what + " '" + std::string(token) + "'");
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string hex(const unsigned char* bytes, std::size_t len) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(digits[bytes[i] >> 4]);
    out.push_back(digits[bytes[i] & 0xF]);
  }
  return out;
}

std::string sha256_bytes(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw DataError("sha256 computation failed");
  }
  return hex(digest, len);
}

const char* to_string(FeatureEncoding e) {
  return e == FeatureEncoding::dense_bin ? "dense_bin" : "sparse_triplet";
}

std::vector<std::size_t> read_id_list(const json& split, const char* key, const fs::path& file) {
  if (!split.contains(key) || !split[key].is_array()) {
    throw DataError(file.filename().string(), 0, std::string("missing array '") + key + "'");
  }
  std::vector<std::size_t> ids;
  for (const auto& v : split[key]) {
    if (!v.is_number_unsigned()) {
      throw DataError(file.filename().string(), 0, std::string("non-integer id in '") + key + "'");
    }
    ids.push_back(v.get<std::size_t>());
  }
  return ids;
}

}  // namespace

const char* to_string(Task task) { return task == Task::multi_label ? "multi_label" : "single_label"; }

void Dataset::validate() const {
  if (features.rows() != n) {
    throw DataError("features have " + std::to_string(features.rows()) + " rows for n = " +
                    std::to_string(n));
  }
  if (labels.rows() != n) {
    throw DataError("labels have " + std::to_string(labels.rows()) + " rows for n = " + std::to_string(n));
  }
  if (split.train.empty()) throw DataError("train split is empty");
  std::vector<std::uint8_t> seen(n, 0);
  const std::pair<const char*, const std::vector<std::size_t>*> lists[] = {
      {"train", &split.train}, {"val", &split.val}, {"test", &split.test}};
  for (const auto& [name, ids] : lists) {
    for (std::size_t id : *ids) {
      if (id >= n) throw DataError(std::string(name) + " split: node " + std::to_string(id) + " >= n");
      if (seen[id]) {
        throw DataError(std::string(name) + " split: node " + std::to_string(id) +
                        " appears in more than one split (or twice)");
      }
      seen[id] = 1;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (double y : labels.row(i)) {
      if (y != 0.0 && y != 1.0) throw DataError("label entry of node " + std::to_string(i) + " not in {0,1}");
      total += y;
    }
    if (task == Task::single_label && total != 0.0 && total != 1.0) {
      throw DataError("single_label node " + std::to_string(i) + " has " + std::to_string(total) +
                      " classes");
    }
    if (seen[i] && task == Task::single_label && total == 0.0) {
      throw DataError("split node " + std::to_string(i) + " has no label");
    }
  }
}

std::string sha256_file(const fs::path& file) { return sha256_bytes(read_text(file)); }

DatasetManifest manifest_of(const Dataset& d) {
  DatasetManifest m;
  m.format = kFormatVersion;
  m.n = d.n;
  m.e = d.edges.size();
  m.c = d.num_classes();
  m.f = d.num_features();
  return m;
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError(dir.string(), 0, "not a dataset directory");
  const fs::path meta_path = dir / "meta.json";
  const json meta = read_json(meta_path);

  Dataset d;
  std::size_t c = 0;
  std::size_t f = 0;
  try {
    if (meta.at("format").get<int>() != kFormatVersion) {
      throw DataError("meta.json", 0, "unsupported format " + meta.at("format").dump());
    }
    d.name = meta.at("name").get<std::string>();
    d.n = meta.at("n").get<std::size_t>();
    c = meta.at("c").get<std::size_t>();
    f = meta.at("f").get<std::size_t>();
    const auto task = meta.at("task").get<std::string>();
    if (task == "single_label") {
      d.task = Task::single_label;
    } else if (task == "multi_label") {
      d.task = Task::multi_label;
    } else {
      throw DataError("meta.json", 0, "unknown task '" + task + "'");
    }
    const auto enc = meta.at("feature_encoding").get<std::string>();
    if (enc == "sparse_triplet") {
      d.encoding = FeatureEncoding::sparse_triplet;
    } else if (enc == "dense_bin") {
      d.encoding = FeatureEncoding::dense_bin;
    } else {
      throw DataError("meta.json", 0, "unknown feature_encoding '" + enc + "'");
    }
  } catch (const json::exception& e) {
    throw DataError("meta.json", 0, e.what());
  }

  if (meta.contains("checksums")) {
    for (const auto& [file, expected] : meta["checksums"].items()) {
      const fs::path p = dir / file;
      if (!fs::exists(p)) throw DataError(file, 0, "listed in checksums but missing");
      if (sha256_file(p) != expected.get<std::string>()) throw DataError(file, 0, "checksum mismatch");
    }
  }

  // edges
  {
    const fs::path p = dir / "edges.tsv";
    const std::string text = read_text(p);
    const auto lines = lines_of(text);
    d.edges.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto cols = split_on(lines[i], '\t');
      if (cols.size() != 2) throw DataError("edges.tsv", i + 1, "expected src<TAB>dst");
      const auto src = parse_number<std::size_t>(cols[0], p, i + 1, "node id");
      const auto dst = parse_number<std::size_t>(cols[1], p, i + 1, "node id");
      if (src >= d.n || dst >= d.n) throw DataError("edges.tsv", i + 1, "node id out of range");
      d.edges.emplace_back(src, dst);
    }
  }

  // features
  d.features = DenseMatrix(d.n, f);
  if (d.encoding == FeatureEncoding::sparse_triplet) {
    const fs::path p = dir / "features.tsv";
    const std::string text = read_text(p);
    const auto lines = lines_of(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto cols = split_on(lines[i], '\t');
      if (cols.size() != 3) throw DataError("features.tsv", i + 1, "expected node<TAB>col<TAB>value");
      const auto node = parse_number<std::size_t>(cols[0], p, i + 1, "node id");
      const auto col = parse_number<std::size_t>(cols[1], p, i + 1, "feature column");
      const auto value = parse_number<double>(cols[2], p, i + 1, "value");
      if (node >= d.n || col >= f) throw DataError("features.tsv", i + 1, "index out of range");
      if (!std::isfinite(value)) throw DataError("features.tsv", i + 1, "non-finite value");
      d.features(node, col) = value;
    }
  } else {
    const fs::path p = dir / "features.bin";
    const std::string bytes = read_text(p);
    if (bytes.size() != d.n * f * sizeof(double)) {
      throw DataError("features.bin", 0,
                      "expected " + std::to_string(d.n * f * sizeof(double)) + " bytes, found " +
                          std::to_string(bytes.size()));
    }
    auto vals = d.features.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      std::uint64_t raw;
      std::memcpy(&raw, bytes.data() + i * sizeof(double), sizeof(raw));
      if constexpr (std::endian::native == std::endian::big) raw = __builtin_bswap64(raw);
      vals[i] = std::bit_cast<double>(raw);
      if (!std::isfinite(vals[i])) throw DataError("features.bin", i + 1, "non-finite value");
    }
  }

  // labels
  d.labels = DenseMatrix(d.n, c);
  {
    const fs::path p = dir / "labels.tsv";
    const std::string text = read_text(p);
    const auto lines = lines_of(text);
    std::vector<std::uint8_t> seen(d.n, 0);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto cols = split_on(lines[i], '\t');
      if (cols.size() != 2) throw DataError("labels.tsv", i + 1, "expected node<TAB>label(s)");
      const auto node = parse_number<std::size_t>(cols[0], p, i + 1, "node id");
      if (node >= d.n) throw DataError("labels.tsv", i + 1, "node id out of range");
      if (seen[node]) throw DataError("labels.tsv", i + 1, "duplicate node " + std::to_string(node));
      seen[node] = 1;
      if (d.task == Task::single_label) {
        const auto cls = parse_number<std::size_t>(cols[1], p, i + 1, "class");
        if (cls >= c) throw DataError("labels.tsv", i + 1, "class out of range");
        d.labels(node, cls) = 1.0;
      } else if (!cols[1].empty()) {
        for (auto tok : split_on(cols[1], ',')) {
          const auto cls = parse_number<std::size_t>(tok, p, i + 1, "class");
          if (cls >= c) throw DataError("labels.tsv", i + 1, "class out of range");
          d.labels(node, cls) = 1.0;
        }
      }
    }
  }

  // split
  {
    const fs::path p = dir / "split.json";
    const json split = read_json(p);
    d.split.train = read_id_list(split, "train", p);
    d.split.val = read_id_list(split, "val", p);
    d.split.test = read_id_list(split, "test", p);
  }

  try {
    d.validate();
  } catch (const DataError& e) {
    throw DataError(dir.string(), 0, e.what());
  }
  return d;
}

void save_dataset(const Dataset& d, const fs::path& dir) {
  d.validate();
  fs::create_directories(dir);

  std::string edges;
  for (const auto& [s, t] : d.edges) edges += std::to_string(s) + '\t' + std::to_string(t) + '\n';

  std::string features_name;
  std::string features;
  if (d.encoding == FeatureEncoding::sparse_triplet) {
    features_name = "features.tsv";
    for (std::size_t i = 0; i < d.n; ++i) {
      auto row = d.features.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j] != 0.0) {
          features += std::to_string(i) + '\t' + std::to_string(j) + '\t' + format_double(row[j]) + '\n';
        }
      }
    }
  } else {
    features_name = "features.bin";
    features.resize(d.features.size() * sizeof(double));
    auto vals = d.features.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      auto raw = std::bit_cast<std::uint64_t>(vals[i]);
      if constexpr (std::endian::native == std::endian::big) raw = __builtin_bswap64(raw);
      std::memcpy(features.data() + i * sizeof(double), &raw, sizeof(raw));
    }
  }

  std::string labels;
  for (std::size_t i = 0; i < d.n; ++i) {
    auto row = d.labels.row(i);
    std::vector<std::size_t> classes;
    for (std::size_t c = 0; c < row.size(); ++c)
      if (row[c] != 0.0) classes.push_back(c);
    if (d.task == Task::single_label) {
      if (classes.empty()) continue;
      labels += std::to_string(i) + '\t' + std::to_string(classes.front()) + '\n';
    } else {
      labels += std::to_string(i) + '\t';
      for (std::size_t k = 0; k < classes.size(); ++k) {
        if (k) labels += ',';
        labels += std::to_string(classes[k]);
      }
      labels += '\n';
    }
  }

  const json split = {{"train", d.split.train}, {"val", d.split.val}, {"test", d.split.test}};
  const std::string split_text = split.dump() + "\n";

  json meta = json::object();
  meta["format"] = kFormatVersion;
  meta["name"] = d.name;
  meta["n"] = d.n;
  meta["c"] = d.num_classes();
  meta["f"] = d.num_features();
  meta["task"] = to_string(d.task);
  meta["feature_encoding"] = to_string(d.encoding);
  meta["checksums"] = {{"edges.tsv", sha256_bytes(edges)},
                       {features_name, sha256_bytes(features)},
                       {"labels.tsv", sha256_bytes(labels)},
                       {"split.json", sha256_bytes(split_text)}};

  write_text(dir / "edges.tsv", edges);
  write_text(dir / features_name, features);
  write_text(dir / "labels.tsv", labels);
  write_text(dir / "split.json", split_text);
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

Dataset generate_sbm(const SbmConfig& cfg) {
  if (cfg.blocks == 0 || cfg.n < cfg.blocks) throw ConfigError("generate_sbm: need 1 <= blocks <= n");
  if (!(cfg.p_out >= 0.0 && cfg.p_out < cfg.p_in && cfg.p_in <= 1.0)) {
    throw ConfigError("generate_sbm: require 0 <= p_out < p_in <= 1");
  }
  if (cfg.feature_dim < cfg.blocks) throw ConfigError("generate_sbm: feature_dim < blocks");
  if (cfg.feature_signal < 0.0) throw ConfigError("generate_sbm: negative feature_signal");

  Rng rng(cfg.seed);
  Dataset d;
  d.name = "sbm";
  d.n = cfg.n;
  d.task = Task::single_label;
  d.encoding = FeatureEncoding::sparse_triplet;

  std::vector<std::size_t> block(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) block[i] = i * cfg.blocks / cfg.n;

  for (std::size_t i = 0; i < cfg.n; ++i) {
    for (std::size_t j = i + 1; j < cfg.n; ++j) {
      const double p = block[i] == block[j] ? cfg.p_in : cfg.p_out;
      if (rng.bernoulli(p)) d.edges.emplace_back(i, j);
    }
  }

  d.features = DenseMatrix(cfg.n, cfg.feature_dim);
  d.labels = DenseMatrix(cfg.n, cfg.blocks);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    for (double& v : d.features.row(i)) v = rng.normal();
    d.features(i, block[i]) += cfg.feature_signal;
    d.labels(i, block[i]) = 1.0;
  }

  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < cfg.n; ++i)
      if (block[i] == b) members.push_back(i);
    rng.shuffle(std::span<std::size_t>(members));
    const auto count = static_cast<double>(members.size());
    const auto n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.1 * count)));
    const auto n_val = static_cast<std::size_t>(std::llround(0.2 * count));
    for (std::size_t k = 0; k < members.size(); ++k) {
      auto& dst = k < n_train ? d.split.train : (k < n_train + n_val ? d.split.val : d.split.test);
      dst.push_back(members[k]);
    }
  }
  for (auto* ids : {&d.split.train, &d.split.val, &d.split.test}) std::sort(ids->begin(), ids->end());
  d.validate();
  return d;
}

Dataset remove_features(const Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ConfigError("remove_features: fraction must be in [0, 1]");
  }
  Dataset out = dataset;
  Rng rng(seed);
  std::vector<std::size_t> nonzero;
  for (std::size_t i = 0; i < out.n; ++i) {
    auto row = out.features.row(i);
    nonzero.clear();
    for (std::size_t j = 0; j < row.size(); ++j)
      if (row[j] != 0.0) nonzero.push_back(j);
    const auto drop = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(nonzero.size())));
    // partial Fisher-Yates: the first `drop` slots become a uniform subset
    for (std::size_t k = 0; k < drop; ++k) {
      const auto pick = k + static_cast<std::size_t>(rng.below(nonzero.size() - k));
      std::swap(nonzero[k], nonzero[pick]);
      row[nonzero[k]] = 0.0;
    }
  }
  return out;
}

Dataset subsample_train_labels(const Dataset& dataset, std::size_t per_class, std::uint64_t seed) {
  if (per_class == 0) throw ConfigError("subsample_train_labels: per_class must be >= 1");
  if (dataset.task != Task::single_label) {
    throw ConfigError("subsample_train_labels: only defined for single_label datasets");
  }
  std::vector<std::uint8_t> held_out(dataset.n, 0);
  for (std::size_t id : dataset.split.val) held_out[id] = 1;
  for (std::size_t id : dataset.split.test) held_out[id] = 1;

  const std::size_t c = dataset.num_classes();
  std::vector<std::vector<std::size_t>> pool(c);
  for (std::size_t i = 0; i < dataset.n; ++i) {
    if (held_out[i]) continue;
    auto row = dataset.labels.row(i);
    for (std::size_t k = 0; k < c; ++k) {
      if (row[k] != 0.0) pool[k].push_back(i);
    }
  }

  Rng rng(seed);
  Dataset out = dataset;
  out.split.train.clear();
  for (std::size_t k = 0; k < c; ++k) {
    if (pool[k].size() < per_class) {
      throw DataError("subsample_train_labels: class " + std::to_string(k) + " has only " +
                      std::to_string(pool[k].size()) + " labeled nodes, need " +
                      std::to_string(per_class));
    }
    for (std::size_t s = 0; s < per_class; ++s) {
      const auto pick = s + static_cast<std::size_t>(rng.below(pool[k].size() - s));
      std::swap(pool[k][s], pool[k][pick]);
      out.split.train.push_back(pool[k][s]);
    }
  }
  std::sort(out.split.train.begin(), out.split.train.end());
  return out;
}

}  // namespace ngcn
