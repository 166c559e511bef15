#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ngcn/dense_matrix.hpp"
#include "ngcn/graph.hpp"

namespace ngcn {

enum class Task { single_label, multi_label };
enum class FeatureEncoding { sparse_triplet, dense_bin };

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Graph, features, labels and a transductive split. Immutable by
/// convention once loaded; the perturbation utilities return new copies.
struct Dataset {
  std::string name;
  std::size_t n = 0;
  Task task = Task::single_label;
  FeatureEncoding encoding = FeatureEncoding::sparse_triplet;
  /// Directed as given; symmetrization happens when the model input is built.
  std::vector<Edge> edges;
  DenseMatrix features;  // n x F
  DenseMatrix labels;    // n x C, one-hot or multi-hot; all-zero = unlabeled
  Split split;

  std::size_t num_features() const noexcept { return features.cols(); }
  std::size_t num_classes() const noexcept { return labels.cols(); }

  /// Throws DataError if an invariant is broken: split lists disjoint, ids < n,
  /// train non-empty, split nodes labeled, single_label rows one-hot (or empty
  /// for unlabeled nodes), multi_label entries in {0, 1}.
  void validate() const;
};

struct DatasetManifest {
  int format = 1;
  std::size_t n = 0;
  std::size_t e = 0;
  std::size_t c = 0;
  std::size_t f = 0;
  /// file name -> lowercase hex SHA-256
  std::map<std::string, std::string> checksums;
};

/// Reads a format-1 dataset directory:
///   meta.json   {"format":1,"name","n","c","f","task","feature_encoding"[,"checksums"]}
///   edges.tsv   src<TAB>dst, 0-indexed
///   features.tsv node<TAB>col<TAB>value  |  features.bin (n*f little-endian float64)
///   labels.tsv  node<TAB>class  |  node<TAB>c1,c2,...
///   split.json  {"train":[...],"val":[...],"test":[...]}
/// Errors name the file and record. Checksums are verified when meta.json
/// lists them.
Dataset load_dataset(const std::filesystem::path& dir);

/// Writes the same layout, including SHA-256 checksums in meta.json.
/// load(save(d)) reproduces every field bit-exactly.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

DatasetManifest manifest_of(const Dataset& dataset);

std::string sha256_file(const std::filesystem::path& file);

struct SbmConfig {
  std::size_t n = 100;
  std::size_t blocks = 2;
  double p_in = 0.5;
  double p_out = 0.05;
  std::size_t feature_dim = 16;
  /// Features are feature_signal * onehot(block) + N(0, 1) noise.
  double feature_signal = 1.0;
  std::uint64_t seed = 0;
};

/// Stochastic block model with contiguous equal-sized blocks and a
/// per-class 10% / 20% / 70% train / val / test split.
Dataset generate_sbm(const SbmConfig& config);

/// Zeroes round(fraction * nnz_i) uniformly chosen nonzero features of each
/// node i. Returns a modified copy.
Dataset remove_features(const Dataset& dataset, double fraction, std::uint64_t seed);

/// Draws exactly per_class training nodes per class from the labeled pool
/// (every labeled node outside val and test). Val and test are kept.
Dataset subsample_train_labels(const Dataset& dataset, std::size_t per_class, std::uint64_t seed);

const char* to_string(Task task);

}  // namespace ngcn
