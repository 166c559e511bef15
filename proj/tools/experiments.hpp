#pragma once

// Experiment protocols behind the `ngcn` command: repeated training with
// best-by-validation reporting, K x r grids, feature removal, label scarcity
// and depth baselines. Reports are nlohmann::ordered_json so that output is
// byte-stable; everything that varies between identical invocations lives
// under the single "timing" key.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ngcn/dataset.hpp"
#include "ngcn/models.hpp"
#include "ngcn/training.hpp"

namespace ngcn::experiments {

using Json = nlohmann::ordered_json;

inline constexpr int kReportVersion = 1;
inline constexpr const char* kSbmSmoke = "sbm-smoke";

/// Where a dataset comes from: `--dataset-dir` wins; otherwise `name` is
/// looked up under data_root (or $NGCN_DATA_ROOT). "sbm-smoke" is built in.
struct DataSource {
  std::string name;
  std::string dataset_dir;
  std::string data_root;

  std::filesystem::path resolve() const;
  bool available() const;
  Json to_json() const;
};

Dataset load_source(const DataSource& source);
/// The built-in 100-node, two-block planted partition.
Dataset sbm_smoke_dataset();

/// Model flags as given on the command line. K and r fall back to the
/// network defaults (K = 6, r = 4) for the multi-power models.
struct ModelChoice {
  std::string model = "gcn";  // gcn | sage | dcnn | ngcn | nsage
  std::optional<std::string> combiner;  // fc | attn
  std::optional<int> K;
  std::optional<int> r;
  std::optional<int> layers;
  int hidden_dim = 16;
  bool intermediate_supervision = false;

  /// Throws ConfigError on inconsistent flags. `task` disables the
  /// per-module softmax mixture for multi-label data.
  ModelSpec to_spec(Task task) const;
  /// Short label, e.g. "ngcn-a" or "gcn".
  std::string label() const;
};

/// Parses "gcn", "sage", "dcnn", "ngcn-fc", "ngcn-a", "nsage-fc", "nsage-a";
/// K, r, layers and hidden width come from `base`.
ModelChoice parse_model_label(const std::string& label, const ModelChoice& base);

Json to_json(const ModelSpec& spec);
Json to_json(const TrainSpec& spec);
Json to_json(const DatasetManifest& manifest);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t n = 0;
};
Summary summarize(const std::vector<double>& xs);

/// Attention weights summed over replicas: one entry per walk power.
std::vector<double> attention_per_power(const std::vector<double>& m, int K, int r);

/// Outcome of one experiment, plus the per-run wall clock kept apart.
struct Report {
  Json body;
  Json timing;

  Json to_json() const;
};

struct TrainOutcome {
  RepeatedResult result;
  std::vector<double> seconds;
};

/// train_spec.runs repetitions (seeds seed + i) on a prepared dataset.
TrainOutcome run_repeated(const ModelSpec& spec, const TrainSpec& train_spec, const Dataset& dataset);

Json repeated_json(const RepeatedResult& r, const ModelSpec& spec, std::uint64_t seed);

Report cmd_train(const DataSource& source, const ModelChoice& model, const TrainSpec& train_spec);

struct SweepOptions {
  std::vector<int> Ks{1, 2, 3, 4, 5, 6};
  std::vector<int> rs{1, 2, 4};
};
Report cmd_sweep(const DataSource& source, const ModelChoice& model, const TrainSpec& train_spec,
                 const SweepOptions& grid);

struct PerturbOptions {
  std::vector<double> fractions{0.0, 0.2, 0.4, 0.6, 0.8};
  std::vector<std::string> models{"gcn", "ngcn-a"};
};
/// For each fraction and each seed s in [seed, seed + runs): remove features
/// with seed s, then train once with seed s. Seeds are shared across models.
Report cmd_perturb(const DataSource& source, const ModelChoice& base, const TrainSpec& train_spec,
                   const PerturbOptions& options);

struct ScarcityOptions {
  std::vector<std::size_t> per_class{5, 10, 20, 100};
  std::vector<std::string> models{"gcn", "ngcn-a"};
};
/// For each count and seed s: subsample training labels with seed s, train
/// once with seed s. Identical subsets across models.
Report cmd_scarcity(const DataSource& source, const ModelChoice& base, const TrainSpec& train_spec,
                    const ScarcityOptions& options);

struct DepthOptions {
  std::vector<int> hidden_layers{1, 2, 3};
  std::vector<std::string> models{"gcn", "sage"};
  int hidden_dim = 64;
};
Report cmd_depth(const DataSource& source, const TrainSpec& train_spec, const DepthOptions& options);

/// CSV views of grid-shaped reports (header row first).
std::string sweep_csv(const Json& body);
std::string perturb_csv(const Json& body);
std::string scarcity_csv(const Json& body);
std::string depth_csv(const Json& body);

}  // namespace ngcn::experiments
