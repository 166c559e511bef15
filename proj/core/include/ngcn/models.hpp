#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ngcn/dataset.hpp"
#include "ngcn/dense_matrix.hpp"
#include "ngcn/graph.hpp"
#include "ngcn/rng.hpp"
#include "ngcn/tape.hpp"

namespace ngcn {

enum class BaseModel { gcn, sage };
enum class Combiner { fc, attention, identity };
enum class Normalization { symmetric, random_walk };

/// Architecture of a network of graph modules: K walk powers, r replicas per
/// power, L layers per module, joined by a combiner.
///
/// Module (k, i) consumes walk power first_power + k. first_power = 1 with
/// K = r = 1 and the identity combiner is the plain GCN / SAGE baseline.
struct ModelSpec {
  BaseModel base = BaseModel::gcn;
  int K = 1;
  int r = 1;
  int layers = 2;
  int hidden_dim = 16;
  Combiner combiner = Combiner::fc;
  Normalization normalization = Normalization::symmetric;
  int first_power = 0;
  /// Width of every module's output; 0 means the number of classes. The
  /// attention combiner requires it to equal the number of classes.
  int module_output_dim = 0;
  /// Apply ReLU to the final module layer (DCNN channels).
  bool module_output_relu = false;
  /// Attention only: combine per-module softmax outputs (a mixture of
  /// distributions) instead of raw logits.
  bool per_module_softmax = false;
  /// Attention only: add a cross-entropy term per module output.
  bool intermediate_supervision = false;

  int num_modules() const noexcept { return K * r; }
  int output_dim(std::size_t num_classes) const {
    return module_output_dim > 0 ? module_output_dim : static_cast<int>(num_classes);
  }
  /// Throws ConfigError on inconsistent settings.
  void validate(std::size_t num_classes) const;

  /// 2-layer GCN on Â (power 1), identity combiner.
  static ModelSpec gcn(int layers = 2, int hidden_dim = 16);
  /// 2-layer mean-pool SAGE on D^{-1}A (power 1), identity combiner.
  static ModelSpec sage(int layers = 2, int hidden_dim = 16);
  static ModelSpec ngcn(int K, int r, Combiner combiner);
  static ModelSpec nsage(int K, int r, Combiner combiner);
  /// One-layer, 16-channel modules on powers of D^{-1}A joined by fc.
  static ModelSpec dcnn(int K);
};

/// Trainable state. Flattened order (tensors()): module weights in
/// (module, layer) order, then fc, then attention logits.
struct ModelParams {
  std::vector<std::vector<DenseMatrix>> modules;
  DenseMatrix fc;         // empty unless Combiner::fc
  DenseMatrix attention;  // 1 x (K·r) logits, empty unless Combiner::attention

  std::vector<DenseMatrix*> tensors();
  std::vector<const DenseMatrix*> tensors() const;
  /// Parallel to tensors(): true for weight matrices subject to L2, false
  /// for attention logits.
  std::vector<bool> regularized() const;
  /// softmax of the attention logits (1 x K·r); empty without attention.
  DenseMatrix attention_weights() const;
};

/// Glorot-uniform weights, zero attention logits.
ModelParams init_params(const ModelSpec& spec, std::size_t num_features, std::size_t num_classes,
                        Rng& rng);

/// Normalized adjacency plus CSR features, built once per dataset and shared
/// read-only by every run.
struct ModelInputs {
  std::shared_ptr<const SparseMatrix> adjacency;
  std::shared_ptr<const SparseMatrix> features;
  std::size_t num_classes = 0;
  Normalization normalization = Normalization::symmetric;

  std::size_t n() const { return features->rows(); }
  std::size_t num_features() const { return features->cols(); }
};

/// Symmetrizes the edges, adds self-loops, normalizes.
ModelInputs prepare_inputs(const Dataset& dataset, Normalization normalization);
ModelInputs make_inputs(const SparseMatrix& normalized_adjacency, const DenseMatrix& features,
                        std::size_t num_classes, Normalization normalization);

struct ForwardOptions {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;  // required when training with dropout > 0
};

/// Parameters bound as tape leaves.
struct BoundParams {
  std::vector<std::vector<Var>> modules;
  Var fc;
  Var attention;

  std::vector<Var> flat() const;
};

BoundParams bind_params(Tape& tape, const ModelParams& params);

/// L layers of dropout → Â^k → W → ReLU (no ReLU on the last layer unless
/// final_relu). Layer 0 consumes the sparse features.
Var gcn_module_forward(const WalkOperator& walk, const std::shared_ptr<const SparseMatrix>& x,
                       std::span<const Var> weights, const ForwardOptions& opts, bool final_relu = false);

/// L layers of dropout → [Z ∥ Â^k Z] W → ReLU → row-L2-normalize.
Var sage_module_forward(const WalkOperator& walk, const std::shared_ptr<const SparseMatrix>& x,
                        std::span<const Var> weights, const ForwardOptions& opts);

/// concat_cols(outputs) · w_fc
Var fc_combine(std::span<const Var> outputs, Var w_fc);
/// Σ_j softmax(m̃)_j · outputs[j]
Var attention_combine(std::span<const Var> outputs, Var attention_logits);

struct NetworkOutput {
  /// Logits, or class probabilities when output_is_probability.
  Var output;
  bool output_is_probability = false;
  /// Raw (pre-softmax) module outputs in (k, i) order.
  std::vector<Var> module_outputs;
  /// 1 x K·r attention weights m, attention combiner only.
  Var attention_weights;
};

NetworkOutput network_forward(const ModelSpec& spec, const BoundParams& params,
                              const ModelInputs& inputs, const ForwardOptions& opts);

/// network_forward for a ModelSpec::dcnn configuration; rejects others.
NetworkOutput dcnn_forward(const ModelSpec& spec, const BoundParams& params, const ModelInputs& inputs,
                           const ForwardOptions& opts);

std::string to_string(BaseModel b);
std::string to_string(Combiner c);
std::string to_string(Normalization n);

}  // namespace ngcn
