#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ngcn/dataset.hpp"
#include "ngcn/models.hpp"
#include "ngcn/ops.hpp"

namespace ngcn {

struct TrainSpec {
  double lr = 0.01;
  int steps = 600;
  double dropout = 0.5;
  double l2 = 1e-5;
  std::uint64_t seed = 0;
  /// Independent repetitions with seeds seed, seed + 1, ...
  int runs = 20;
  /// Worker threads for repetitions; results never depend on it.
  int jobs = 1;

  void validate() const;
};

/// Softmax cross-entropy for single-label data, sigmoid for multi-label.
enum class LossKind { softmax, sigmoid };

LossKind loss_kind_for(Task task);

/// Full objective on the training mask: cross-entropy of the combined output,
/// plus one cross-entropy term per module output when intermediate
/// supervision is on, plus l2 · Σ‖W‖² over the regularized weights.
Var total_loss(const ModelSpec& spec, const BoundParams& params, const NetworkOutput& out,
               const Dataset& dataset, const NodeMask& train_mask, double l2);

/// Convenience overload: forward + loss on a fresh tape-bound parameter set.
Var total_loss(Tape& tape, const ModelSpec& spec, const ModelParams& params, const ModelInputs& inputs,
               const Dataset& dataset, const ForwardOptions& opts, double l2, BoundParams* bound = nullptr);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<DenseMatrix> m;
  std::vector<DenseMatrix> v;
};

/// One bias-corrected Adam update at step t >= 1.
void adam_step(std::span<DenseMatrix* const> params, std::span<const DenseMatrix> grads, AdamState& state,
               double lr, long t);

/// Fraction of `nodes` whose argmax output matches the label's class.
double accuracy(const DenseMatrix& output, const DenseMatrix& labels, std::span<const std::size_t> nodes);
/// Micro-averaged F1 over all labels of `nodes`, predicting positive where
/// logit > threshold. 0 when there are no true and no predicted positives.
double micro_f1(const DenseMatrix& logits, const DenseMatrix& labels, std::span<const std::size_t> nodes,
                double threshold = 0.0);

/// Inference-mode forward (no dropout) of the full network.
NetworkOutput predict(const ModelSpec& spec, const ModelParams& params, const ModelInputs& inputs,
                      Tape& tape);

/// Accuracy (single-label) or micro-F1 (multi-label) on a split.
double evaluate(const ModelParams& params, const ModelSpec& spec, const ModelInputs& inputs,
                const Dataset& dataset, std::span<const std::size_t> split);

struct TrainResult {
  ModelParams best_params;
  double best_val_metric = 0.0;
  double test_metric = 0.0;
  int step_of_best = 0;
  std::vector<double> loss_history;
  std::vector<double> val_history;
  /// Attention weights m after every step (attention combiner only).
  std::vector<std::vector<double>> attention_trace;
  /// m of the snapshot (attention combiner only).
  std::vector<double> best_attention;
};

/// `steps` full-batch Adam updates. Validation is evaluated after every
/// step; the parameters at the first strict maximum are kept, and the test
/// metric is computed from that snapshot. Throws RunError on a non-finite
/// loss.
TrainResult train(const ModelSpec& model_spec, const TrainSpec& train_spec, const Dataset& dataset,
                  const ModelInputs& inputs);
TrainResult train(const ModelSpec& model_spec, const TrainSpec& train_spec, const Dataset& dataset);

struct RepeatedResult {
  std::vector<TrainResult> runs;
  /// Index of the run with the highest validation metric (first on ties).
  std::size_t best_run = 0;
  double mean_test = 0.0;
  double std_test = 0.0;  // population standard deviation

  double best_test() const { return runs.at(best_run).test_metric; }
};

/// Best-by-validation index and population mean/std of the test metric.
RepeatedResult aggregate_runs(std::vector<TrainResult> runs);

/// train_spec.runs repetitions with seeds seed + run_index.
RepeatedResult train_repeated(const ModelSpec& model_spec, const TrainSpec& train_spec,
                              const Dataset& dataset, const ModelInputs& inputs);

}  // namespace ngcn
