#include "ngcn/training.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ngcn/errors.hpp"
#include "ngcn/parallel.hpp"

namespace ngcn {

void TrainSpec::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (!(l2 >= 0.0)) throw ConfigError("l2 must be >= 0");
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

LossKind loss_kind_for(Task task) {
  return task == Task::multi_label ? LossKind::sigmoid : LossKind::softmax;
}

namespace {

Var label_loss(Var logits, const Dataset& dataset, const NodeMask& mask) {
  return loss_kind_for(dataset.task) == LossKind::softmax ? masked_softmax_ce(logits, dataset.labels, mask)
                                                          : masked_sigmoid_ce(logits, dataset.labels, mask);
}

}  // namespace

Var total_loss(const ModelSpec& spec, const BoundParams& params, const NetworkOutput& out,
               const Dataset& dataset, const NodeMask& train_mask, double l2) {
  Var loss;
  if (out.output_is_probability) {
    if (dataset.task != Task::single_label) {
      throw ConfigError("per-module softmax mixture needs a single_label dataset");
    }
    loss = masked_nll(out.output, dataset.labels, train_mask);
  } else {
    loss = label_loss(out.output, dataset, train_mask);
  }
  if (spec.intermediate_supervision) {
    for (const auto& module_out : out.module_outputs) {
      loss = add(loss, label_loss(module_out, dataset, train_mask));
    }
  }
  if (l2 > 0.0) {
    for (const auto& module : params.modules)
      for (const auto& w : module) loss = add(loss, scale(sum_squares(w), l2));
    if (params.fc.valid()) loss = add(loss, scale(sum_squares(params.fc), l2));
  }
  return loss;
}

Var total_loss(Tape& tape, const ModelSpec& spec, const ModelParams& params, const ModelInputs& inputs,
               const Dataset& dataset, const ForwardOptions& opts, double l2, BoundParams* bound) {
  if (dataset.split.train.empty()) throw ConfigError("empty training split");
  BoundParams b = bind_params(tape, params);
  const NetworkOutput out = network_forward(spec, b, inputs, opts);
  Var loss = total_loss(spec, b, out, dataset, make_mask(dataset.n, dataset.split.train), l2);
  if (bound) *bound = std::move(b);
  return loss;
}

void adam_step(std::span<DenseMatrix* const> params, std::span<const DenseMatrix> grads, AdamState& state,
               double lr, long t) {
  if (t < 1) throw ConfigError("adam_step: t must be >= 1");
  if (params.size() != grads.size()) throw ConfigError("adam_step: params/grads count mismatch");
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.emplace_back(p->rows(), p->cols());
      state.v.emplace_back(p->rows(), p->cols());
    }
  }
  if (state.m.size() != params.size()) throw ConfigError("adam_step: state does not match params");
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->values();
    auto g = grads[i].values();
    auto m = state.m[i].values();
    auto v = state.v[i].values();
    if (g.size() != p.size()) throw ConfigError("adam_step: gradient shape mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

double accuracy(const DenseMatrix& output, const DenseMatrix& labels, std::span<const std::size_t> nodes) {
  if (nodes.empty()) throw ConfigError("accuracy: empty split");
  if (!output.same_shape(labels)) throw ConfigError("accuracy: output/label shape mismatch");
  std::size_t hits = 0;
  for (std::size_t id : nodes) {
    auto o = output.row(id);
    auto y = labels.row(id);
    const auto pred = static_cast<std::size_t>(std::max_element(o.begin(), o.end()) - o.begin());
    if (y[pred] == 1.0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(nodes.size());
}

double micro_f1(const DenseMatrix& logits, const DenseMatrix& labels, std::span<const std::size_t> nodes,
                double threshold) {
  if (nodes.empty()) throw ConfigError("micro_f1: empty split");
  if (!logits.same_shape(labels)) throw ConfigError("micro_f1: output/label shape mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t id : nodes) {
    auto z = logits.row(id);
    auto y = labels.row(id);
    for (std::size_t c = 0; c < z.size(); ++c) {
      const bool pred = z[c] > threshold;
      const bool truth = y[c] != 0.0;
      tp += pred && truth;
      fp += pred && !truth;
      fn += !pred && truth;
    }
  }
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

NetworkOutput predict(const ModelSpec& spec, const ModelParams& params, const ModelInputs& inputs,
                      Tape& tape) {
  const BoundParams b = bind_params(tape, params);
  return network_forward(spec, b, inputs, ForwardOptions{});
}

namespace {

double metric_of(const DenseMatrix& output, const Dataset& dataset, std::span<const std::size_t> split) {
  return dataset.task == Task::single_label ? accuracy(output, dataset.labels, split)
                                            : micro_f1(output, dataset.labels, split, 0.0);
}

}  // namespace

double evaluate(const ModelParams& params, const ModelSpec& spec, const ModelInputs& inputs,
                const Dataset& dataset, std::span<const std::size_t> split) {
  if (split.empty()) throw ConfigError("evaluate: empty split");
  Tape tape;
  const NetworkOutput out = predict(spec, params, inputs, tape);
  return metric_of(out.output.value(), dataset, split);
}

TrainResult train(const ModelSpec& model_spec, const TrainSpec& train_spec, const Dataset& dataset,
                  const ModelInputs& inputs) {
  train_spec.validate();
  model_spec.validate(dataset.num_classes());
  if (inputs.normalization != model_spec.normalization) {
    throw ConfigError("model inputs were prepared with " + to_string(inputs.normalization) +
                      " normalization, spec needs " + to_string(model_spec.normalization));
  }
  if (dataset.split.train.empty()) throw ConfigError("empty training split");
  if (dataset.split.val.empty()) throw ConfigError("empty validation split");
  if (dataset.split.test.empty()) throw ConfigError("empty test split");

  Rng root(train_spec.seed);
  Rng init_rng = root.fork(0);
  Rng dropout_rng = root.fork(1);
  ModelParams params = init_params(model_spec, inputs.num_features(), dataset.num_classes(), init_rng);
  const NodeMask train_mask = make_mask(dataset.n, dataset.split.train);
  const bool has_attention = model_spec.combiner == Combiner::attention;

  TrainResult result;
  result.best_val_metric = -1.0;
  AdamState adam;
  const ForwardOptions train_opts{true, train_spec.dropout, &dropout_rng};

  for (int step = 1; step <= train_spec.steps; ++step) {
    {
      Tape tape;
      const BoundParams bound = bind_params(tape, params);
      const NetworkOutput out = network_forward(model_spec, bound, inputs, train_opts);
      Var loss = total_loss(model_spec, bound, out, dataset, train_mask, train_spec.l2);
      const double loss_value = loss.value().item();
      if (!std::isfinite(loss_value)) throw RunError(step, "non-finite training loss");
      result.loss_history.push_back(loss_value);
      tape.backward(loss);
      std::vector<DenseMatrix> grads;
      for (const Var& v : bound.flat()) grads.push_back(v.grad());
      adam_step(params.tensors(), grads, adam, train_spec.lr, step);
    }

    Tape eval_tape;
    const NetworkOutput eval = predict(model_spec, params, inputs, eval_tape);
    const double val = metric_of(eval.output.value(), dataset, dataset.split.val);
    result.val_history.push_back(val);
    if (has_attention) {
      const DenseMatrix m = params.attention_weights();
      result.attention_trace.emplace_back(m.values().begin(), m.values().end());
    }
    if (val > result.best_val_metric) {
      result.best_val_metric = val;
      result.step_of_best = step;
      result.best_params = params;
    }
  }

  result.test_metric = evaluate(result.best_params, model_spec, inputs, dataset, dataset.split.test);
  if (has_attention) {
    const DenseMatrix m = result.best_params.attention_weights();
    result.best_attention.assign(m.values().begin(), m.values().end());
  }
  return result;
}

TrainResult train(const ModelSpec& model_spec, const TrainSpec& train_spec, const Dataset& dataset) {
  return train(model_spec, train_spec, dataset, prepare_inputs(dataset, model_spec.normalization));
}

RepeatedResult train_repeated(const ModelSpec& model_spec, const TrainSpec& train_spec,
                              const Dataset& dataset, const ModelInputs& inputs) {
  train_spec.validate();
  const auto runs = static_cast<std::size_t>(train_spec.runs);
  std::vector<TrainResult> results(runs);
  parallel_for(runs, train_spec.jobs, [&](std::size_t i) {
    TrainSpec spec = train_spec;
    spec.seed = train_spec.seed + i;
    results[i] = train(model_spec, spec, dataset, inputs);
  });
  return aggregate_runs(std::move(results));
}

RepeatedResult aggregate_runs(std::vector<TrainResult> runs) {
  if (runs.empty()) throw ConfigError("aggregate_runs: no runs");
  RepeatedResult out;
  out.runs = std::move(runs);
  const auto count = static_cast<double>(out.runs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < out.runs.size(); ++i) {
    sum += out.runs[i].test_metric;
    if (out.runs[i].best_val_metric > out.runs[out.best_run].best_val_metric) out.best_run = i;
  }
  out.mean_test = sum / count;
  double var = 0.0;
  for (const auto& r : out.runs) var += (r.test_metric - out.mean_test) * (r.test_metric - out.mean_test);
  out.std_test = std::sqrt(var / count);
  return out;
}

}  // namespace ngcn
