#include "ngcn/models.hpp"

#include <string>

#include "ngcn/errors.hpp"
#include "ngcn/ops.hpp"

namespace ngcn {

void ModelSpec::validate(std::size_t num_classes) const {
  if (K < 1) throw ConfigError("K must be >= 1");
  if (r < 1) throw ConfigError("r must be >= 1");
  if (layers < 1) throw ConfigError("layers must be >= 1");
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (first_power < 0) throw ConfigError("first_power must be >= 0");
  if (module_output_dim < 0) throw ConfigError("module_output_dim must be >= 0");
  if (num_classes == 0) throw ConfigError("dataset has no classes");
  if (combiner == Combiner::identity && num_modules() != 1) {
    throw ConfigError("identity combiner needs exactly one module (K = r = 1)");
  }
  if (combiner == Combiner::identity && output_dim(num_classes) != static_cast<int>(num_classes)) {
    throw ConfigError("identity combiner needs module output width == number of classes");
  }
  if (combiner == Combiner::attention && output_dim(num_classes) != static_cast<int>(num_classes)) {
    throw ConfigError("attention combiner needs module output width == number of classes");
  }
  if (per_module_softmax && combiner != Combiner::attention) {
    throw ConfigError("per_module_softmax only applies to the attention combiner");
  }
  if (intermediate_supervision && combiner != Combiner::attention) {
    throw ConfigError("intermediate supervision only applies to the attention combiner");
  }
}

ModelSpec ModelSpec::gcn(int layers, int hidden_dim) {
  ModelSpec s;
  s.base = BaseModel::gcn;
  s.combiner = Combiner::identity;
  s.normalization = Normalization::symmetric;
  s.first_power = 1;
  s.layers = layers;
  s.hidden_dim = hidden_dim;
  return s;
}

ModelSpec ModelSpec::sage(int layers, int hidden_dim) {
  ModelSpec s = gcn(layers, hidden_dim);
  s.base = BaseModel::sage;
  s.normalization = Normalization::random_walk;
  return s;
}

ModelSpec ModelSpec::ngcn(int K, int r, Combiner combiner) {
  ModelSpec s;
  s.base = BaseModel::gcn;
  s.K = K;
  s.r = r;
  s.combiner = combiner;
  s.normalization = Normalization::symmetric;
  s.per_module_softmax = combiner == Combiner::attention;
  return s;
}

ModelSpec ModelSpec::nsage(int K, int r, Combiner combiner) {
  ModelSpec s = ngcn(K, r, combiner);
  s.base = BaseModel::sage;
  s.normalization = Normalization::random_walk;
  return s;
}

ModelSpec ModelSpec::dcnn(int K) {
  ModelSpec s;
  s.base = BaseModel::gcn;
  s.K = K;
  s.r = 1;
  s.layers = 1;
  s.combiner = Combiner::fc;
  s.normalization = Normalization::random_walk;
  s.module_output_dim = 16;
  s.module_output_relu = true;
  return s;
}

std::vector<DenseMatrix*> ModelParams::tensors() {
  std::vector<DenseMatrix*> out;
  for (auto& m : modules)
    for (auto& w : m) out.push_back(&w);
  if (!fc.empty()) out.push_back(&fc);
  if (!attention.empty()) out.push_back(&attention);
  return out;
}

std::vector<const DenseMatrix*> ModelParams::tensors() const {
  std::vector<const DenseMatrix*> out;
  for (const auto& m : modules)
    for (const auto& w : m) out.push_back(&w);
  if (!fc.empty()) out.push_back(&fc);
  if (!attention.empty()) out.push_back(&attention);
  return out;
}

std::vector<bool> ModelParams::regularized() const {
  std::vector<bool> out;
  for (const auto& m : modules) out.insert(out.end(), m.size(), true);
  if (!fc.empty()) out.push_back(true);
  if (!attention.empty()) out.push_back(false);
  return out;
}

DenseMatrix ModelParams::attention_weights() const {
  if (attention.empty()) return {};
  return kernels::softmax_rows(attention);
}

ModelParams init_params(const ModelSpec& spec, std::size_t num_features, std::size_t num_classes,
                        Rng& rng) {
  spec.validate(num_classes);
  if (num_features == 0) throw ConfigError("dataset has no features");
  const auto out_dim = static_cast<std::size_t>(spec.output_dim(num_classes));
  const std::size_t in_factor = spec.base == BaseModel::sage ? 2 : 1;

  ModelParams p;
  p.modules.resize(static_cast<std::size_t>(spec.num_modules()));
  for (auto& module : p.modules) {
    std::size_t in = num_features;
    for (int l = 0; l < spec.layers; ++l) {
      const std::size_t out = l + 1 == spec.layers ? out_dim : static_cast<std::size_t>(spec.hidden_dim);
      module.push_back(glorot_init(in_factor * in, out, rng));
      in = out;
    }
  }
  if (spec.combiner == Combiner::fc) {
    p.fc = glorot_init(static_cast<std::size_t>(spec.num_modules()) * out_dim, num_classes, rng);
  } else if (spec.combiner == Combiner::attention) {
    p.attention = DenseMatrix(1, static_cast<std::size_t>(spec.num_modules()), 0.0);
  }
  return p;
}

ModelInputs make_inputs(const SparseMatrix& normalized_adjacency, const DenseMatrix& features,
                        std::size_t num_classes, Normalization normalization) {
  if (normalized_adjacency.n() != features.rows()) {
    throw ConfigError("adjacency has " + std::to_string(normalized_adjacency.n()) + " nodes, features " +
                      std::to_string(features.rows()) + " rows");
  }
  ModelInputs in;
  in.adjacency = std::make_shared<const SparseMatrix>(normalized_adjacency);
  in.features = std::make_shared<const SparseMatrix>(SparseMatrix::from_dense(features));
  in.num_classes = num_classes;
  in.normalization = normalization;
  return in;
}

ModelInputs prepare_inputs(const Dataset& dataset, Normalization normalization) {
  const SparseMatrix a = build_graph(dataset.edges, dataset.n, /*symmetrize=*/true, /*self_loops=*/true);
  const SparseMatrix a_hat =
      normalization == Normalization::symmetric ? sym_normalize(a) : rw_normalize(a);
  return make_inputs(a_hat, dataset.features, dataset.num_classes(), normalization);
}

std::vector<Var> BoundParams::flat() const {
  std::vector<Var> out;
  for (const auto& m : modules) out.insert(out.end(), m.begin(), m.end());
  if (fc.valid()) out.push_back(fc);
  if (attention.valid()) out.push_back(attention);
  return out;
}

BoundParams bind_params(Tape& tape, const ModelParams& params) {
  BoundParams b;
  for (const auto& m : params.modules) {
    auto& dst = b.modules.emplace_back();
    for (const auto& w : m) dst.push_back(tape.parameter(w));
  }
  if (!params.fc.empty()) b.fc = tape.parameter(params.fc);
  if (!params.attention.empty()) b.attention = tape.parameter(params.attention);
  return b;
}

namespace {

void require_weights(std::span<const Var> weights) {
  if (weights.empty() || !weights[0].valid()) throw ConfigError("module has no bound weights");
}

std::shared_ptr<const SparseMatrix> drop_features(const std::shared_ptr<const SparseMatrix>& x,
                                                  const ForwardOptions& opts) {
  if (!opts.training || opts.dropout == 0.0) return x;
  if (!opts.rng) throw ConfigError("training with dropout needs an rng");
  return std::make_shared<const SparseMatrix>(sparse_dropout(*x, opts.dropout, *opts.rng));
}

Var drop_dense(Var h, const ForwardOptions& opts) {
  if (!opts.training || opts.dropout == 0.0) return h;
  if (!opts.rng) throw ConfigError("training with dropout needs an rng");
  return dropout(h, opts.dropout, *opts.rng, true);
}

void check_layer(const Var& w, std::size_t expected_rows, std::size_t layer, const char* model) {
  if (w.rows() != expected_rows) {
    throw ConfigError(std::string(model) + " layer " + std::to_string(layer) + ": weight has " +
                      std::to_string(w.rows()) + " rows, input width is " + std::to_string(expected_rows));
  }
}

/// Â^k · h · w, multiplying in whichever order keeps the walk on the narrower
/// matrix.
Var walk_then_project(const WalkOperator& walk, Var h, Var w) {
  if (walk.power > 0 && w.cols() < w.rows()) return walk_apply(walk, matmul(h, w));
  return matmul(walk_apply(walk, h), w);
}

}  // namespace

Var gcn_module_forward(const WalkOperator& walk, const std::shared_ptr<const SparseMatrix>& x,
                       std::span<const Var> weights, const ForwardOptions& opts, bool final_relu) {
  require_weights(weights);
  if (!x) throw ConfigError("gcn module: missing features");
  check_layer(weights[0], x->cols(), 0, "gcn");
  Var h = walk_apply(walk, spmm(drop_features(x, opts), weights[0]));
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (l > 0) {
      check_layer(weights[l], h.cols(), l, "gcn");
      h = walk_then_project(walk, drop_dense(h, opts), weights[l]);
    }
    if (l + 1 < weights.size() || final_relu) h = relu(h);
  }
  return h;
}

Var sage_module_forward(const WalkOperator& walk, const std::shared_ptr<const SparseMatrix>& x,
                        std::span<const Var> weights, const ForwardOptions& opts) {
  require_weights(weights);
  if (!x) throw ConfigError("sage module: missing features");
  Var h;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const Var& w = weights[l];
    const std::size_t in = l == 0 ? x->cols() : h.cols();
    check_layer(w, 2 * in, l, "sage");
    // [Z ∥ ÂZ]·W = Z·W_self + Â(Z·W_neigh)
    Var w_self = slice_rows(w, 0, in);
    Var w_neigh = slice_rows(w, in, 2 * in);
    Var z;
    if (l == 0) {
      auto xd = drop_features(x, opts);
      z = add(spmm(xd, w_self), walk_apply(walk, spmm(xd, w_neigh)));
    } else {
      Var hd = drop_dense(h, opts);
      z = add(matmul(hd, w_self), walk_then_project(walk, hd, w_neigh));
    }
    h = l2_normalize_rows(relu(z));
  }
  return h;
}

Var fc_combine(std::span<const Var> outputs, Var w_fc) {
  Var joined = outputs.size() == 1 ? outputs[0] : concat_cols(outputs);
  if (joined.cols() != w_fc.rows()) {
    throw ConfigError("fc_combine: " + std::to_string(joined.cols()) + " concatenated columns vs W_fc with " +
                      std::to_string(w_fc.rows()) + " rows");
  }
  return matmul(joined, w_fc);
}

Var attention_combine(std::span<const Var> outputs, Var attention_logits) {
  return weighted_sum(outputs, softmax_rows(attention_logits));
}

NetworkOutput network_forward(const ModelSpec& spec, const BoundParams& params, const ModelInputs& inputs,
                              const ForwardOptions& opts) {
  spec.validate(inputs.num_classes);
  if (params.modules.size() != static_cast<std::size_t>(spec.num_modules())) {
    throw ConfigError("params hold " + std::to_string(params.modules.size()) + " modules, spec needs " +
                      std::to_string(spec.num_modules()));
  }
  NetworkOutput out;
  std::size_t idx = 0;
  for (int k = 0; k < spec.K; ++k) {
    const WalkOperator walk{inputs.adjacency, spec.first_power + k};
    for (int i = 0; i < spec.r; ++i, ++idx) {
      const auto& w = params.modules[idx];
      if (w.size() != static_cast<std::size_t>(spec.layers)) {
        throw ConfigError("module " + std::to_string(idx) + " has " + std::to_string(w.size()) +
                          " layers, spec needs " + std::to_string(spec.layers));
      }
      out.module_outputs.push_back(spec.base == BaseModel::gcn
                                       ? gcn_module_forward(walk, inputs.features, w, opts,
                                                            spec.module_output_relu)
                                       : sage_module_forward(walk, inputs.features, w, opts));
    }
  }

  switch (spec.combiner) {
    case Combiner::identity:
      out.output = out.module_outputs.front();
      break;
    case Combiner::fc:
      if (!params.fc.valid()) throw ConfigError("fc combiner without W_fc");
      out.output = fc_combine(out.module_outputs, params.fc);
      break;
    case Combiner::attention: {
      if (!params.attention.valid()) throw ConfigError("attention combiner without logits");
      std::vector<Var> parts = out.module_outputs;
      if (spec.per_module_softmax) {
        for (auto& p : parts) p = softmax_rows(p);
      }
      out.attention_weights = softmax_rows(params.attention);
      out.output = weighted_sum(parts, out.attention_weights);
      out.output_is_probability = spec.per_module_softmax;
      break;
    }
  }
  return out;
}

NetworkOutput dcnn_forward(const ModelSpec& spec, const BoundParams& params, const ModelInputs& inputs,
                           const ForwardOptions& opts) {
  if (spec.base != BaseModel::gcn || spec.layers != 1 || spec.r != 1 || spec.combiner != Combiner::fc ||
      spec.normalization != Normalization::random_walk || inputs.normalization != Normalization::random_walk) {
    throw ConfigError("dcnn_forward: needs one-layer gcn modules, r = 1, fc combiner, D^-1 A normalization");
  }
  return network_forward(spec, params, inputs, opts);
}

std::string to_string(BaseModel b) { return b == BaseModel::gcn ? "gcn" : "sage"; }

std::string to_string(Combiner c) {
  switch (c) {
    case Combiner::fc:
      return "fc";
    case Combiner::attention:
      return "attention";
    case Combiner::identity:
      return "identity";
  }
  return "?";
}

std::string to_string(Normalization n) {
  return n == Normalization::symmetric ? "symmetric" : "random_walk";
}

}  // namespace ngcn
