#include "ngcn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ngcn/errors.hpp"

namespace ngcn {

namespace {

constexpr double kNormEps = 1e-12;
constexpr double kProbFloor = 1e-300;

Tape& tape_of(const Var& v) {
  if (!v.valid()) throw ConfigError("op on an unbound variable");
  return *v.tape();
}

Tape& common_tape(const Var& a, const Var& b) {
  if (a.tape() != b.tape()) throw ConfigError("op inputs live on different tapes");
  return tape_of(a);
}

std::string shape(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

std::size_t count_masked(const NodeMask& mask, std::size_t rows, const char* op) {
  if (mask.size() != rows) {
    throw ConfigError(std::string(op) + ": mask has " + std::to_string(mask.size()) +
                      " entries for " + std::to_string(rows) + " rows");
  }
  const auto m = static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(),
                                                        [](std::uint8_t b) { return b != 0; }));
  if (m == 0) throw ConfigError(std::string(op) + ": mask selects no rows");
  return m;
}

void check_labels(const DenseMatrix& logits, const DenseMatrix& labels, const char* op) {
  if (!logits.same_shape(labels)) {
    throw ConfigError(std::string(op) + ": logits " + shape(logits) + " vs labels " + shape(labels));
  }
}

// Masked row indices plus a private copy of their label rows, so loss
// closures do not depend on the caller's buffers outliving the tape.
struct MaskedRows {
  std::vector<std::size_t> idx;
  DenseMatrix labels;
};

MaskedRows gather_masked(const DenseMatrix& logits, const DenseMatrix& labels, const NodeMask& mask,
                         const char* op) {
  check_labels(logits, labels, op);
  count_masked(mask, logits.rows(), op);
  MaskedRows out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.idx.push_back(i);
  }
  out.labels = DenseMatrix(out.idx.size(), labels.cols());
  for (std::size_t r = 0; r < out.idx.size(); ++r) {
    std::copy_n(labels.row(out.idx[r]).begin(), labels.cols(), out.labels.row(r).begin());
  }
  return out;
}

double log_sum_exp(std::span<const double> row) {
  const double mx = *std::max_element(row.begin(), row.end());
  double s = 0.0;
  for (double v : row) s += std::exp(v - mx);
  return mx + std::log(s);
}

}  // namespace

NodeMask make_mask(std::size_t n, std::span<const std::size_t> nodes) {
  NodeMask mask(n, 0);
  for (std::size_t id : nodes) {
    if (id >= n) throw ConfigError("make_mask: node " + std::to_string(id) + " out of range");
    mask[id] = 1;
  }
  return mask;
}

Var matmul(Var a, Var b) {
  Tape& t = common_tape(a, b);
  DenseMatrix out = kernels::matmul(a.value(), b.value());
  return t.record("matmul", std::move(out), {a, b},
                  [a, b](const DenseMatrix& g, std::span<DenseMatrix* const> grads) {
                    if (grads[0]) kernels::axpy(1.0, kernels::matmul_a_bt(g, b.value()), *grads[0]);
                    if (grads[1]) kernels::axpy(1.0, kernels::matmul_at_b(a.value(), g), *grads[1]);
                  });
}

Var add(Var a, Var b) {
  Tape& t = common_tape(a, b);
  if (!a.value().same_shape(b.value())) {
    throw ConfigError("add: " + shape(a.value()) + " vs " + shape(b.value()));
  }
  DenseMatrix out = a.value();
  kernels::axpy(1.0, b.value(), out);
  return t.record("add", std::move(out), {a, b},
                  [](const DenseMatrix& g, std::span<DenseMatrix* const> grads) {
                    if (grads[0]) kernels::axpy(1.0, g, *grads[0]);
                    if (grads[1]) kernels::axpy(1.0, g, *grads[1]);
                  });
}

Var scale(Var x, double factor) {
  Tape& t = tape_of(x);
  DenseMatrix out = x.value();
  for (double& v : out.values()) v *= factor;
  return t.record("scale", std::move(out), {x},
                  [factor](const DenseMatrix& g, std::span<DenseMatrix* const> grads) {
                    if (grads[0]) kernels::axpy(factor, g, *grads[0]);
                  });
}

Var relu(Var x) {
  Tape& t = tape_of(x);
  DenseMatrix out = x.value();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return t.record("relu", std::move(out), {x},
                  [x](const DenseMatrix& g, std::span<DenseMatrix* const> grads) {
                    if (!grads[0]) return;
                    auto in = x.value().values();
                    auto gv = g.values();
                    auto dst = grads[0]->values();
                    for (std::size_t i = 0; i < in.size(); ++i) {
                      if (in[i] > 0.0) dst[i] += gv[i];
                    }
                  });
}

namespace kernels {

DenseMatrix softmax_rows(const DenseMatrix& x) {
  DenseMatrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto in = x.row(i);
    auto o = out.row(i);
    if (in.empty()) continue;
    const double mx = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      s += o[j];
    }
    for (double& v : o) v /= s;
  }
  return out;
}

}  // namespace kernels

Var softmax_rows(Var x) {
  Tape& t = tape_of(x);
  DenseMatrix out = kernels::softmax_rows(x.value());
  const std::size_t id = t.size();
  return t.record("softmax_rows", std::move(out), {x},
                  [&t, id](const DenseMatrix& g, std::span<DenseMatrix* const> grads) {
                    if (!grads[0]) return;
                    const DenseMatrix& y = t.value(id);
                    for (std::size_t i = 0; i < y.rows(); ++i) {
                      auto yr = y.row(i);
                      auto gr = g.row(i);
                      double dot = 0.0;
                      for (std::size_t j = 0; j < yr.size(); ++j) dot += yr[j] * gr[j];
                      auto dst = grads[0]->row(i);
                      for (std::size_t j = 0; j < yr.size(); ++j) dst[j] += yr[j] * (gr[j] - dot);
                    }
                  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ConfigError("concat_cols: no inputs");
  Tape& t = tape_of(parts[0]);
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.tape() != &t) throw ConfigError("concat_cols: inputs live on different tapes");
    if (p.rows() != rows) {
      throw ConfigError("concat_cols: row mismatch " + std::to_string(p.rows()) + " vs " +
                        std::to_string(rows));
    }
    cols += p.cols();
  }
  DenseMatrix out(rows, cols);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const DenseMatrix& v = p.value();
    for (std::size_t i = 0; i < rows; ++i) std::copy_n(v.row(i).begin(), v.cols(), out.row(i).begin() + off);
    off += v.cols();
  }
  return t.record("concat_cols", std::move(out), {parts.begin(), parts.end()},
                  [offsets](const DenseMatrix& g, std::span<DenseMatrix* const> grads) {
                    for (std::size_t p = 0; p < grads.size(); ++p) {
                      if (!grads[p]) continue;
                      DenseMatrix& dst = *grads[p];
                      for (std::size_t i = 0; i < dst.rows(); ++i) {
                        auto gr = g.row(i).subspan(offsets[p], dst.cols());
                        auto dr = dst.row(i);
                        for (std::size_t j = 0; j < dr.size(); ++j) dr[j] += gr[j];
                      }
                    }
                  });
}

Var slice_rows(Var x, std::size_t begin, std::size_t end) {
  Tape& t = tape_of(x);
  const DenseMatrix& v = x.value();
  if (begin > end || end > v.rows()) {
    throw ConfigError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) +
                      ") of " + shape(v));
  }
  const auto first = v.values().begin() + static_cast<std::ptrdiff_t>(begin * v.cols());
  const auto last = v.values().begin() + static_cast<std::ptrdiff_t>(end * v.cols());
  DenseMatrix out(end - begin, v.cols(), std::vector<double>(first, last));
  return t.record("slice_rows", std::move(out), {x},
                  [begin](const DenseMatrix& g, std::span<DenseMatrix* const> grads) {
                    if (!grads[0]) return;
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      auto gr = g.row(i);
                      auto dr = grads[0]->row(begin + i);
                      for (std::size_t j = 0; j < gr.size(); ++j) dr[j] += gr[j];
                    }
                  });
}

Var weighted_sum(std::span<const Var> parts, Var weights) {
  if (parts.empty()) throw ConfigError("weighted_sum: no inputs");
  Tape& t = tape_of(weights);
  const DenseMatrix& w = weights.value();
  if (w.rows() != 1 || w.cols() != parts.size()) {
    throw ConfigError("weighted_sum: weights " + shape(w) + " for " + std::to_string(parts.size()) +
                      " inputs");
  }
  DenseMatrix out(parts[0].rows(), parts[0].cols());
  for (std::size_t j = 0; j < parts.size(); ++j) {
    if (parts[j].tape() != &t) throw ConfigError("weighted_sum: inputs live on different tapes");
    if (!parts[j].value().same_shape(out)) {
      throw ConfigError("weighted_sum: part " + std::to_string(j) + " is " + shape(parts[j].value()) +
                        ", expected " + shape(out));
    }
    kernels::axpy(w(0, j), parts[j].value(), out);
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  inputs.push_back(weights);
  const std::vector<Var> saved(parts.begin(), parts.end());
  return t.record("weighted_sum", std::move(out), std::move(inputs),
                  [saved, weights](const DenseMatrix& g, std::span<DenseMatrix* const> grads) {
                    const DenseMatrix& w = weights.value();
                    const std::size_t n = saved.size();
                    for (std::size_t j = 0; j < n; ++j) {
                      if (grads[j]) kernels::axpy(w(0, j), g, *grads[j]);
                    }
                    if (DenseMatrix* dw = grads[n]) {
                      for (std::size_t j = 0; j < n; ++j) {
                        auto p = saved[j].value().values();
                        auto gv = g.values();
                        double acc = 0.0;
                        for (std::size_t i = 0; i < p.size(); ++i) acc += p[i] * gv[i];
                        (*dw)(0, j) += acc;
                      }
                    }
                  });
}

Var l2_normalize_rows(Var x) {
  Tape& t = tape_of(x);
  const DenseMatrix& in = x.value();
  DenseMatrix out(in.rows(), in.cols());
  std::vector<double> norms(in.rows());
  for (std::size_t i = 0; i < in.rows(); ++i) {
    double s = 0.0;
    for (double v : in.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
    const double d = std::max(norms[i], kNormEps);
    auto o = out.row(i);
    auto r = in.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) o[j] = r[j] / d;
  }
  const std::size_t id = t.size();
  return t.record(
      "l2_normalize_rows", std::move(out), {x},
      [&t, id, norms = std::move(norms)](const DenseMatrix& g, std::span<DenseMatrix* const> grads) {
        if (!grads[0]) return;
        const DenseMatrix& y = t.value(id);
        for (std::size_t i = 0; i < y.rows(); ++i) {
          auto gr = g.row(i);
          auto dr = grads[0]->row(i);
          if (norms[i] <= kNormEps) {
            for (std::size_t j = 0; j < gr.size(); ++j) dr[j] += gr[j] / kNormEps;
            continue;
          }
          auto yr = y.row(i);
          double dot = 0.0;
          for (std::size_t j = 0; j < yr.size(); ++j) dot += yr[j] * gr[j];
          for (std::size_t j = 0; j < yr.size(); ++j) dr[j] += (gr[j] - yr[j] * dot) / norms[i];
        }
      });
}

Var dropout(Var x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  Tape& t = tape_of(x);
  const double keep_scale = 1.0 / (1.0 - rate);
  DenseMatrix mask(x.rows(), x.cols());
  for (double& m : mask.values()) m = rng.bernoulli(rate) ? 0.0 : keep_scale;
  DenseMatrix out = x.value();
  {
    auto o = out.values();
    auto m = mask.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] *= m[i];
  }
  return t.record("dropout", std::move(out), {x},
                  [mask = std::move(mask)](const DenseMatrix& g, std::span<DenseMatrix* const> grads) {
                    if (!grads[0]) return;
                    auto gv = g.values();
                    auto m = mask.values();
                    auto d = grads[0]->values();
                    for (std::size_t i = 0; i < d.size(); ++i) d[i] += gv[i] * m[i];
                  });
}

Var sum(Var x) {
  Tape& t = tape_of(x);
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return t.record("sum", DenseMatrix::scalar(s), {x},
                  [](const DenseMatrix& g, std::span<DenseMatrix* const> grads) {
                    if (!grads[0]) return;
                    const double gs = g(0, 0);
                    for (double& d : grads[0]->values()) d += gs;
                  });
}

Var sum_squares(Var x) {
  Tape& t = tape_of(x);
  return t.record("sum_squares", DenseMatrix::scalar(kernels::sum_squares(x.value())), {x},
                  [x](const DenseMatrix& g, std::span<DenseMatrix* const> grads) {
                    if (grads[0]) kernels::axpy(2.0 * g(0, 0), x.value(), *grads[0]);
                  });
}

Var masked_softmax_ce(Var logits, const DenseMatrix& labels, const NodeMask& mask) {
  Tape& t = tape_of(logits);
  MaskedRows sel = gather_masked(logits.value(), labels, mask, "masked_softmax_ce");
  const DenseMatrix& z = logits.value();
  const double m = static_cast<double>(sel.idx.size());
  double loss = 0.0;
  for (std::size_t r = 0; r < sel.idx.size(); ++r) {
    auto zr = z.row(sel.idx[r]);
    auto yr = sel.labels.row(r);
    const double lse = log_sum_exp(zr);
    for (std::size_t c = 0; c < zr.size(); ++c) loss -= yr[c] * (zr[c] - lse);
  }
  loss /= m;
  return t.record("masked_softmax_ce", DenseMatrix::scalar(loss), {logits},
                  [logits, sel = std::move(sel), m](const DenseMatrix& g,
                                                    std::span<DenseMatrix* const> grads) {
                    if (!grads[0]) return;
                    const DenseMatrix& z = logits.value();
                    const double coef = g(0, 0) / m;
                    for (std::size_t r = 0; r < sel.idx.size(); ++r) {
                      auto zr = z.row(sel.idx[r]);
                      auto yr = sel.labels.row(r);
                      const double lse = log_sum_exp(zr);
                      double ysum = 0.0;
                      for (double y : yr) ysum += y;
                      auto dr = grads[0]->row(sel.idx[r]);
                      for (std::size_t c = 0; c < zr.size(); ++c) {
                        dr[c] += coef * (std::exp(zr[c] - lse) * ysum - yr[c]);
                      }
                    }
                  });
}

Var masked_sigmoid_ce(Var logits, const DenseMatrix& labels, const NodeMask& mask) {
  Tape& t = tape_of(logits);
  MaskedRows sel = gather_masked(logits.value(), labels, mask, "masked_sigmoid_ce");
  const DenseMatrix& z = logits.value();
  const double denom = static_cast<double>(sel.idx.size() * z.cols());
  double loss = 0.0;
  for (std::size_t r = 0; r < sel.idx.size(); ++r) {
    auto zr = z.row(sel.idx[r]);
    auto yr = sel.labels.row(r);
    for (std::size_t c = 0; c < zr.size(); ++c) {
      const double v = zr[c];
      loss += std::max(v, 0.0) - v * yr[c] + std::log1p(std::exp(-std::abs(v)));
    }
  }
  loss /= denom;
  return t.record("masked_sigmoid_ce", DenseMatrix::scalar(loss), {logits},
                  [logits, sel = std::move(sel), denom](const DenseMatrix& g,
                                                        std::span<DenseMatrix* const> grads) {
                    if (!grads[0]) return;
                    const DenseMatrix& z = logits.value();
                    const double coef = g(0, 0) / denom;
                    for (std::size_t r = 0; r < sel.idx.size(); ++r) {
                      auto zr = z.row(sel.idx[r]);
                      auto yr = sel.labels.row(r);
                      auto dr = grads[0]->row(sel.idx[r]);
                      for (std::size_t c = 0; c < zr.size(); ++c) {
                        const double sig = zr[c] >= 0.0 ? 1.0 / (1.0 + std::exp(-zr[c]))
                                                        : std::exp(zr[c]) / (1.0 + std::exp(zr[c]));
                        dr[c] += coef * (sig - yr[c]);
                      }
                    }
                  });
}

Var masked_nll(Var probs, const DenseMatrix& labels, const NodeMask& mask) {
  Tape& t = tape_of(probs);
  MaskedRows sel = gather_masked(probs.value(), labels, mask, "masked_nll");
  const DenseMatrix& p = probs.value();
  const double m = static_cast<double>(sel.idx.size());
  double loss = 0.0;
  for (std::size_t r = 0; r < sel.idx.size(); ++r) {
    auto pr = p.row(sel.idx[r]);
    auto yr = sel.labels.row(r);
    for (std::size_t c = 0; c < pr.size(); ++c) {
      if (yr[c] != 0.0) loss -= yr[c] * std::log(std::max(pr[c], kProbFloor));
    }
  }
  loss /= m;
  return t.record("masked_nll", DenseMatrix::scalar(loss), {probs},
                  [probs, sel = std::move(sel), m](const DenseMatrix& g,
                                                   std::span<DenseMatrix* const> grads) {
                    if (!grads[0]) return;
                    const DenseMatrix& p = probs.value();
                    const double coef = g(0, 0) / m;
                    for (std::size_t r = 0; r < sel.idx.size(); ++r) {
                      auto pr = p.row(sel.idx[r]);
                      auto yr = sel.labels.row(r);
                      auto dr = grads[0]->row(sel.idx[r]);
                      for (std::size_t c = 0; c < pr.size(); ++c) {
                        if (yr[c] != 0.0 && pr[c] > kProbFloor) dr[c] -= coef * yr[c] / pr[c];
                      }
                    }
                  });
}

DenseMatrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) throw ConfigError("glorot_init: dimensions must be positive");
  const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  DenseMatrix w(rows, cols);
  for (double& v : w.values()) v = rng.uniform(-s, s);
  return w;
}

}  // namespace ngcn
