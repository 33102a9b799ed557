// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Reverse-mode automatic differentiation over an append-only tape.
//
// Every operation appends one node holding the forward value and a backward
// closure; append order is the topological order, and backward() replays the
// closures once each in reverse, accumulating (+=) into input gradients so
// fan-in needs no extra bookkeeping. A tape is single-threaded; parallelism
// across molecules uses one tape per molecule.
//
// Forward values are checked finite after every op and a NumericError is
// thrown otherwise, which is how training divergence gets detected.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dgat/common/error.hpp"
#include "dgat/common/rng.hpp"
#include "dgat/tensor/tensor.hpp"

namespace dgat {

class Tape {
public:
  // Backward closures receive the tape and their own node id.
  using BackwardFn = std::function<void(Tape &, int)>;

  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  // When recording is off, ops compute forward values only; backward() on
  // such a tape is an error. Used for cheap finite-difference evaluations.
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }
  int size() const { return static_cast<int>(nodes_.size()); }

  void clear() {
    nodes_.clear();
    grads_ready_ = false;
  }

  int leaf(Tensor value, bool requires_grad = true) {
    check_finite(value, "leaf");
    return push(std::move(value), requires_grad, nullptr);
  }

  int constant(Tensor value) { return leaf(std::move(value), false); }

  const Tensor &value(int id) const { return nodes_[id].value; }

  const Tensor &grad(int id) const {
    if (!grads_ready_) throw Error("gradients not computed; call backward()");
    return nodes_[id].grad;
  }

  // Seeds d(loss)/d(loss) = 1 and replays closures in reverse append order.
  void backward(int loss_id) {
    if (!recording_) throw Error("backward on a non-recording tape");
    const Tensor &loss = nodes_[loss_id].value;
    if (loss.rows() != 1 || loss.cols() != 1)
      throw ShapeError("backward: loss must be a 1x1 scalar, got " +
                       loss.shape_str());
    for (auto &node : nodes_)
      node.grad = Tensor(node.value.rows(), node.value.cols());
    grads_ready_ = true;
    nodes_[loss_id].grad.at(0, 0) = 1.0;
    for (int i = loss_id; i >= 0; --i)
      if (nodes_[i].backward) nodes_[i].backward(*this, i);
  }

  // ---- elementwise & linear ops ----

  int matmul(int a, int b) {
    const Tensor &x = value(a);
    const Tensor &y = value(b);
    if (x.cols() != y.rows())
      throw ShapeError("matmul: " + x.shape_str() + " * " + y.shape_str());
    Tensor out(x.rows(), y.cols());
    for (int i = 0; i < x.rows(); ++i) {
      const double *xr = x.row_ptr(i);
      double *outr = out.row_ptr(i);
      for (int k = 0; k < x.cols(); ++k) {
        const double xv = xr[k];
        if (xv == 0.0) continue;
        const double *yr = y.row_ptr(k);
        for (int j = 0; j < y.cols(); ++j) outr[j] += xv * yr[j];
      }
    }
    check_finite(out, "matmul");
    return push(std::move(out), needs(a, b), [a, b](Tape &t, int self) {
      const Tensor &g = t.nodes_[self].grad;
      const Tensor &x = t.value(a);
      const Tensor &y = t.value(b);
      if (t.nodes_[a].requires_grad) {
        Tensor &ga = t.nodes_[a].grad; // g * y^T
        for (int i = 0; i < x.rows(); ++i)
          for (int n = 0; n < y.cols(); ++n) {
            const double gv = g.at(i, n);
            if (gv == 0.0) continue;
            for (int j = 0; j < x.cols(); ++j) ga.at(i, j) += gv * y.at(j, n);
          }
      }
      if (t.nodes_[b].requires_grad) {
        Tensor &gb = t.nodes_[b].grad; // x^T * g
        for (int i = 0; i < x.rows(); ++i)
          for (int k = 0; k < x.cols(); ++k) {
            const double xv = x.at(i, k);
            if (xv == 0.0) continue;
            for (int n = 0; n < y.cols(); ++n)
              gb.at(k, n) += xv * g.at(i, n);
          }
      }
    });
  }

  // A * B^T without materializing the transpose.
  int matmul_nt(int a, int b) {
    const Tensor &x = value(a);
    const Tensor &y = value(b);
    if (x.cols() != y.cols())
      throw ShapeError("matmul_nt: " + x.shape_str() + " * " + y.shape_str() +
                       "^T");
    Tensor out(x.rows(), y.rows());
    for (int i = 0; i < x.rows(); ++i)
      for (int j = 0; j < y.rows(); ++j) {
        double acc = 0.0;
        const double *xr = x.row_ptr(i);
        const double *yr = y.row_ptr(j);
        for (int k = 0; k < x.cols(); ++k) acc += xr[k] * yr[k];
        out.at(i, j) = acc;
      }
    check_finite(out, "matmul_nt");
    return push(std::move(out), needs(a, b), [a, b](Tape &t, int self) {
      const Tensor &g = t.nodes_[self].grad;
      const Tensor &x = t.value(a);
      const Tensor &y = t.value(b);
      if (t.nodes_[a].requires_grad) {
        Tensor &ga = t.nodes_[a].grad; // g * y
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) {
            const double gv = g.at(i, j);
            if (gv == 0.0) continue;
            for (int k = 0; k < y.cols(); ++k) ga.at(i, k) += gv * y.at(j, k);
          }
      }
      if (t.nodes_[b].requires_grad) {
        Tensor &gb = t.nodes_[b].grad; // g^T * x
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) {
            const double gv = g.at(i, j);
            if (gv == 0.0) continue;
            for (int k = 0; k < x.cols(); ++k) gb.at(j, k) += gv * x.at(i, k);
          }
      }
    });
  }

  int add(int a, int b) {
    const Tensor &x = value(a);
    const Tensor &y = value(b);
    if (!x.same_shape(y))
      throw ShapeError("add: " + x.shape_str() + " vs " + y.shape_str());
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += y.data()[i];
    check_finite(out, "add");
    return push(std::move(out), needs(a, b), [a, b](Tape &t, int self) {
      const Tensor &g = t.nodes_[self].grad;
      t.accumulate(a, g);
      t.accumulate(b, g);
    });
  }

  int sub(int a, int b) {
    const Tensor &x = value(a);
    const Tensor &y = value(b);
    if (!x.same_shape(y))
      throw ShapeError("sub: " + x.shape_str() + " vs " + y.shape_str());
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= y.data()[i];
    check_finite(out, "sub");
    return push(std::move(out), needs(a, b), [a, b](Tape &t, int self) {
      const Tensor &g = t.nodes_[self].grad;
      t.accumulate(a, g);
      if (t.nodes_[b].requires_grad) {
        Tensor &gb = t.nodes_[b].grad;
        for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] -= g.data()[i];
      }
    });
  }

  // X + b with the 1xN row vector broadcast over rows.
  int add_row(int a, int b) {
    const Tensor &x = value(a);
    const Tensor &y = value(b);
    if (y.rows() != 1 || y.cols() != x.cols())
      throw ShapeError("add_row: " + x.shape_str() + " + " + y.shape_str());
    Tensor out = x;
    for (int r = 0; r < x.rows(); ++r)
      for (int c = 0; c < x.cols(); ++c) out.at(r, c) += y.at(0, c);
    check_finite(out, "add_row");
    return push(std::move(out), needs(a, b), [a, b](Tape &t, int self) {
      const Tensor &g = t.nodes_[self].grad;
      t.accumulate(a, g);
      if (t.nodes_[b].requires_grad) {
        Tensor &gb = t.nodes_[b].grad;
        for (int r = 0; r < g.rows(); ++r)
          for (int c = 0; c < g.cols(); ++c) gb.at(0, c) += g.at(r, c);
      }
    });
  }

  int scale(int a, double factor) {
    Tensor out = value(a);
    for (double &v : out.data()) v *= factor;
    check_finite(out, "scale");
    return push(std::move(out), needs(a), [a, factor](Tape &t, int self) {
      if (!t.nodes_[a].requires_grad) return;
      const Tensor &g = t.nodes_[self].grad;
      Tensor &ga = t.nodes_[a].grad;
      for (std::size_t i = 0; i < g.size(); ++i)
        ga.data()[i] += factor * g.data()[i];
    });
  }

  int mul(int a, int b) {
    const Tensor &x = value(a);
    const Tensor &y = value(b);
    if (!x.same_shape(y))
      throw ShapeError("mul: " + x.shape_str() + " vs " + y.shape_str());
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= y.data()[i];
    check_finite(out, "mul");
    return push(std::move(out), needs(a, b), [a, b](Tape &t, int self) {
      const Tensor &g = t.nodes_[self].grad;
      const Tensor &x = t.value(a);
      const Tensor &y = t.value(b);
      if (t.nodes_[a].requires_grad) {
        Tensor &ga = t.nodes_[a].grad;
        for (std::size_t i = 0; i < g.size(); ++i)
          ga.data()[i] += g.data()[i] * y.data()[i];
      }
      if (t.nodes_[b].requires_grad) {
        Tensor &gb = t.nodes_[b].grad;
        for (std::size_t i = 0; i < g.size(); ++i)
          gb.data()[i] += g.data()[i] * x.data()[i];
      }
    });
  }

  int relu(int a) {
    Tensor out = value(a);
    for (double &v : out.data()) v = v > 0.0 ? v : 0.0;
    return push(std::move(out), needs(a), [a](Tape &t, int self) {
      if (!t.nodes_[a].requires_grad) return;
      const Tensor &g = t.nodes_[self].grad;
      const Tensor &x = t.value(a);
      Tensor &ga = t.nodes_[a].grad;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (x.data()[i] > 0.0) ga.data()[i] += g.data()[i];
    });
  }

  // ---- structural ops ----

  int concat_cols(const std::vector<int> &ids) {
    if (ids.empty()) throw ShapeError("concat_cols: no inputs");
    const int rows = value(ids[0]).rows();
    int cols = 0;
    for (int id : ids) {
      if (value(id).rows() != rows)
        throw ShapeError("concat_cols: row mismatch");
      cols += value(id).cols();
    }
    Tensor out(rows, cols);
    int offset = 0;
    for (int id : ids) {
      const Tensor &x = value(id);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < x.cols(); ++c) out.at(r, offset + c) = x.at(r, c);
      offset += x.cols();
    }
    return push(std::move(out), needs(ids), [ids](Tape &t, int self) {
      const Tensor &g = t.nodes_[self].grad;
      int offset = 0;
      for (int id : ids) {
        const int w = t.value(id).cols();
        if (t.nodes_[id].requires_grad) {
          Tensor &gi = t.nodes_[id].grad;
          for (int r = 0; r < g.rows(); ++r)
            for (int c = 0; c < w; ++c) gi.at(r, c) += g.at(r, offset + c);
        }
        offset += w;
      }
    });
  }

  int concat_rows(const std::vector<int> &ids) {
    if (ids.empty()) throw ShapeError("concat_rows: no inputs");
    const int cols = value(ids[0]).cols();
    int rows = 0;
    for (int id : ids) {
      if (value(id).cols() != cols)
        throw ShapeError("concat_rows: column mismatch");
      rows += value(id).rows();
    }
    Tensor out(rows, cols);
    int offset = 0;
    for (int id : ids) {
      const Tensor &x = value(id);
      for (int r = 0; r < x.rows(); ++r)
        for (int c = 0; c < cols; ++c) out.at(offset + r, c) = x.at(r, c);
      offset += x.rows();
    }
    return push(std::move(out), needs(ids), [ids](Tape &t, int self) {
      const Tensor &g = t.nodes_[self].grad;
      int offset = 0;
      for (int id : ids) {
        const int h = t.value(id).rows();
        if (t.nodes_[id].requires_grad) {
          Tensor &gi = t.nodes_[id].grad;
          for (int r = 0; r < h; ++r)
            for (int c = 0; c < g.cols(); ++c)
              gi.at(r, c) += g.at(offset + r, c);
        }
        offset += h;
      }
    });
  }

  // Row gather; repeated indices are allowed and their gradients add up.
  int gather_rows(int a, std::vector<int> indices) {
    const Tensor &x = value(a);
    Tensor out(static_cast<int>(indices.size()), x.cols());
    for (std::size_t r = 0; r < indices.size(); ++r) {
      if (indices[r] < 0 || indices[r] >= x.rows())
        throw ShapeError("gather_rows: index out of range");
      for (int c = 0; c < x.cols(); ++c)
        out.at(static_cast<int>(r), c) = x.at(indices[r], c);
    }
    return push(std::move(out), needs(a),
                [a, indices = std::move(indices)](Tape &t, int self) {
                  if (!t.nodes_[a].requires_grad) return;
                  const Tensor &g = t.nodes_[self].grad;
                  Tensor &ga = t.nodes_[a].grad;
                  for (std::size_t r = 0; r < indices.size(); ++r)
                    for (int c = 0; c < g.cols(); ++c)
                      ga.at(indices[r], c) += g.at(static_cast<int>(r), c);
                });
  }

  // ---- normalization, attention, regularization ----

  // Row-wise softmax over entries whose mask is nonzero; masked outputs are
  // exactly 0 and receive zero gradient. Stabilized by row-max subtraction.
  int masked_row_softmax(int a, Tensor mask) {
    const Tensor &x = value(a);
    if (!x.same_shape(mask))
      throw ShapeError("masked_row_softmax: mask shape mismatch");
    Tensor out(x.rows(), x.cols());
    for (int r = 0; r < x.rows(); ++r) {
      double max = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < x.cols(); ++c)
        if (mask.at(r, c) != 0.0) max = std::max(max, x.at(r, c));
      if (max == -std::numeric_limits<double>::infinity())
        throw ShapeError("masked_row_softmax: fully masked row " +
                         std::to_string(r));
      double denom = 0.0;
      for (int c = 0; c < x.cols(); ++c)
        if (mask.at(r, c) != 0.0) denom += std::exp(x.at(r, c) - max);
      for (int c = 0; c < x.cols(); ++c)
        out.at(r, c) =
            mask.at(r, c) != 0.0 ? std::exp(x.at(r, c) - max) / denom : 0.0;
    }
    check_finite(out, "masked_row_softmax");
    return push(std::move(out), needs(a), [a](Tape &t, int self) {
      if (!t.nodes_[a].requires_grad) return;
      const Tensor &g = t.nodes_[self].grad;
      const Tensor &y = t.value(self);
      Tensor &ga = t.nodes_[a].grad;
      for (int r = 0; r < y.rows(); ++r) {
        double dot = 0.0;
        for (int c = 0; c < y.cols(); ++c) dot += g.at(r, c) * y.at(r, c);
        for (int c = 0; c < y.cols(); ++c)
          ga.at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
      }
    });
  }

  // Per-row standardization (mean 0, variance 1 with eps inside the sqrt)
  // followed by the affine map gain * xhat + bias.
  int layer_norm(int a, int gain, int bias) {
    constexpr double kEps = 1e-5;
    const Tensor &x = value(a);
    const Tensor &w = value(gain);
    const Tensor &b = value(bias);
    if (x.cols() < 2) throw ShapeError("layer_norm: row length must be >= 2");
    if (w.rows() != 1 || w.cols() != x.cols() || b.rows() != 1 ||
        b.cols() != x.cols())
      throw ShapeError("layer_norm: gain/bias must be 1x" +
                       std::to_string(x.cols()));
    const int n = x.cols();
    Tensor out(x.rows(), n);
    Tensor xhat(x.rows(), n);
    Tensor inv_std(x.rows(), 1);
    for (int r = 0; r < x.rows(); ++r) {
      double mean = 0.0;
      for (int c = 0; c < n; ++c) mean += x.at(r, c);
      mean /= n;
      double var = 0.0;
      for (int c = 0; c < n; ++c) {
        const double d = x.at(r, c) - mean;
        var += d * d;
      }
      var /= n;
      const double istd = 1.0 / std::sqrt(var + kEps);
      inv_std.at(r, 0) = istd;
      for (int c = 0; c < n; ++c) {
        xhat.at(r, c) = (x.at(r, c) - mean) * istd;
        out.at(r, c) = w.at(0, c) * xhat.at(r, c) + b.at(0, c);
      }
    }
    check_finite(out, "layer_norm");
    return push(
        std::move(out), needs(a, gain, bias),
        [a, gain, bias, xhat = std::move(xhat),
         inv_std = std::move(inv_std)](Tape &t, int self) {
          const Tensor &g = t.nodes_[self].grad;
          const Tensor &w = t.value(gain);
          const int n = g.cols();
          if (t.nodes_[gain].requires_grad) {
            Tensor &gw = t.nodes_[gain].grad;
            for (int r = 0; r < g.rows(); ++r)
              for (int c = 0; c < n; ++c)
                gw.at(0, c) += g.at(r, c) * xhat.at(r, c);
          }
          if (t.nodes_[bias].requires_grad) {
            Tensor &gb = t.nodes_[bias].grad;
            for (int r = 0; r < g.rows(); ++r)
              for (int c = 0; c < n; ++c) gb.at(0, c) += g.at(r, c);
          }
          if (t.nodes_[a].requires_grad) {
            Tensor &ga = t.nodes_[a].grad;
            for (int r = 0; r < g.rows(); ++r) {
              double mean_gh = 0.0, mean_ghx = 0.0;
              for (int c = 0; c < n; ++c) {
                const double gh = g.at(r, c) * w.at(0, c);
                mean_gh += gh;
                mean_ghx += gh * xhat.at(r, c);
              }
              mean_gh /= n;
              mean_ghx /= n;
              for (int c = 0; c < n; ++c) {
                const double gh = g.at(r, c) * w.at(0, c);
                ga.at(r, c) += inv_std.at(r, 0) *
                               (gh - mean_gh - xhat.at(r, c) * mean_ghx);
              }
            }
          }
        });
  }

  // Inverted dropout: kept entries are scaled by 1/(1-rate) so inference
  // is the identity. rate 0 or eval mode short-circuits to the input node.
  int dropout(int a, double rate, bool training, Rng &rng) {
    if (rate < 0.0 || rate >= 1.0)
      throw ShapeError("dropout: rate must be in [0, 1)");
    if (!training || rate == 0.0) return a;
    const Tensor &x = value(a);
    Tensor keep(x.rows(), x.cols());
    const double scale = 1.0 / (1.0 - rate);
    for (double &k : keep.data()) k = rng.uniform() >= rate ? scale : 0.0;
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i)
      out.data()[i] *= keep.data()[i];
    check_finite(out, "dropout");
    return push(std::move(out), needs(a),
                [a, keep = std::move(keep)](Tape &t, int self) {
                  if (!t.nodes_[a].requires_grad) return;
                  const Tensor &g = t.nodes_[self].grad;
                  Tensor &ga = t.nodes_[a].grad;
                  for (std::size_t i = 0; i < g.size(); ++i)
                    ga.data()[i] += g.data()[i] * keep.data()[i];
                });
  }

  // Scaled dot-product attention of a single query row against m key/value
  // rows, with the feature dimension split into `heads` subspaces. Per head:
  // logits = (q_h . K_h) / sqrt(d_head), weights by softmax over the m rows,
  // output = weights . V_h; head outputs are concatenated. Optional dropout
  // applies to the softmax weights. If weights_out is non-null it receives
  // the pre-dropout weights, head-major (heads x m, row h then column r).
  int multi_head_attend(int q, int k, int v, int heads,
                        double dropout_rate = 0.0, bool training = false,
                        Rng *rng = nullptr,
                        std::vector<double> *weights_out = nullptr) {
    const Tensor &qv = value(q);
    const Tensor &kv = value(k);
    const Tensor &vv = value(v);
    const int dim = qv.cols();
    const int m = kv.rows();
    if (qv.rows() != 1) throw ShapeError("attend: query must be a single row");
    if (kv.cols() != dim || vv.cols() != dim || vv.rows() != m)
      throw ShapeError("attend: key/value shape mismatch");
    if (heads < 1 || dim % heads != 0)
      throw ShapeError("attend: head count must divide the model dimension");
    if (m < 1) throw ShapeError("attend: empty key set");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
      throw ShapeError("attend: dropout rate must be in [0, 1)");
    const int d_head = dim / heads;
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(d_head));

    Tensor alpha(heads, m);     // softmax weights, pre-dropout
    Tensor keep(heads, m, 1.0); // dropout keep/scale factors
    const bool use_dropout = training && dropout_rate > 0.0;
    Tensor out(1, dim);
    std::vector<double> logits(m);
    for (int h = 0; h < heads; ++h) {
      const int c0 = h * d_head;
      double max_logit = -std::numeric_limits<double>::infinity();
      for (int r = 0; r < m; ++r) {
        double acc = 0.0;
        for (int c = 0; c < d_head; ++c)
          acc += qv.at(0, c0 + c) * kv.at(r, c0 + c);
        logits[r] = acc * inv_scale;
        max_logit = std::max(max_logit, logits[r]);
      }
      double denom = 0.0;
      for (int r = 0; r < m; ++r) denom += std::exp(logits[r] - max_logit);
      for (int r = 0; r < m; ++r)
        alpha.at(h, r) = std::exp(logits[r] - max_logit) / denom;
      if (use_dropout)
        for (int r = 0; r < m; ++r)
          keep.at(h, r) =
              rng->uniform() >= dropout_rate ? 1.0 / (1.0 - dropout_rate) : 0.0;
      for (int r = 0; r < m; ++r) {
        const double w = alpha.at(h, r) * keep.at(h, r);
        if (w == 0.0) continue;
        for (int c = 0; c < d_head; ++c)
          out.at(0, c0 + c) += w * vv.at(r, c0 + c);
      }
    }
    if (weights_out != nullptr)
      weights_out->assign(alpha.data().begin(), alpha.data().end());
    check_finite(out, "multi_head_attend");
    return push(
        std::move(out), needs(q, k, v),
        [q, k, v, heads, d_head, inv_scale, alpha = std::move(alpha),
         keep = std::move(keep)](Tape &t, int self) {
          const Tensor &g = t.nodes_[self].grad;
          const Tensor &qv = t.value(q);
          const Tensor &kv = t.value(k);
          const Tensor &vv = t.value(v);
          const int m = kv.rows();
          std::vector<double> ga(m), gl(m);
          for (int h = 0; h < heads; ++h) {
            const int c0 = h * d_head;
            // Gradient wrt the post-dropout attention weight of row r.
            for (int r = 0; r < m; ++r) {
              double acc = 0.0;
              for (int c = 0; c < d_head; ++c)
                acc += g.at(0, c0 + c) * vv.at(r, c0 + c);
              ga[r] = acc * keep.at(h, r);
            }
            if (t.nodes_[v].requires_grad) {
              Tensor &gv = t.nodes_[v].grad;
              for (int r = 0; r < m; ++r) {
                const double w = alpha.at(h, r) * keep.at(h, r);
                if (w == 0.0) continue;
                for (int c = 0; c < d_head; ++c)
                  gv.at(r, c0 + c) += w * g.at(0, c0 + c);
              }
            }
            // Softmax backward: gl_r = a_r * (ga_r - sum_j a_j ga_j).
            double dot = 0.0;
            for (int r = 0; r < m; ++r) dot += alpha.at(h, r) * ga[r];
            for (int r = 0; r < m; ++r)
              gl[r] = alpha.at(h, r) * (ga[r] - dot);
            if (t.nodes_[q].requires_grad) {
              Tensor &gq = t.nodes_[q].grad;
              for (int r = 0; r < m; ++r) {
                if (gl[r] == 0.0) continue;
                for (int c = 0; c < d_head; ++c)
                  gq.at(0, c0 + c) += gl[r] * inv_scale * kv.at(r, c0 + c);
              }
            }
            if (t.nodes_[k].requires_grad) {
              Tensor &gk = t.nodes_[k].grad;
              for (int r = 0; r < m; ++r) {
                if (gl[r] == 0.0) continue;
                for (int c = 0; c < d_head; ++c)
                  gk.at(r, c0 + c) += gl[r] * inv_scale * qv.at(0, c0 + c);
              }
            }
          }
        });
  }

  // ---- reductions & losses ----

  int sum_all(int a) {
    const Tensor &x = value(a);
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    Tensor out(1, 1);
    out.at(0, 0) = acc;
    check_finite(out, "sum_all");
    return push(std::move(out), needs(a), [a](Tape &t, int self) {
      if (!t.nodes_[a].requires_grad) return;
      const double g = t.nodes_[self].grad.at(0, 0);
      for (double &v : t.nodes_[a].grad.data()) v += g;
    });
  }

  int mean_all(int a) {
    const Tensor &x = value(a);
    if (x.size() == 0) throw ShapeError("mean_all: empty tensor");
    const double inv = 1.0 / static_cast<double>(x.size());
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    Tensor out(1, 1);
    out.at(0, 0) = acc * inv;
    check_finite(out, "mean_all");
    return push(std::move(out), needs(a), [a, inv](Tape &t, int self) {
      if (!t.nodes_[a].requires_grad) return;
      const double g = t.nodes_[self].grad.at(0, 0) * inv;
      for (double &v : t.nodes_[a].grad.data()) v += g;
    });
  }

  // Mean squared error over entries selected by mask (nullptr = all).
  int mse(int pred, const Tensor &target, const Tensor *mask = nullptr) {
    const Tensor &p = value(pred);
    if (!p.same_shape(target)) throw ShapeError("mse: target shape mismatch");
    if (mask != nullptr && !p.same_shape(*mask))
      throw ShapeError("mse: mask shape mismatch");
    double acc = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (mask != nullptr && mask->data()[i] == 0.0) continue;
      const double d = p.data()[i] - target.data()[i];
      acc += d * d;
      ++count;
    }
    if (count == 0) throw ShapeError("mse: zero contributing entries");
    Tensor out(1, 1);
    out.at(0, 0) = acc / count;
    check_finite(out, "mse");
    Tensor sel = mask != nullptr ? *mask : Tensor(p.rows(), p.cols(), 1.0);
    return push(std::move(out), needs(pred),
                [pred, target, sel = std::move(sel), count](Tape &t, int self) {
                  if (!t.nodes_[pred].requires_grad) return;
                  const double g = t.nodes_[self].grad.at(0, 0);
                  const Tensor &p = t.value(pred);
                  Tensor &gp = t.nodes_[pred].grad;
                  for (std::size_t i = 0; i < p.size(); ++i) {
                    if (sel.data()[i] == 0.0) continue;
                    gp.data()[i] +=
                        g * 2.0 * (p.data()[i] - target.data()[i]) / count;
                  }
                });
  }

  // Numerically stable binary cross-entropy on logits, averaged over
  // entries with nonzero mask (missing labels carry mask 0).
  int bce_with_logits(int logits, const Tensor &labels, const Tensor &mask) {
    const Tensor &z = value(logits);
    if (!z.same_shape(labels) || !z.same_shape(mask))
      throw ShapeError("bce_with_logits: shape mismatch");
    double acc = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (mask.data()[i] == 0.0) continue;
      const double zi = z.data()[i];
      const double yi = labels.data()[i];
      acc += std::max(zi, 0.0) - zi * yi + std::log1p(std::exp(-std::abs(zi)));
      ++count;
    }
    if (count == 0)
      throw ShapeError("bce_with_logits: zero contributing entries");
    Tensor out(1, 1);
    out.at(0, 0) = acc / count;
    check_finite(out, "bce_with_logits");
    return push(std::move(out), needs(logits),
                [logits, labels, mask, count](Tape &t, int self) {
                  if (!t.nodes_[logits].requires_grad) return;
                  const double g = t.nodes_[self].grad.at(0, 0);
                  const Tensor &z = t.value(logits);
                  Tensor &gz = t.nodes_[logits].grad;
                  for (std::size_t i = 0; i < z.size(); ++i) {
                    if (mask.data()[i] == 0.0) continue;
                    const double sig = 1.0 / (1.0 + std::exp(-z.data()[i]));
                    gz.data()[i] += g * (sig - labels.data()[i]) / count;
                  }
                });
  }

  // Sum of per-block categorical cross-entropies, averaged over rows.
  // Columns are partitioned into blocks by `widths`; within every block the
  // target row must be one-hot (exactly one entry equal to 1).
  int block_cross_entropy(int logits, const Tensor &target,
                          const std::vector<int> &widths) {
    const Tensor &z = value(logits);
    if (!z.same_shape(target))
      throw ShapeError("block_cross_entropy: target shape mismatch");
    int total = 0;
    for (int w : widths) {
      if (w < 1) throw ShapeError("block_cross_entropy: empty block");
      total += w;
    }
    if (total != z.cols())
      throw ShapeError("block_cross_entropy: block widths do not cover cols");
    if (z.rows() == 0)
      throw ShapeError("block_cross_entropy: zero contributing entries");
    Tensor soft(z.rows(), z.cols()); // cached for backward
    double acc = 0.0;
    for (int r = 0; r < z.rows(); ++r) {
      int offset = 0;
      for (int w : widths) {
        double max = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < w; ++c) max = std::max(max, z.at(r, offset + c));
        double denom = 0.0;
        for (int c = 0; c < w; ++c)
          denom += std::exp(z.at(r, offset + c) - max);
        const double log_denom = std::log(denom) + max;
        double mass = 0.0;
        for (int c = 0; c < w; ++c) {
          soft.at(r, offset + c) = std::exp(z.at(r, offset + c) - log_denom);
          const double tv = target.at(r, offset + c);
          if (tv != 0.0) {
            acc += tv * (log_denom - z.at(r, offset + c));
            mass += tv;
          }
        }
        if (mass != 1.0)
          throw ShapeError("block_cross_entropy: target block is not one-hot");
        offset += w;
      }
    }
    Tensor out(1, 1);
    out.at(0, 0) = acc / z.rows();
    check_finite(out, "block_cross_entropy");
    return push(std::move(out), needs(logits),
                [logits, target, soft = std::move(soft)](Tape &t, int self) {
                  if (!t.nodes_[logits].requires_grad) return;
                  const double g = t.nodes_[self].grad.at(0, 0);
                  const Tensor &z = t.value(logits);
                  Tensor &gz = t.nodes_[logits].grad;
                  const double inv = 1.0 / z.rows();
                  for (std::size_t i = 0; i < z.size(); ++i)
                    gz.data()[i] +=
                        g * inv * (soft.data()[i] - target.data()[i]);
                });
  }

private:
  bool needs(int a) const { return recording_ && nodes_[a].requires_grad; }
  bool needs(int a, int b) const { return needs(a) || needs(b); }
  bool needs(int a, int b, int c) const {
    return needs(a) || needs(b) || needs(c);
  }
  bool needs(const std::vector<int> &ids) const {
    for (int id : ids)
      if (needs(id)) return true;
    return false;
  }

  int push(Tensor value, bool requires_grad, BackwardFn backward) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = recording_ && requires_grad;
    if (node.requires_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
  }

  void accumulate(int id, const Tensor &g) {
    if (!nodes_[id].requires_grad) return;
    Tensor &target = nodes_[id].grad;
    for (std::size_t i = 0; i < g.size(); ++i) target.data()[i] += g.data()[i];
  }

  std::vector<Node> nodes_;
  bool recording_ = true;
  bool grads_ready_ = false;
};

} // namespace dgat
