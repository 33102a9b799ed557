// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Training drivers.
//
// Both trainers run full-batch epochs: every molecule contributes one
// forward/backward on its own tape, gradients are averaged, and Adam takes
// one step per epoch. Runs are reproducible for a fixed seed: all
// randomness (mask plans, dropout) is derived per (seed, epoch, molecule),
// and with --threads > 1 the per-molecule results are reduced in a fixed
// chunk order, so a given thread count always produces the same bytes.
//
// On divergence (any non-finite value) the trainer restores the parameters
// from the end of the last finite epoch and reports diverged instead of
// throwing.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "dgat/common/error.hpp"
#include "dgat/common/rng.hpp"
#include "dgat/model/checkpoint.hpp"
#include "dgat/model/dgat.hpp"
#include "dgat/model/params.hpp"
#include "dgat/pipeline/dataset.hpp"
#include "dgat/pipeline/masking.hpp"
#include "dgat/pipeline/metrics.hpp"
#include "dgat/pipeline/split.hpp"
#include "dgat/tensor/adam.hpp"

namespace dgat {

struct PretrainConfig {
  int epochs = 50;
  int batch = 0; // molecules per optimizer step; 0 = whole corpus
  double lr = 1e-4;
  double lambda_graph = 1.0; // weight of the property-regression loss
  double p_mask = 0.16;
  double p_rand = 0.04;
  uint64_t seed = 0;
  bool size_filter = false; // keep only molecules with 10..60 atoms
  int min_atoms = 10;
  int max_atoms = 60;
  int threads = 1;
};

struct PretrainResult {
  bool diverged = false;
  int epochs_run = 0;
  std::vector<nlohmann::json> log; // one entry per epoch (plus a
                                   // divergence event when it happens)
  nlohmann::json task_meta; // property-head names and standardization,
                            // empty when the corpus has no task columns
};

struct FinetuneConfig {
  int epochs = 100;
  int batch = 0;     // molecules per optimizer step; 0 = whole train split
  int patience = 20; // epochs without validation improvement
  double lr = 5e-5;  // head learning rate
  double backbone_lr_scale = 0.1; // 0 freezes the backbone
  std::string regression_metric = "rmse"; // rmse or mae, drives selection
  uint64_t seed = 0;
  int threads = 1;
};

// Per-task metrics over one partition. Classification fills auc;
// regression fills rmse/mae. NaN entries mark skipped tasks.
struct EvalReport {
  TaskKind kind = TaskKind::kBinary;
  std::vector<double> auc;
  std::vector<double> rmse_v;
  std::vector<double> mae_v;
  std::vector<std::string> warnings;
  double primary = std::numeric_limits<double>::quiet_NaN();

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["primary"] = primary;
    if (kind == TaskKind::kBinary) {
      j["auc"] = auc;
    } else {
      j["rmse"] = rmse_v;
      j["mae"] = mae_v;
    }
    if (!warnings.empty()) j["warnings"] = warnings;
    return j;
  }
};

struct FinetuneResult {
  bool diverged = false;
  int epochs_run = 0;
  int best_epoch = -1;
  std::vector<nlohmann::json> log;
  EvalReport train_report, valid_report, test_report;
  nlohmann::json task_meta; // names, kind, standardization; stored in
                            // checkpoints so evaluate/predict can undo it
};

// Label standardization for regression tasks.
struct TaskStats {
  std::vector<double> mean, stdev;
};

inline TaskStats compute_task_stats(const Dataset &ds,
                                    const std::vector<int> &indices) {
  const int n_tasks = ds.schema.n_tasks();
  TaskStats stats;
  stats.mean.assign(n_tasks, 0.0);
  stats.stdev.assign(n_tasks, 1.0);
  for (int t = 0; t < n_tasks; ++t) {
    double sum = 0.0;
    long count = 0;
    for (const int i : indices)
      if (ds.records[i].has_label[t]) {
        sum += ds.records[i].targets[t];
        ++count;
      }
    if (count == 0) continue;
    const double mean = sum / count;
    double var = 0.0;
    for (const int i : indices)
      if (ds.records[i].has_label[t]) {
        const double d = ds.records[i].targets[t] - mean;
        var += d * d;
      }
    stats.mean[t] = mean;
    const double sd = std::sqrt(var / count);
    stats.stdev[t] = sd > 1e-12 ? sd : 1.0; // constant labels: leave centered
  }
  return stats;
}

namespace detail {

// Runs work(lo, hi, chunk) over [0, n) split into contiguous chunks, one
// per thread. Exceptions are rethrown on the caller thread, first chunk
// first, so failures are deterministic too.
inline void run_chunked(int n, int threads,
                        const std::function<void(int, int, int)> &work) {
  threads = std::max(1, std::min(threads, n));
  if (threads <= 1) {
    if (n > 0) work(0, n, 0);
    return;
  }
  const int chunk = (n + threads - 1) / threads;
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi, t] {
      try {
        work(lo, hi, t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto &th : pool) th.join();
  for (const auto &err : errors)
    if (err) std::rethrow_exception(err);
}

struct BatchAccum {
  std::vector<Tensor> grad_sum; // canonical parameter order
  double loss_sum = 0.0;
  double rec_loss_sum = 0.0;
  double graph_loss_sum = 0.0;
  long rec_correct = 0;
  long rec_total = 0;
  int count = 0;

  explicit BatchAccum(const std::vector<ParamRef> &refs) {
    grad_sum.reserve(refs.size());
    for (const auto &r : refs)
      grad_sum.emplace_back(r.tensor->rows(), r.tensor->cols());
  }

  void add_grads(const Tape &tape, const BoundModel &bound) {
    for (std::size_t i = 0; i < grad_sum.size(); ++i) {
      const Tensor &g = tape.grad(bound.leaf_ids[i]);
      for (std::size_t j = 0; j < g.size(); ++j)
        grad_sum[i].data()[j] += g.data()[j];
    }
  }

  void merge(const BatchAccum &o) {
    for (std::size_t i = 0; i < grad_sum.size(); ++i)
      for (std::size_t j = 0; j < grad_sum[i].size(); ++j)
        grad_sum[i].data()[j] += o.grad_sum[i].data()[j];
    loss_sum += o.loss_sum;
    rec_loss_sum += o.rec_loss_sum;
    graph_loss_sum += o.graph_loss_sum;
    rec_correct += o.rec_correct;
    rec_total += o.rec_total;
    count += o.count;
  }
};

// Argmax agreement between per-block logits and one-hot targets.
inline void recovery_hits(const Tensor &logits, const Tensor &targets,
                          const std::vector<int> &widths, long &correct,
                          long &total) {
  for (int r = 0; r < logits.rows(); ++r) {
    int offset = 0;
    for (const int w : widths) {
      int best = 0, truth = 0;
      for (int c = 1; c < w; ++c)
        if (logits.at(r, offset + c) > logits.at(r, offset + best)) best = c;
      for (int c = 0; c < w; ++c)
        if (targets.at(r, offset + c) == 1.0) truth = c;
      if (best == truth) ++correct;
      ++total;
      offset += w;
    }
  }
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

} // namespace detail

// Pre-built directed graphs for the unmasked dataset, index-aligned with
// records; shared by fine-tuning and evaluation.
inline std::vector<DirectedGraph> build_graph_cache(
    const Dataset &ds, const FeatureScheme &scheme) {
  std::vector<DirectedGraph> graphs;
  graphs.reserve(ds.records.size());
  for (const auto &rec : ds.records)
    graphs.push_back(build_directed_graph(rec.mol, scheme));
  return graphs;
}

// Raw head outputs (logits / standardized values) for the given records,
// eval mode. Row order matches `indices`.
inline Tensor predict_raw(ModelParams &params,
                          const std::vector<DirectedGraph> &graphs,
                          const std::vector<int> &indices, int threads) {
  Tensor out(static_cast<int>(indices.size()), params.n_tasks);
  detail::run_chunked(
      static_cast<int>(indices.size()), threads, [&](int lo, int hi, int) {
        for (int r = lo; r < hi; ++r) {
          Tape tape(/*recording=*/false);
          const BoundModel bound = bind_params(tape, params);
          const ModelOutputs mo =
              dgat_forward(tape, bound, graphs[indices[r]], params.config);
          const Tensor &row =
              tape.value(predict_graph(tape, bound, mo.mol_state));
          for (int t = 0; t < params.n_tasks; ++t)
            out.at(r, t) = row.at(0, t);
        }
      });
  return out;
}

// Metrics for one partition. For regression, stats undo the label
// standardization so errors are in original units.
inline EvalReport evaluate_split(ModelParams &params, const Dataset &ds,
                                 const std::vector<DirectedGraph> &graphs,
                                 const std::vector<int> &indices,
                                 const TaskStats *stats,
                                 const std::string &regression_metric,
                                 int threads) {
  const int n_tasks = ds.schema.n_tasks();
  if (n_tasks == 0) throw DataError("evaluate: dataset has no task columns");
  if (params.n_tasks != n_tasks)
    throw CompatError("model has " + std::to_string(params.n_tasks) +
                      " task outputs, dataset has " + std::to_string(n_tasks));
  if (indices.empty()) throw DataError("evaluate: empty partition");
  EvalReport report;
  report.kind = ds.schema.kind;
  const Tensor raw = predict_raw(params, graphs, indices, threads);

  double sum = 0.0;
  int used = 0;
  for (int t = 0; t < n_tasks; ++t) {
    std::vector<double> pred, truth;
    for (std::size_t r = 0; r < indices.size(); ++r) {
      const DataRecord &rec = ds.records[indices[r]];
      if (!rec.has_label[t]) continue;
      if (ds.schema.kind == TaskKind::kBinary) {
        pred.push_back(detail::sigmoid(raw.at(static_cast<int>(r), t)));
        truth.push_back(rec.targets[t]);
      } else {
        const double mean = stats != nullptr ? stats->mean[t] : 0.0;
        const double sd = stats != nullptr ? stats->stdev[t] : 1.0;
        pred.push_back(raw.at(static_cast<int>(r), t) * sd + mean);
        truth.push_back(rec.targets[t]);
      }
    }
    if (ds.schema.kind == TaskKind::kBinary) {
      try {
        report.auc.push_back(roc_auc(pred, truth));
        sum += report.auc.back();
        ++used;
      } catch (const DataError &) {
        report.auc.push_back(std::numeric_limits<double>::quiet_NaN());
        report.warnings.push_back("task " + ds.schema.names[t] +
                                  " skipped: needs both classes");
      }
    } else {
      if (pred.empty()) {
        report.rmse_v.push_back(std::numeric_limits<double>::quiet_NaN());
        report.mae_v.push_back(std::numeric_limits<double>::quiet_NaN());
        report.warnings.push_back("task " + ds.schema.names[t] +
                                  " skipped: no labels in partition");
        continue;
      }
      report.rmse_v.push_back(rmse(pred, truth));
      report.mae_v.push_back(mae(pred, truth));
      sum += regression_metric == "mae" ? report.mae_v.back()
                                        : report.rmse_v.back();
      ++used;
    }
  }
  if (used == 0)
    throw DataError("evaluate: no scorable task in partition (single-class "
                    "or unlabeled everywhere)");
  report.primary = sum / used;
  return report;
}

// Fraction of per-block recovery argmaxes that match the true categories on
// freshly masked copies of the corpus, eval mode. Mask plans are drawn from
// `seed` independently of any training epoch.
inline double recovery_accuracy(ModelParams &params, const Dataset &corpus,
                                uint64_t seed, double p_mask = 0.16,
                                double p_rand = 0.04) {
  std::vector<int> widths;
  for (const auto &b : params.scheme.atom_blocks)
    widths.push_back(b.width() - 1);
  long correct = 0, total = 0;
  for (int i = 0; i < corpus.size(); ++i) {
    Rng rng(mix64(seed, 0x7265636fULL, static_cast<uint64_t>(i)));
    const MaskedGraph masked = make_mask_plan(corpus.records[i].mol,
                                              params.scheme, rng, p_mask,
                                              p_rand);
    Tape tape(/*recording=*/false);
    const BoundModel bound = bind_params(tape, params);
    const ModelOutputs mo =
        dgat_forward(tape, bound, masked.graph, params.config);
    const int sel = tape.gather_rows(
        predict_atoms(tape, bound, mo.atom_states), masked.plan.selected);
    detail::recovery_hits(tape.value(sel), masked.plan.recovery_targets,
                          widths, correct, total);
  }
  if (total == 0) throw DataError("recovery_accuracy: nothing selected");
  return static_cast<double>(correct) / total;
}

inline PretrainResult pretrain(ModelParams &params, const Dataset &corpus,
                               const PretrainConfig &cfg) {
  params.config.validate();
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (cfg.batch < 0) throw ConfigError("batch must be >= 0");
  if (cfg.lambda_graph < 0.0) throw ConfigError("lambda_graph must be >= 0");
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
  std::vector<int> used;
  for (int i = 0; i < corpus.size(); ++i) {
    const int n = corpus.records[i].mol.n_atoms();
    if (cfg.size_filter && (n < cfg.min_atoms || n > cfg.max_atoms)) continue;
    used.push_back(i);
  }
  if (used.empty())
    throw DataError("pretraining corpus is empty after the size filter");

  const int n_graph_tasks = corpus.schema.n_tasks();
  TaskStats stats;
  if (n_graph_tasks > 0) stats = compute_task_stats(corpus, used);

  PretrainResult result;
  if (n_graph_tasks > 0)
    result.task_meta = {{"names", corpus.schema.names},
                        {"kind", task_kind_name(corpus.schema.kind)},
                        {"regression_metric", "rmse"},
                        {"mean", stats.mean},
                        {"std", stats.stdev}};

  auto refs = params.refs();
  std::vector<int> rec_widths;
  for (const auto &b : params.scheme.atom_blocks)
    rec_widths.push_back(b.width() - 1);

  Adam adam({cfg.lr});
  ModelParams backup = params;
  const int n = static_cast<int>(used.size());
  const int bs = cfg.batch > 0 ? std::min(cfg.batch, n) : n;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    try {
      double ep_loss = 0.0, ep_rec = 0.0, ep_graph = 0.0;
      long ep_correct = 0, ep_total = 0;
      int ep_count = 0;
      for (int b0 = 0; b0 < n; b0 += bs) {
        const int bn = std::min(n, b0 + bs) - b0;
        const int n_chunks = std::max(1, std::min(cfg.threads, bn));
        std::vector<detail::BatchAccum> accums(n_chunks,
                                               detail::BatchAccum(refs));
        detail::run_chunked(bn, cfg.threads, [&](int lo, int hi, int chunk) {
          detail::BatchAccum &acc = accums[chunk];
          for (int bm = lo; bm < hi; ++bm) {
            const int m = b0 + bm;
            const DataRecord &rec = corpus.records[used[m]];
            Rng rng(mix64(cfg.seed, static_cast<uint64_t>(epoch),
                          static_cast<uint64_t>(used[m])));
            MaskedGraph masked = make_mask_plan(rec.mol, params.scheme, rng,
                                                cfg.p_mask, cfg.p_rand);
            Tape tape;
            const BoundModel bound = bind_params(tape, params);
            ForwardOptions opt;
            opt.training = true;
            opt.rng = &rng;
            const ModelOutputs mo =
                dgat_forward(tape, bound, masked.graph, params.config, opt);
            const int sel =
                tape.gather_rows(predict_atoms(tape, bound, mo.atom_states),
                                 masked.plan.selected);
            const int rec_loss = tape.block_cross_entropy(
                sel, masked.plan.recovery_targets, rec_widths);
            int loss = rec_loss;
            double graph_loss_val = 0.0;
            if (n_graph_tasks > 0) {
              Tensor target(1, n_graph_tasks);
              Tensor mask(1, n_graph_tasks);
              for (int t = 0; t < n_graph_tasks; ++t)
                if (rec.has_label[t]) {
                  target.at(0, t) =
                      (rec.targets[t] - stats.mean[t]) / stats.stdev[t];
                  mask.at(0, t) = 1.0;
                }
              const int graph_loss =
                  tape.mse(predict_graph(tape, bound, mo.mol_state), target,
                           &mask);
              graph_loss_val = tape.value(graph_loss).at(0, 0);
              loss = tape.add(loss, tape.scale(graph_loss, cfg.lambda_graph));
            }
            tape.backward(loss);
            acc.add_grads(tape, bound);
            acc.loss_sum += tape.value(loss).at(0, 0);
            acc.rec_loss_sum += tape.value(rec_loss).at(0, 0);
            acc.graph_loss_sum += graph_loss_val;
            detail::recovery_hits(tape.value(sel),
                                  masked.plan.recovery_targets, rec_widths,
                                  acc.rec_correct, acc.rec_total);
            ++acc.count;
          }
        });
        detail::BatchAccum total = accums[0];
        for (int c = 1; c < n_chunks; ++c) total.merge(accums[c]);
        std::vector<Tensor *> ps;
        std::vector<const Tensor *> gs;
        for (std::size_t i = 0; i < refs.size(); ++i) {
          for (double &g : total.grad_sum[i].data()) g /= total.count;
          ps.push_back(refs[i].tensor);
          gs.push_back(&total.grad_sum[i]);
        }
        adam.step(ps, gs);
        ep_loss += total.loss_sum;
        ep_rec += total.rec_loss_sum;
        ep_graph += total.graph_loss_sum;
        ep_correct += total.rec_correct;
        ep_total += total.rec_total;
        ep_count += total.count;
      }
      nlohmann::json entry;
      entry["epoch"] = epoch;
      entry["loss"] = ep_loss / ep_count;
      entry["recovery_loss"] = ep_rec / ep_count;
      if (n_graph_tasks > 0) entry["graph_loss"] = ep_graph / ep_count;
      entry["recovery_accuracy"] = static_cast<double>(ep_correct) / ep_total;
      result.log.push_back(std::move(entry));
      result.epochs_run = epoch + 1;
      backup = params;
    } catch (const NumericError &e) {
      params = backup;
      result.diverged = true;
      result.log.push_back(
          {{"epoch", epoch}, {"event", "diverged"}, {"error", e.what()}});
      break;
    }
  }
  return result;
}

inline FinetuneResult finetune(ModelParams &params, const Dataset &ds,
                               const SplitAssignment &split,
                               const FinetuneConfig &cfg) {
  params.config.validate();
  const int n_tasks = ds.schema.n_tasks();
  if (n_tasks == 0) throw DataError("finetune: dataset has no task columns");
  if (params.n_tasks != n_tasks)
    throw CompatError("model head has " + std::to_string(params.n_tasks) +
                      " outputs, dataset has " + std::to_string(n_tasks) +
                      " tasks");
  if (static_cast<int>(split.partition.size()) != ds.size())
    throw DataError("split does not cover the dataset");
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (cfg.batch < 0) throw ConfigError("batch must be >= 0");
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
  if (cfg.patience < 1) throw ConfigError("patience must be >= 1");
  if (cfg.backbone_lr_scale < 0.0)
    throw ConfigError("backbone_lr_scale must be >= 0");
  if (cfg.regression_metric != "rmse" && cfg.regression_metric != "mae")
    throw ConfigError("regression_metric must be rmse or mae");

  std::vector<int> train_idx, valid_idx, test_idx;
  for (int i = 0; i < ds.size(); ++i)
    switch (split.partition[i]) {
    case Partition::kTrain: train_idx.push_back(i); break;
    case Partition::kValid: valid_idx.push_back(i); break;
    case Partition::kTest: test_idx.push_back(i); break;
    }
  if (train_idx.empty() || valid_idx.empty() || test_idx.empty())
    throw DataError("finetune: every partition must be nonempty");

  const bool regression = ds.schema.kind == TaskKind::kRegression;
  TaskStats stats;
  if (regression) stats = compute_task_stats(ds, train_idx);
  const TaskStats *stats_ptr = regression ? &stats : nullptr;

  const std::vector<DirectedGraph> graphs =
      build_graph_cache(ds, params.scheme);
  auto refs = params.refs();
  std::vector<double> lr_scales;
  for (const auto &r : refs)
    lr_scales.push_back(r.name.rfind("head.", 0) == 0 ? 1.0
                                                      : cfg.backbone_lr_scale);

  Adam adam({cfg.lr});
  ModelParams backup = params;
  ModelParams best = params;
  FinetuneResult result;
  double best_metric = regression
                           ? std::numeric_limits<double>::infinity()
                           : -std::numeric_limits<double>::infinity();
  int stale = 0;
  const int n = static_cast<int>(train_idx.size());
  const int bs = cfg.batch > 0 ? std::min(cfg.batch, n) : n;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    try {
      double ep_loss = 0.0;
      int ep_count = 0;
      for (int b0 = 0; b0 < n; b0 += bs) {
        const int bn = std::min(n, b0 + bs) - b0;
        const int n_chunks = std::max(1, std::min(cfg.threads, bn));
        std::vector<detail::BatchAccum> accums(n_chunks,
                                               detail::BatchAccum(refs));
        detail::run_chunked(bn, cfg.threads, [&](int lo, int hi, int chunk) {
          detail::BatchAccum &acc = accums[chunk];
          for (int bm = lo; bm < hi; ++bm) {
            const int idx = train_idx[b0 + bm];
            const DataRecord &rec = ds.records[idx];
            Rng rng(mix64(cfg.seed, static_cast<uint64_t>(epoch),
                          static_cast<uint64_t>(idx)));
            Tape tape;
            const BoundModel bound = bind_params(tape, params);
            ForwardOptions opt;
            opt.training = true;
            opt.rng = &rng;
            const ModelOutputs mo =
                dgat_forward(tape, bound, graphs[idx], params.config, opt);
            const int logits = predict_graph(tape, bound, mo.mol_state);
            Tensor target(1, n_tasks);
            Tensor mask(1, n_tasks);
            for (int t = 0; t < n_tasks; ++t)
              if (rec.has_label[t]) {
                target.at(0, t) =
                    regression
                        ? (rec.targets[t] - stats.mean[t]) / stats.stdev[t]
                        : rec.targets[t];
                mask.at(0, t) = 1.0;
              }
            const int loss = regression
                                 ? tape.mse(logits, target, &mask)
                                 : tape.bce_with_logits(logits, target, mask);
            tape.backward(loss);
            acc.add_grads(tape, bound);
            acc.loss_sum += tape.value(loss).at(0, 0);
            ++acc.count;
          }
        });
        detail::BatchAccum total = accums[0];
        for (int c = 1; c < n_chunks; ++c) total.merge(accums[c]);
        std::vector<Tensor *> ps;
        std::vector<const Tensor *> gs;
        for (std::size_t i = 0; i < refs.size(); ++i) {
          for (double &g : total.grad_sum[i].data()) g /= total.count;
          ps.push_back(refs[i].tensor);
          gs.push_back(&total.grad_sum[i]);
        }
        adam.step(ps, gs, &lr_scales);
        ep_loss += total.loss_sum;
        ep_count += total.count;
      }

      double valid_metric = std::numeric_limits<double>::quiet_NaN();
      try {
        valid_metric = evaluate_split(params, ds, graphs, valid_idx,
                                      stats_ptr, cfg.regression_metric,
                                      cfg.threads)
                           .primary;
      } catch (const DataError &) {
        // Validation partition unscorable this epoch; never counts as an
        // improvement.
      }
      // Ties refresh the kept checkpoint (the later, better-trained model
      // wins) but only strict improvement resets patience, so plateaus
      // still stop early.
      const bool tied_or_better =
          std::isfinite(valid_metric) &&
          (regression ? valid_metric <= best_metric
                      : valid_metric >= best_metric);
      const bool improved =
          std::isfinite(valid_metric) &&
          (regression ? valid_metric < best_metric
                      : valid_metric > best_metric);
      if (tied_or_better) {
        best_metric = valid_metric;
        best = params;
        result.best_epoch = epoch;
      }
      if (improved)
        stale = 0;
      else
        ++stale;
      result.log.push_back({{"epoch", epoch},
                            {"train_loss", ep_loss / ep_count},
                            {"valid_metric", valid_metric}});
      result.epochs_run = epoch + 1;
      backup = params;
      if (stale >= cfg.patience) break;
    } catch (const NumericError &e) {
      params = backup;
      result.diverged = true;
      result.log.push_back(
          {{"epoch", epoch}, {"event", "diverged"}, {"error", e.what()}});
      break;
    }
  }

  if (result.best_epoch >= 0) params = best;
  // Round through f32 first so the reported metrics are exactly what a
  // reader of the saved checkpoint will reproduce.
  round_through_f32(params);
  result.train_report = evaluate_split(params, ds, graphs, train_idx,
                                       stats_ptr, cfg.regression_metric,
                                       cfg.threads);
  result.valid_report = evaluate_split(params, ds, graphs, valid_idx,
                                       stats_ptr, cfg.regression_metric,
                                       cfg.threads);
  result.test_report = evaluate_split(params, ds, graphs, test_idx, stats_ptr,
                                      cfg.regression_metric, cfg.threads);
  result.task_meta = {{"names", ds.schema.names},
                      {"kind", task_kind_name(ds.schema.kind)},
                      {"regression_metric", cfg.regression_metric}};
  if (regression) {
    result.task_meta["mean"] = stats.mean;
    result.task_meta["std"] = stats.stdev;
  }
  return result;
}

} // namespace dgat
