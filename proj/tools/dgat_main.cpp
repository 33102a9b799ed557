// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0

// Batch frontend. One command per process:
//
//   dgat featurize  parse a SMILES CSV, write per-molecule graph summaries
//   dgat pretrain   masked-atom pretraining (+ optional property regression)
//   dgat finetune   scaffold-split supervised training from a checkpoint
//   dgat evaluate   metrics of a checkpoint on a labeled CSV
//   dgat predict    per-task outputs for SMILES inputs
//
// Exit codes: 0 ok, 2 input error, 3 compatibility error, 4 divergence.
// All outputs are written atomically (temp file + rename), and every input
// path is validated before any work starts.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dgat/cli/run_config.hpp"
#include "dgat/common/io.hpp"
#include "dgat/model/checkpoint.hpp"
#include "dgat/molgraph/scaffold.hpp"
#include "dgat/molgraph/smiles.hpp"
#include "dgat/pipeline/train.hpp"

namespace {

using namespace dgat;

void print_warnings(const Dataset &ds) {
  for (const auto &w : ds.warnings)
    std::fprintf(stderr, "warning: %s\n", w.c_str());
}

std::string jsonl(const std::vector<nlohmann::json> &entries) {
  std::string out;
  for (const auto &e : entries) {
    out += e.dump();
    out += '\n';
  }
  return out;
}

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void print_report(const char *split, const EvalReport &r,
                  const std::vector<std::string> &names) {
  for (std::size_t t = 0; t < names.size(); ++t) {
    if (r.kind == TaskKind::kBinary) {
      if (std::isnan(r.auc[t]))
        std::printf("%s  %s  auc=skipped\n", split, names[t].c_str());
      else
        std::printf("%s  %s  auc=%s\n", split, names[t].c_str(),
                    fmt_num(r.auc[t]).c_str());
    } else {
      if (std::isnan(r.rmse_v[t]))
        std::printf("%s  %s  skipped\n", split, names[t].c_str());
      else
        std::printf("%s  %s  rmse=%s mae=%s\n", split, names[t].c_str(),
                    fmt_num(r.rmse_v[t]).c_str(), fmt_num(r.mae_v[t]).c_str());
    }
  }
  std::printf("%s  mean  %s\n", split, fmt_num(r.primary).c_str());
  for (const auto &w : r.warnings)
    std::fprintf(stderr, "warning: %s\n", w.c_str());
}

// ---------------------------------------------------------------- featurize

int cmd_featurize(const std::string &dataset_path,
                  const std::string &scheme_path,
                  const std::string &out_path) {
  require_readable(dataset_path, "dataset");
  require_writable_dir(out_path, "output");
  FeatureScheme scheme =
      scheme_path.empty()
          ? FeatureScheme::defaults()
          : FeatureScheme::from_json(
                nlohmann::json::parse(read_file(scheme_path)));

  std::istringstream in(read_file(dataset_path));
  std::string line;
  if (!std::getline(in, line)) throw DataError("dataset file is empty");
  const auto header = detail::split_csv_line(line);
  int smiles_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (detail::trim(header[i]) == "smiles")
      smiles_col = static_cast<int>(i);
  if (smiles_col < 0) throw DataError("dataset has no 'smiles' column");

  std::string out;
  int n_ok = 0, n_fail = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    const std::string smiles =
        smiles_col < static_cast<int>(cells.size())
            ? detail::trim(cells[smiles_col])
            : std::string();
    try {
      if (smiles.empty()) throw ParseError("empty smiles cell", 0);
      const Molecule mol = parse_smiles(smiles);
      const DirectedGraph g = build_directed_graph(mol, scheme);
      nlohmann::json rec = {{"line", line_no},
                            {"smiles", smiles},
                            {"n_atoms", mol.n_atoms()},
                            {"n_bonds", mol.n_bonds()},
                            {"n_directed_edges", g.n_directed_edges},
                            {"scaffold", murcko_scaffold(mol).value},
                            {"atom_dim", scheme.atom_dim()},
                            {"bond_dim", scheme.bond_dim()},
                            {"scheme_hash", scheme.hash_hex()}};
      out += rec.dump();
      out += '\n';
      ++n_ok;
    } catch (const ParseError &e) {
      std::fprintf(stderr, "line %d: %s\n", line_no, e.what());
      ++n_fail;
    }
  }
  write_file_atomic(out_path, out);
  std::printf("featurized %d molecule(s) -> %s\n", n_ok, out_path.c_str());
  if (n_fail > 0) std::fprintf(stderr, "failures: %d\n", n_fail);
  return 0;
}

// ----------------------------------------------------------------- pretrain

int cmd_pretrain(RunConfig rc) {
  rc.validate_common();
  if (rc.dataset.empty()) throw ConfigError("paths.dataset is required");
  if (rc.checkpoint_out.empty())
    throw ConfigError("paths.checkpoint_out is required");
  require_readable(rc.dataset, "dataset");
  if (!rc.checkpoint_in.empty())
    require_readable(rc.checkpoint_in, "checkpoint_in");
  require_writable_dir(rc.checkpoint_out, "checkpoint_out");
  if (!rc.log_path.empty()) require_writable_dir(rc.log_path, "log");

  // Property columns, when present, are continuous targets.
  const Dataset corpus = load_dataset(rc.dataset, TaskKind::kRegression);
  print_warnings(corpus);
  const int n_tasks = std::max(1, corpus.schema.n_tasks());

  ModelParams params;
  if (!rc.checkpoint_in.empty()) {
    params = params_from_checkpoint(load_checkpoint(rc.checkpoint_in));
    if (params.n_tasks != n_tasks)
      throw CompatError("checkpoint property head has " +
                        std::to_string(params.n_tasks) +
                        " outputs, corpus needs " + std::to_string(n_tasks));
  } else {
    params = ModelParams::init(rc.model, FeatureScheme::defaults(), n_tasks,
                               rc.seed);
  }

  const PretrainResult pr = pretrain(params, corpus, rc.pretrain_config());
  nlohmann::json extra = {{"phase", "pretrain"},
                          {"seed", rc.seed},
                          {"epochs_run", pr.epochs_run},
                          {"diverged", pr.diverged}};
  if (!pr.task_meta.empty()) extra["tasks"] = pr.task_meta;
  save_checkpoint(rc.checkpoint_out, params, extra);
  if (!rc.log_path.empty()) write_file_atomic(rc.log_path, jsonl(pr.log));
  if (!pr.log.empty())
    std::printf("pretrain %d epoch(s): %s\n", pr.epochs_run,
                pr.log.back().dump().c_str());
  std::printf("checkpoint -> %s\n", rc.checkpoint_out.c_str());
  if (pr.diverged) {
    std::fprintf(stderr,
                 "error: training diverged; the checkpoint holds the last "
                 "finite state\n");
    return 4;
  }
  return 0;
}

// ----------------------------------------------------------------- finetune

int cmd_finetune(RunConfig rc) {
  rc.validate_common();
  if (rc.dataset.empty()) throw ConfigError("paths.dataset is required");
  if (rc.checkpoint_out.empty())
    throw ConfigError("paths.checkpoint_out is required");
  require_readable(rc.dataset, "dataset");
  if (!rc.checkpoint_in.empty())
    require_readable(rc.checkpoint_in, "checkpoint_in");
  if (!rc.split_in.empty()) require_readable(rc.split_in, "split_in");
  require_writable_dir(rc.checkpoint_out, "checkpoint_out");
  if (!rc.split_out.empty()) require_writable_dir(rc.split_out, "split_out");
  if (!rc.log_path.empty()) require_writable_dir(rc.log_path, "log");

  const Dataset ds =
      load_dataset(rc.dataset, task_kind_from_name(rc.task_kind));
  print_warnings(ds);

  ModelParams params;
  if (!rc.checkpoint_in.empty()) {
    const Checkpoint ckpt = load_checkpoint(rc.checkpoint_in);
    const ModelParams donor = params_from_checkpoint(ckpt);
    params = ModelParams::init(donor.config, donor.scheme,
                               ds.schema.n_tasks(), rc.seed);
    const auto [copied, fresh] = load_matching_params(params, ckpt);
    std::fprintf(stderr, "warm start: %d tensor(s) copied, %d fresh\n",
                 copied, fresh);
  } else {
    params = ModelParams::init(rc.model, FeatureScheme::defaults(),
                               ds.schema.n_tasks(), rc.seed);
  }

  const SplitAssignment split =
      rc.split_in.empty()
          ? scaffold_split(ds, 0.8, 0.1, rc.seed)
          : split_from_json(nlohmann::json::parse(read_file(rc.split_in)),
                            ds.size());
  if (!rc.split_out.empty())
    write_file_atomic(rc.split_out, split_to_json(split).dump(2) + "\n");

  const FinetuneResult fr = finetune(params, ds, split, rc.finetune_config());
  const nlohmann::json extra = {{"phase", "finetune"},
                                {"seed", rc.seed},
                                {"epochs_run", fr.epochs_run},
                                {"best_epoch", fr.best_epoch},
                                {"diverged", fr.diverged},
                                {"tasks", fr.task_meta}};
  save_checkpoint(rc.checkpoint_out, params, extra);
  if (!rc.log_path.empty()) write_file_atomic(rc.log_path, jsonl(fr.log));

  std::printf("finetune %d epoch(s), best validation at epoch %d\n",
              fr.epochs_run, fr.best_epoch);
  print_report("train", fr.train_report, ds.schema.names);
  print_report("valid", fr.valid_report, ds.schema.names);
  print_report("test", fr.test_report, ds.schema.names);
  std::printf("checkpoint -> %s\n", rc.checkpoint_out.c_str());
  if (fr.diverged) {
    std::fprintf(stderr,
                 "error: training diverged; the checkpoint holds the last "
                 "finite state\n");
    return 4;
  }
  return 0;
}

// ----------------------------------------------------------------- evaluate

struct TaskMeta {
  std::vector<std::string> names;
  TaskKind kind = TaskKind::kBinary;
  TaskStats stats;
  bool has_stats = false;
  std::string regression_metric = "rmse";
};

TaskMeta task_meta_from(const Checkpoint &ckpt) {
  if (!ckpt.manifest.contains("tasks"))
    throw CompatError("checkpoint carries no task metadata; produce one with "
                      "finetune (or pretrain on property columns)");
  const nlohmann::json &meta = ckpt.manifest.at("tasks");
  TaskMeta out;
  out.names = meta.at("names").get<std::vector<std::string>>();
  out.kind = task_kind_from_name(meta.at("kind").get<std::string>());
  out.regression_metric = meta.value("regression_metric", "rmse");
  if (meta.contains("mean")) {
    out.stats.mean = meta.at("mean").get<std::vector<double>>();
    out.stats.stdev = meta.at("std").get<std::vector<double>>();
    out.has_stats = true;
  }
  if (out.kind == TaskKind::kRegression && !out.has_stats)
    throw CompatError("regression checkpoint lacks target standardization");
  return out;
}

int cmd_evaluate(const std::string &ckpt_path, const std::string &dataset_path,
                 const std::string &split_path, const std::string &partition,
                 int threads) {
  require_readable(ckpt_path, "checkpoint");
  require_readable(dataset_path, "dataset");
  if (!split_path.empty()) require_readable(split_path, "split");

  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  ModelParams params = params_from_checkpoint(ckpt);
  const TaskMeta meta = task_meta_from(ckpt);

  const Dataset ds = load_dataset(dataset_path, meta.kind);
  print_warnings(ds);
  if (ds.schema.names != meta.names)
    throw CompatError("dataset task columns do not match the checkpoint's");

  std::vector<int> indices;
  if (split_path.empty()) {
    for (int i = 0; i < ds.size(); ++i) indices.push_back(i);
  } else {
    const SplitAssignment split = split_from_json(
        nlohmann::json::parse(read_file(split_path)), ds.size());
    const Partition want = partition_from_name(partition);
    for (int i = 0; i < ds.size(); ++i)
      if (split.partition[i] == want) indices.push_back(i);
    if (indices.empty())
      throw DataError("partition '" + partition + "' is empty");
  }

  const auto graphs = build_graph_cache(ds, params.scheme);
  const EvalReport rep = evaluate_split(
      params, ds, graphs, indices, meta.has_stats ? &meta.stats : nullptr,
      meta.regression_metric, threads);
  print_report(split_path.empty() ? "all" : partition.c_str(), rep,
               meta.names);
  return 0;
}

// ------------------------------------------------------------------ predict

int cmd_predict(const std::string &ckpt_path,
                const std::vector<std::string> &smiles_args,
                const std::string &dataset_path, const std::string &out_path,
                int threads) {
  require_readable(ckpt_path, "checkpoint");
  if (!dataset_path.empty()) require_readable(dataset_path, "dataset");
  if (!out_path.empty()) require_writable_dir(out_path, "output");

  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  ModelParams params = params_from_checkpoint(ckpt);
  const TaskMeta meta = task_meta_from(ckpt);

  std::vector<std::string> smiles = smiles_args;
  if (!dataset_path.empty()) {
    std::istringstream in(read_file(dataset_path));
    std::string line;
    if (!std::getline(in, line)) throw DataError("dataset file is empty");
    const auto header = detail::split_csv_line(line);
    int col = -1;
    for (std::size_t i = 0; i < header.size(); ++i)
      if (detail::trim(header[i]) == "smiles") col = static_cast<int>(i);
    if (col < 0) throw DataError("dataset has no 'smiles' column");
    int line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (detail::trim(line).empty()) continue;
      const auto cells = detail::split_csv_line(line);
      if (col >= static_cast<int>(cells.size()))
        throw DataError("line " + std::to_string(line_no) +
                        ": missing smiles cell");
      smiles.push_back(detail::trim(cells[col]));
    }
  }
  if (smiles.empty())
    throw ConfigError("no molecules given (use --smiles or --dataset)");

  std::vector<DirectedGraph> graphs;
  std::vector<int> indices;
  graphs.reserve(smiles.size());
  for (const auto &s : smiles) {
    graphs.push_back(build_directed_graph(parse_smiles(s), params.scheme));
    indices.push_back(static_cast<int>(indices.size()));
  }

  const Tensor raw = predict_raw(params, graphs, indices, threads);
  std::string out = "smiles";
  for (const auto &n : meta.names) out += "," + n;
  out += '\n';
  for (std::size_t r = 0; r < smiles.size(); ++r) {
    out += smiles[r];
    for (int t = 0; t < params.n_tasks; ++t) {
      const double v = raw.at(static_cast<int>(r), t);
      const double y =
          meta.kind == TaskKind::kBinary
              ? 1.0 / (1.0 + std::exp(-v))
              : (meta.has_stats ? v * meta.stats.stdev[t] + meta.stats.mean[t]
                                : v);
      out += "," + fmt_num(y);
    }
    out += '\n';
  }
  if (out_path.empty())
    std::fputs(out.c_str(), stdout);
  else
    write_file_atomic(out_path, out);
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"directed-bond graph attention networks for molecular "
               "property prediction"};
  app.require_subcommand(1);

  // featurize
  auto *feat = app.add_subcommand(
      "featurize", "parse a SMILES CSV and write graph summaries");
  std::string f_dataset, f_scheme, f_out;
  feat->add_option("--dataset", f_dataset, "CSV with a smiles column")
      ->required();
  feat->add_option("--out", f_out, "output JSONL path")->required();
  feat->add_option("--scheme", f_scheme,
                   "feature scheme JSON (default: built-in)");

  // Flag overrides shared by the two training subcommands. CLI11 counts
  // tell us which flags were actually given.
  struct TrainFlags {
    std::string config, dataset, ckpt_in, ckpt_out, split_in, split_out, log;
    std::string task_kind, regression_metric;
    uint64_t seed = 0;
    int epochs = 0, batch = 0, threads = 0, patience = 0;
    double lr = 0.0, backbone_lr_scale = 0.0, lambda_graph = 0.0;
    bool size_filter = false;
    CLI::Option *o_dataset = nullptr, *o_ckpt_in = nullptr,
                *o_ckpt_out = nullptr, *o_split_in = nullptr,
                *o_split_out = nullptr, *o_log = nullptr, *o_seed = nullptr,
                *o_epochs = nullptr, *o_batch = nullptr, *o_threads = nullptr,
                *o_patience = nullptr, *o_lr = nullptr, *o_scale = nullptr,
                *o_lambda = nullptr, *o_task_kind = nullptr,
                *o_metric = nullptr, *o_size_filter = nullptr;

    void add_common(CLI::App *cmd) {
      cmd->add_option("--config", config, "JSON run config file");
      o_dataset = cmd->add_option("--dataset", dataset, "dataset CSV");
      o_ckpt_out =
          cmd->add_option("--checkpoint-out", ckpt_out, "checkpoint to write");
      o_ckpt_in =
          cmd->add_option("--checkpoint-in", ckpt_in, "checkpoint to start from");
      o_log = cmd->add_option("--log", log, "JSONL training log path");
      o_seed = cmd->add_option("--seed", seed, "RNG seed");
      o_epochs = cmd->add_option("--epochs", epochs, "training epochs");
      o_batch =
          cmd->add_option("--batch", batch, "molecules per step (0 = all)");
      o_threads = cmd->add_option("--threads", threads, "worker threads");
      o_lr = cmd->add_option("--lr", lr, "learning rate");
    }

    void apply_common(RunConfig &rc) const {
      if (!config.empty()) rc.load_file(config);
      if (o_dataset->count()) rc.dataset = dataset;
      if (o_ckpt_in->count()) rc.checkpoint_in = ckpt_in;
      if (o_ckpt_out->count()) rc.checkpoint_out = ckpt_out;
      if (o_log->count()) rc.log_path = log;
      if (o_seed->count()) {
        rc.seed = seed;
        rc.seed_set = true;
      }
      if (o_epochs->count()) rc.epochs = epochs;
      if (o_batch->count()) rc.batch = batch;
      if (o_threads->count()) rc.threads = threads;
      if (o_lr->count()) rc.lr = lr;
      rc.apply_env();
    }
  };

  auto *pre = app.add_subcommand(
      "pretrain", "masked-atom pretraining over a SMILES corpus");
  TrainFlags pf;
  pf.add_common(pre);
  pf.o_lambda = pre->add_option("--lambda-graph", pf.lambda_graph,
                                "property-regression loss weight");
  pf.o_size_filter = pre->add_flag("--size-filter", pf.size_filter,
                                   "keep only molecules with 10-60 atoms");

  auto *fin = app.add_subcommand(
      "finetune", "supervised training on a scaffold split");
  TrainFlags ff;
  ff.add_common(fin);
  ff.o_split_in = fin->add_option("--split-in", ff.split_in,
                                  "partition JSON to reuse");
  ff.o_split_out = fin->add_option("--split-out", ff.split_out,
                                   "write the partition JSON here");
  ff.o_task_kind = fin->add_option("--task-kind", ff.task_kind,
                                   "binary or regression");
  ff.o_metric = fin->add_option("--regression-metric", ff.regression_metric,
                                "rmse or mae");
  ff.o_patience = fin->add_option("--patience", ff.patience,
                                  "early-stopping patience (epochs)");
  ff.o_scale = fin->add_option("--backbone-lr-scale", ff.backbone_lr_scale,
                               "backbone lr multiplier (0 freezes it)");

  auto *eva = app.add_subcommand("evaluate", "metrics on a labeled CSV");
  std::string e_ckpt, e_dataset, e_split, e_partition = "test";
  int e_threads = 1;
  eva->add_option("--checkpoint", e_ckpt, "model checkpoint")->required();
  eva->add_option("--dataset", e_dataset, "labeled CSV")->required();
  auto *e_split_opt =
      eva->add_option("--split", e_split, "partition JSON (default: use all)");
  eva->add_option("--partition", e_partition, "train, valid, or test")
      ->needs(e_split_opt);
  eva->add_option("--threads", e_threads, "worker threads");

  auto *prd = app.add_subcommand("predict", "per-task outputs per molecule");
  std::string p_ckpt, p_dataset, p_out;
  std::vector<std::string> p_smiles;
  int p_threads = 1;
  prd->add_option("--checkpoint", p_ckpt, "model checkpoint")->required();
  prd->add_option("--smiles", p_smiles, "SMILES string (repeatable)");
  prd->add_option("--dataset", p_dataset, "CSV with a smiles column");
  prd->add_option("--out", p_out, "output CSV (default: stdout)");
  prd->add_option("--threads", p_threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2; // --help exits 0, bad usage is an input error
  }

  try {
    if (*feat) return cmd_featurize(f_dataset, f_scheme, f_out);
    if (*pre) {
      RunConfig rc;
      pf.apply_common(rc);
      if (pf.o_lambda->count()) rc.lambda_graph = pf.lambda_graph;
      if (pf.o_size_filter->count()) rc.size_filter = pf.size_filter;
      return cmd_pretrain(rc);
    }
    if (*fin) {
      RunConfig rc;
      ff.apply_common(rc);
      if (ff.o_split_in->count()) rc.split_in = ff.split_in;
      if (ff.o_split_out->count()) rc.split_out = ff.split_out;
      if (ff.o_task_kind->count()) rc.task_kind = ff.task_kind;
      if (ff.o_metric->count()) rc.regression_metric = ff.regression_metric;
      if (ff.o_patience->count()) rc.patience = ff.patience;
      if (ff.o_scale->count()) rc.backbone_lr_scale = ff.backbone_lr_scale;
      return cmd_finetune(rc);
    }
    if (*eva)
      return cmd_evaluate(e_ckpt, e_dataset, e_split, e_partition, e_threads);
    if (*prd)
      return cmd_predict(p_ckpt, p_smiles, p_dataset, p_out, p_threads);
  } catch (const CompatError &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const NumericError &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const Error &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
