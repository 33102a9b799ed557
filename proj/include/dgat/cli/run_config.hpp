// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run configuration for the command-line frontend.
//
// A run is described by a JSON file with three sections ("model", "train",
// "paths"), any of which may be partial; missing keys take the defaults
// below. Command-line flags override file values, and the D_GAT_SEED
// environment variable overrides both. Unknown keys are rejected so typos
// fail loudly instead of silently training with defaults.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dgat/common/error.hpp"
#include "dgat/common/io.hpp"
#include "dgat/model/params.hpp"
#include "dgat/pipeline/train.hpp"

namespace dgat {

struct RunConfig {
  ModelConfig model;

  // train section
  double lr = 1e-4;
  int epochs = 50;
  int batch = 0; // 0 = full batch
  uint64_t seed = 0;
  bool seed_set = false; // a seed must come from file, flag, or D_GAT_SEED
  double lambda_graph = 1.0;
  double p_mask = 0.16;
  double p_rand = 0.04;
  bool size_filter = false;
  int threads = 1;
  int patience = 20;
  double backbone_lr_scale = 0.1;
  std::string regression_metric = "rmse";
  std::string task_kind = "binary";

  // paths section
  std::string dataset;
  std::string checkpoint_in;
  std::string checkpoint_out;
  std::string split_in;
  std::string split_out;
  std::string log_path;

  static void reject_unknown(const nlohmann::json &j,
                             const std::vector<std::string> &known,
                             const std::string &section) {
    for (const auto &item : j.items()) {
      bool ok = false;
      for (const auto &k : known)
        if (item.key() == k) {
          ok = true;
          break;
        }
      if (!ok)
        throw ConfigError("unknown key '" + item.key() + "' in config section "
                          "'" + section + "'");
    }
  }

  void apply_json(const nlohmann::json &j) {
    reject_unknown(j, {"model", "train", "paths"}, "(top level)");
    if (j.contains("model")) {
      const auto &m = j.at("model");
      reject_unknown(
          m, {"d_model", "n_layers", "n_heads", "dropout", "post_residual"},
          "model");
      model.d_model = m.value("d_model", model.d_model);
      model.n_layers = m.value("n_layers", model.n_layers);
      model.n_heads = m.value("n_heads", model.n_heads);
      model.dropout = m.value("dropout", model.dropout);
      model.post_residual = m.value("post_residual", model.post_residual);
    }
    if (j.contains("train")) {
      const auto &t = j.at("train");
      reject_unknown(t,
                     {"lr", "epochs", "batch", "seed", "lambda_graph",
                      "p_mask", "p_rand", "size_filter", "threads", "patience",
                      "backbone_lr_scale", "regression_metric", "task_kind"},
                     "train");
      lr = t.value("lr", lr);
      epochs = t.value("epochs", epochs);
      batch = t.value("batch", batch);
      if (t.contains("seed")) {
        seed = t.at("seed").get<uint64_t>();
        seed_set = true;
      }
      lambda_graph = t.value("lambda_graph", lambda_graph);
      p_mask = t.value("p_mask", p_mask);
      p_rand = t.value("p_rand", p_rand);
      size_filter = t.value("size_filter", size_filter);
      threads = t.value("threads", threads);
      patience = t.value("patience", patience);
      backbone_lr_scale = t.value("backbone_lr_scale", backbone_lr_scale);
      regression_metric = t.value("regression_metric", regression_metric);
      task_kind = t.value("task_kind", task_kind);
    }
    if (j.contains("paths")) {
      const auto &p = j.at("paths");
      reject_unknown(p,
                     {"dataset", "checkpoint_in", "checkpoint_out", "split_in",
                      "split_out", "log"},
                     "paths");
      dataset = p.value("dataset", dataset);
      checkpoint_in = p.value("checkpoint_in", checkpoint_in);
      checkpoint_out = p.value("checkpoint_out", checkpoint_out);
      split_in = p.value("split_in", split_in);
      split_out = p.value("split_out", split_out);
      log_path = p.value("log", log_path);
    }
  }

  void load_file(const std::string &path) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception &e) {
      throw ConfigError("config " + path + ": " + e.what());
    }
    apply_json(j);
  }

  // D_GAT_SEED wins over any other seed source.
  void apply_env() {
    const char *env = std::getenv("D_GAT_SEED");
    if (env == nullptr) return;
    try {
      seed = std::stoull(env);
    } catch (const std::exception &) {
      throw ConfigError("D_GAT_SEED is not an unsigned integer: " +
                        std::string(env));
    }
    seed_set = true;
  }

  void validate_common() const {
    model.validate();
    if (!seed_set)
      throw ConfigError("a seed is required (train.seed, --seed, or "
                        "D_GAT_SEED)");
    if (lr <= 0.0) throw ConfigError("lr must be > 0");
    if (p_mask < 0.0 || p_mask >= 1.0 || p_rand < 0.0 || p_rand >= 1.0 ||
        p_mask + p_rand >= 1.0)
      throw ConfigError("mask rates must lie in [0, 1) and sum below 1");
    if (task_kind != "binary" && task_kind != "regression")
      throw ConfigError("task_kind must be binary or regression");
    if (regression_metric != "rmse" && regression_metric != "mae")
      throw ConfigError("regression_metric must be rmse or mae");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch < 0) throw ConfigError("batch must be >= 0");
  }

  PretrainConfig pretrain_config() const {
    PretrainConfig c;
    c.epochs = epochs;
    c.batch = batch;
    c.lr = lr;
    c.lambda_graph = lambda_graph;
    c.p_mask = p_mask;
    c.p_rand = p_rand;
    c.seed = seed;
    c.size_filter = size_filter;
    c.threads = threads;
    return c;
  }

  FinetuneConfig finetune_config() const {
    FinetuneConfig c;
    c.epochs = epochs;
    c.batch = batch;
    c.patience = patience;
    c.lr = lr;
    c.backbone_lr_scale = backbone_lr_scale;
    c.regression_metric = regression_metric;
    c.seed = seed;
    c.threads = threads;
    return c;
  }
};

// Input files must be readable and output locations writable before any
// work starts, so a long run cannot fail at the very end on a typo.
inline void require_readable(const std::string &path, const char *what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(std::string(what) + " not readable: " + path);
}

inline void require_writable_dir(const std::string &path, const char *what) {
  namespace fs = std::filesystem;
  const fs::path parent = fs::path(path).parent_path();
  const fs::path dir = parent.empty() ? fs::path(".") : parent;
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw ConfigError(std::string(what) + " directory does not exist: " +
                      dir.string());
}

} // namespace dgat
