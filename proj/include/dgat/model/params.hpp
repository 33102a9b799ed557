// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Model hyperparameters and trainable tensors.
//
// All parameters are reachable through visit_params(), which fixes one
// canonical order used everywhere: initialization draws, optimizer slots,
// checkpoint layout, and tape binding. Adding a tensor means adding exactly
// one fn(...) line there.

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dgat/common/error.hpp"
#include "dgat/common/rng.hpp"
#include "dgat/molgraph/features.hpp"
#include "dgat/tensor/tape.hpp"
#include "dgat/tensor/tensor.hpp"

namespace dgat {

struct ModelConfig {
  int d_model = 512;
  int n_layers = 4;
  int n_heads = 8;
  double dropout = 0.1;
  // When true, the per-stage MLP output is added back onto its (normalized)
  // input. Off by default: the update replaces the state with the MLP output.
  bool post_residual = false;

  // Small configuration for tests and experiments on a laptop-scale budget.
  static ModelConfig desk() {
    ModelConfig c;
    c.d_model = 32;
    c.n_layers = 3;
    c.n_heads = 4;
    c.dropout = 0.0;
    return c;
  }

  void validate() const {
    if (d_model < 2) throw ConfigError("d_model must be >= 2");
    if (n_layers < 1) throw ConfigError("n_layers must be >= 1");
    if (n_heads < 1 || d_model % n_heads != 0)
      throw ConfigError("n_heads must divide d_model");
    if (dropout < 0.0 || dropout >= 1.0)
      throw ConfigError("dropout must be in [0, 1)");
  }

  nlohmann::json to_json() const {
    return {{"d_model", d_model},
            {"n_layers", n_layers},
            {"n_heads", n_heads},
            {"dropout", dropout},
            {"post_residual", post_residual}};
  }

  static ModelConfig from_json(const nlohmann::json &j) {
    ModelConfig c;
    c.d_model = j.at("d_model").get<int>();
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.post_residual = j.value("post_residual", false);
    c.validate();
    return c;
  }

  bool operator==(const ModelConfig &) const = default;
};

// y = x * w + b with w stored input-major (in x out).
struct Linear {
  Tensor w;
  Tensor b;
};

// Query/key/value projections; deliberately bias-free.
struct Attn {
  Tensor wq, wk, wv;
};

struct Mlp {
  Tensor w1, b1, w2, b2;
};

struct Norm {
  Tensor gain, bias;
};

// One attention site (bond, atom, or molecule) within a layer.
struct Stage {
  Attn attn;
  Mlp mlp;
  Norm norm;
};

struct LayerParams {
  Stage bond, atom, mol;
};

struct ParamRef {
  std::string name;
  Tensor *tensor;
};

struct ModelParams {
  ModelConfig config;
  FeatureScheme scheme;
  int n_tasks = 1;

  Linear edge_in;  // (2*atom_dim + bond_dim) -> d_model
  Linear atom_in;  // atom_dim -> d_model
  Tensor mol0;     // learned initial molecule state, 1 x d_model
  std::vector<LayerParams> layers;
  Linear recovery; // d_model -> recovery_dim(), per-block category logits
  Linear head;     // d_model -> n_tasks

  // One output column per non-MASK category in every atom block.
  int recovery_dim() const {
    int n = 0;
    for (const auto &b : scheme.atom_blocks) n += b.width() - 1;
    return n;
  }

  static ModelParams init(const ModelConfig &config, FeatureScheme scheme,
                          int n_tasks, uint64_t seed);

  std::vector<ParamRef> refs();
};

// Canonical enumeration of every trainable tensor (see file comment).
template <class Fn> void visit_params(ModelParams &p, Fn &&fn) {
  fn("edge_in.w", p.edge_in.w);
  fn("edge_in.b", p.edge_in.b);
  fn("atom_in.w", p.atom_in.w);
  fn("atom_in.b", p.atom_in.b);
  fn("mol0", p.mol0);
  for (std::size_t t = 0; t < p.layers.size(); ++t) {
    const std::string base = "layers." + std::to_string(t) + ".";
    auto stage = [&](const std::string &tag, Stage &s) {
      fn(base + tag + ".attn.wq", s.attn.wq);
      fn(base + tag + ".attn.wk", s.attn.wk);
      fn(base + tag + ".attn.wv", s.attn.wv);
      fn(base + tag + ".mlp.w1", s.mlp.w1);
      fn(base + tag + ".mlp.b1", s.mlp.b1);
      fn(base + tag + ".mlp.w2", s.mlp.w2);
      fn(base + tag + ".mlp.b2", s.mlp.b2);
      fn(base + tag + ".norm.gain", s.norm.gain);
      fn(base + tag + ".norm.bias", s.norm.bias);
    };
    stage("bond", p.layers[t].bond);
    stage("atom", p.layers[t].atom);
    stage("mol", p.layers[t].mol);
  }
  fn("recovery.w", p.recovery.w);
  fn("recovery.b", p.recovery.b);
  fn("head.w", p.head.w);
  fn("head.b", p.head.b);
}

inline std::vector<ParamRef> ModelParams::refs() {
  std::vector<ParamRef> out;
  visit_params(*this, [&](const std::string &name, Tensor &t) {
    out.push_back({name, &t});
  });
  return out;
}

inline ModelParams ModelParams::init(const ModelConfig &config,
                                     FeatureScheme scheme, int n_tasks,
                                     uint64_t seed) {
  config.validate();
  scheme.validate();
  if (n_tasks < 1) throw ConfigError("n_tasks must be >= 1");
  ModelParams p;
  p.config = config;
  p.scheme = std::move(scheme);
  p.n_tasks = n_tasks;
  const int d = config.d_model;
  const int edge_in_dim = 2 * p.scheme.atom_dim() + p.scheme.bond_dim();

  p.edge_in = {Tensor(edge_in_dim, d), Tensor(1, d)};
  p.atom_in = {Tensor(p.scheme.atom_dim(), d), Tensor(1, d)};
  p.mol0 = Tensor(1, d);
  p.layers.resize(config.n_layers);
  for (auto &layer : p.layers)
    for (Stage *s : {&layer.bond, &layer.atom, &layer.mol}) {
      s->attn = {Tensor(d, d), Tensor(d, d), Tensor(d, d)};
      s->mlp = {Tensor(d, d), Tensor(1, d), Tensor(d, d), Tensor(1, d)};
      s->norm = {Tensor(1, d), Tensor(1, d)};
    }
  p.recovery = {Tensor(d, p.recovery_dim()), Tensor(1, p.recovery_dim())};
  p.head = {Tensor(d, n_tasks), Tensor(1, n_tasks)};

  // Draw weights in canonical order so initialization is reproducible.
  Rng rng(seed);
  visit_params(p, [&](const std::string &name, Tensor &t) {
    const bool is_bias = name.ends_with(".b") || name.ends_with(".b1") ||
                         name.ends_with(".b2") || name.ends_with(".bias");
    const bool is_gain = name.ends_with(".gain");
    if (is_gain) {
      t = Tensor(t.rows(), t.cols(), 1.0);
    } else if (is_bias) {
      // keep zeros
    } else {
      t = Tensor::glorot(t.rows(), t.cols(), rng);
    }
  });
  return p;
}

// Tape ids of the bound parameter leaves, mirroring ModelParams.
struct BoundLinear {
  int w = -1, b = -1;
};
struct BoundAttn {
  int wq = -1, wk = -1, wv = -1;
};
struct BoundMlp {
  int w1 = -1, b1 = -1, w2 = -1, b2 = -1;
};
struct BoundNorm {
  int gain = -1, bias = -1;
};
struct BoundStage {
  BoundAttn attn;
  BoundMlp mlp;
  BoundNorm norm;
};
struct BoundLayer {
  BoundStage bond, atom, mol;
};
struct BoundModel {
  BoundLinear edge_in, atom_in;
  int mol0 = -1;
  std::vector<BoundLayer> layers;
  BoundLinear recovery, head;
  std::vector<int> leaf_ids; // in visit_params order, for gradient readout
};

// Pushes every parameter onto the tape as a leaf (copying the values) in
// canonical order and returns the id mirror.
inline BoundModel bind_params(Tape &tape, ModelParams &p) {
  std::unordered_map<std::string, int> ids;
  BoundModel m;
  visit_params(p, [&](const std::string &name, Tensor &t) {
    const int id = tape.leaf(t);
    ids.emplace(name, id);
    m.leaf_ids.push_back(id);
  });
  auto get = [&](const std::string &name) { return ids.at(name); };
  m.edge_in = {get("edge_in.w"), get("edge_in.b")};
  m.atom_in = {get("atom_in.w"), get("atom_in.b")};
  m.mol0 = get("mol0");
  m.layers.resize(p.layers.size());
  for (std::size_t t = 0; t < p.layers.size(); ++t) {
    const std::string base = "layers." + std::to_string(t) + ".";
    auto stage = [&](const std::string &tag, BoundStage &bs) {
      bs.attn = {get(base + tag + ".attn.wq"), get(base + tag + ".attn.wk"),
                 get(base + tag + ".attn.wv")};
      bs.mlp = {get(base + tag + ".mlp.w1"), get(base + tag + ".mlp.b1"),
                get(base + tag + ".mlp.w2"), get(base + tag + ".mlp.b2")};
      bs.norm = {get(base + tag + ".norm.gain"), get(base + tag + ".norm.bias")};
    };
    stage("bond", m.layers[t].bond);
    stage("atom", m.layers[t].atom);
    stage("mol", m.layers[t].mol);
  }
  m.recovery = {get("recovery.w"), get("recovery.b")};
  m.head = {get("head.w"), get("head.b")};
  return m;
}

} // namespace dgat
