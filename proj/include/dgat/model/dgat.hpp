// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Directed-bond graph attention network forward pass.
//
// Three state stacks evolve over n_layers interaction layers:
//   directed bond states h_e   (2E x D)
//   atom states          h_i   (N x D)
//   molecule state       S     (1 x D, a learned "supervirtual node")
// Each layer updates them in that order with scaled dot-product attention:
//   bonds attend over {e} + incoming edges of src(e) minus the reverse edge
//     (previous-layer bond states), which is what keeps messages directed;
//   atoms attend over {self} + their incoming bond states (current layer);
//   the molecule state attends over {itself} + all atom states (current
//     layer).
// Every site then applies  W2(relu(W1(LayerNorm(state + message)))), which
// replaces the state (no trailing residual unless config.post_residual).

#include <vector>

#include "dgat/common/error.hpp"
#include "dgat/common/rng.hpp"
#include "dgat/model/params.hpp"
#include "dgat/molgraph/directed_graph.hpp"
#include "dgat/tensor/tape.hpp"

namespace dgat {

// One attention call: softmax weights per head over m key rows.
struct AttnRecord {
  int heads = 0;
  int m = 0;
  std::vector<double> weights; // heads x m, head-major
};
using AttnLog = std::vector<AttnRecord>;

struct ForwardOptions {
  bool training = false;
  Rng *rng = nullptr; // required when training with dropout > 0
  AttnLog *attn_log = nullptr;
  // When set, receive the tape id of each stack after initialization and
  // after every layer (n_layers + 1 entries).
  std::vector<int> *edge_trace = nullptr;
  std::vector<int> *atom_trace = nullptr;
  std::vector<int> *mol_trace = nullptr;
};

struct ModelOutputs {
  int edge_states = -1; // 2E x D
  int atom_states = -1; // N x D
  int mol_state = -1;   // 1 x D
};

namespace detail {

inline int attend_site(Tape &tape, int q, int keys, int values,
                       const ModelConfig &config, const ForwardOptions &opt) {
  std::vector<double> weights;
  const int out = tape.multi_head_attend(
      q, keys, values, config.n_heads, config.dropout, opt.training, opt.rng,
      opt.attn_log != nullptr ? &weights : nullptr);
  if (opt.attn_log != nullptr)
    opt.attn_log->push_back(
        {config.n_heads, tape.value(keys).rows(), std::move(weights)});
  return out;
}

// state + message -> LayerNorm -> W2(relu(W1 .)); dropout only on the
// hidden activation (attention-weight dropout lives in attend_site).
inline int update_site(Tape &tape, int state, int message,
                       const BoundStage &stage, const ModelConfig &config,
                       const ForwardOptions &opt) {
  Rng dummy(0);
  Rng &rng = opt.rng != nullptr ? *opt.rng : dummy;
  const int u = tape.layer_norm(tape.add(state, message), stage.norm.gain,
                                stage.norm.bias);
  int hidden = tape.relu(
      tape.add_row(tape.matmul(u, stage.mlp.w1), stage.mlp.b1));
  hidden = tape.dropout(hidden, config.dropout, opt.training, rng);
  const int out =
      tape.add_row(tape.matmul(hidden, stage.mlp.w2), stage.mlp.b2);
  return config.post_residual ? tape.add(u, out) : out;
}

} // namespace detail

// Runs the full forward pass and returns tape ids of the final states.
inline ModelOutputs dgat_forward(Tape &tape, const BoundModel &model,
                                 const DirectedGraph &g,
                                 const ModelConfig &config,
                                 const ForwardOptions &opt = {}) {
  config.validate();
  if (opt.training && config.dropout > 0.0 && opt.rng == nullptr)
    throw ConfigError("training forward with dropout requires an rng");
  const int n_edges = g.n_directed_edges;

  // Input projections. A directed edge (i -> j) starts from the
  // concatenation [atom features i, bond features, atom features j].
  const int atom_feat = tape.constant(g.atom_feat);
  int edges = -1;
  if (n_edges > 0) {
    const int bond_feat = tape.constant(g.bond_feat);
    const int src = tape.gather_rows(atom_feat, g.edge_src);
    const int dst = tape.gather_rows(atom_feat, g.edge_dst);
    const int x = tape.concat_cols({src, bond_feat, dst});
    edges = tape.add_row(tape.matmul(x, model.edge_in.w), model.edge_in.b);
  } else {
    edges = tape.constant(Tensor(0, config.d_model));
  }
  int atoms =
      tape.add_row(tape.matmul(atom_feat, model.atom_in.w), model.atom_in.b);
  int mol = model.mol0;

  if (opt.edge_trace != nullptr) opt.edge_trace->push_back(edges);
  if (opt.atom_trace != nullptr) opt.atom_trace->push_back(atoms);
  if (opt.mol_trace != nullptr) opt.mol_trace->push_back(mol);

  for (int t = 0; t < config.n_layers; ++t) {
    const BoundLayer &layer = model.layers[t];

    // Directed bond states, from previous-layer bond states.
    if (n_edges > 0) {
      const int q_all = tape.matmul(edges, layer.bond.attn.wq);
      const int k_all = tape.matmul(edges, layer.bond.attn.wk);
      const int v_all = tape.matmul(edges, layer.bond.attn.wv);
      std::vector<int> messages(n_edges);
      for (int e = 0; e < n_edges; ++e) {
        const std::vector<int> rows = edge_neighborhood(g, e);
        const int q = tape.gather_rows(q_all, {e});
        const int k = tape.gather_rows(k_all, rows);
        const int v = tape.gather_rows(v_all, rows);
        messages[e] = detail::attend_site(tape, q, k, v, config, opt);
      }
      edges = detail::update_site(tape, edges, tape.concat_rows(messages),
                                  layer.bond, config, opt);
    }

    // Atom states, attending over self + current-layer incoming bonds.
    {
      const int q_all = tape.matmul(atoms, layer.atom.attn.wq);
      const int k_self = tape.matmul(atoms, layer.atom.attn.wk);
      const int v_self = tape.matmul(atoms, layer.atom.attn.wv);
      const int k_edge =
          n_edges > 0 ? tape.matmul(edges, layer.atom.attn.wk) : -1;
      const int v_edge =
          n_edges > 0 ? tape.matmul(edges, layer.atom.attn.wv) : -1;
      std::vector<int> messages(g.n_atoms);
      for (int i = 0; i < g.n_atoms; ++i) {
        const int q = tape.gather_rows(q_all, {i});
        int k = tape.gather_rows(k_self, {i});
        int v = tape.gather_rows(v_self, {i});
        if (!g.incoming[i].empty()) {
          k = tape.concat_rows({k, tape.gather_rows(k_edge, g.incoming[i])});
          v = tape.concat_rows({v, tape.gather_rows(v_edge, g.incoming[i])});
        }
        messages[i] = detail::attend_site(tape, q, k, v, config, opt);
      }
      atoms = detail::update_site(tape, atoms, tape.concat_rows(messages),
                                  layer.atom, config, opt);
    }

    // Molecule state, attending over itself + all current-layer atoms.
    {
      const int q = tape.matmul(mol, layer.mol.attn.wq);
      const int k = tape.concat_rows({tape.matmul(mol, layer.mol.attn.wk),
                                      tape.matmul(atoms, layer.mol.attn.wk)});
      const int v = tape.concat_rows({tape.matmul(mol, layer.mol.attn.wv),
                                      tape.matmul(atoms, layer.mol.attn.wv)});
      const int message = detail::attend_site(tape, q, k, v, config, opt);
      mol = detail::update_site(tape, mol, message, layer.mol, config, opt);
    }

    if (opt.edge_trace != nullptr) opt.edge_trace->push_back(edges);
    if (opt.atom_trace != nullptr) opt.atom_trace->push_back(atoms);
    if (opt.mol_trace != nullptr) opt.mol_trace->push_back(mol);
  }
  return {edges, atoms, mol};
}

// Task logits (1 x n_tasks) from the final molecule state.
inline int predict_graph(Tape &tape, const BoundModel &model, int mol_state) {
  return tape.add_row(tape.matmul(mol_state, model.head.w), model.head.b);
}

// Per-atom recovery logits (N x recovery_dim) from the final atom states.
inline int predict_atoms(Tape &tape, const BoundModel &model,
                         int atom_states) {
  return tape.add_row(tape.matmul(atom_states, model.recovery.w),
                      model.recovery.b);
}

} // namespace dgat
