// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
//
// Forward-pass semantics: attention against a dense oracle, relabeling
// equivariance, directed receptive fields, and checkpoint round-trips.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "dgat/common/io.hpp"
#include "dgat/model/checkpoint.hpp"
#include "dgat/model/dgat.hpp"
#include "dgat/model/params.hpp"
#include "dgat/molgraph/directed_graph.hpp"
#include "dgat/molgraph/smiles.hpp"
#include "dgat/tensor/tape.hpp"

using dgat::bind_params;
using dgat::BoundModel;
using dgat::build_directed_graph;
using dgat::dgat_forward;
using dgat::DirectedGraph;
using dgat::FeatureScheme;
using dgat::ModelConfig;
using dgat::ModelParams;
using dgat::Molecule;
using dgat::parse_smiles;
using dgat::Tape;
using dgat::Tensor;

namespace {

Tensor random_tensor(std::mt19937 &rng, int rows, int cols) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Tensor t(rows, cols);
  for (double &v : t.data()) v = dist(rng);
  return t;
}

ModelParams desk_params(int n_tasks = 1, uint64_t seed = 99) {
  return ModelParams::init(ModelConfig::desk(), FeatureScheme::defaults(),
                           n_tasks, seed);
}

} // namespace

TEST_CASE("multi-head attention equals the dense oracle") {
  // naive reference: per head, softmax(q.K^T / sqrt(d_head)) . V
  std::mt19937 rng(5);
  for (int heads : {1, 2, 4}) {
    const int dim = 8, m = 5;
    const int d_head = dim / heads;
    Tensor q = random_tensor(rng, 1, dim);
    Tensor k = random_tensor(rng, m, dim);
    Tensor v = random_tensor(rng, m, dim);

    Tape tape;
    const int out_id = tape.multi_head_attend(tape.leaf(q), tape.leaf(k),
                                              tape.leaf(v), heads);
    const Tensor &got = tape.value(out_id);

    for (int h = 0; h < heads; ++h) {
      const int c0 = h * d_head;
      std::vector<double> logits(m), weights(m);
      for (int r = 0; r < m; ++r) {
        double acc = 0.0;
        for (int c = 0; c < d_head; ++c) acc += q.at(0, c0 + c) * k.at(r, c0 + c);
        logits[r] = acc / std::sqrt(static_cast<double>(d_head));
      }
      double denom = 0.0;
      for (int r = 0; r < m; ++r) denom += std::exp(logits[r]);
      for (int r = 0; r < m; ++r) weights[r] = std::exp(logits[r]) / denom;
      for (int c = 0; c < d_head; ++c) {
        double expect = 0.0;
        for (int r = 0; r < m; ++r) expect += weights[r] * v.at(r, c0 + c);
        CHECK(std::abs(got.at(0, c0 + c) - expect) < 1e-12);
      }
    }
  }
}

TEST_CASE("forward pass produces the documented shapes") {
  ModelParams params = desk_params(3);
  const DirectedGraph g =
      build_directed_graph(parse_smiles("CC(=O)NC"), params.scheme);
  Tape tape;
  BoundModel model = bind_params(tape, params);
  dgat::AttnLog log;
  dgat::ForwardOptions opt;
  opt.attn_log = &log;
  const dgat::ModelOutputs out = dgat_forward(tape, model, g, params.config, opt);
  CHECK(tape.value(out.edge_states).rows() == g.n_directed_edges);
  CHECK(tape.value(out.edge_states).cols() == params.config.d_model);
  CHECK(tape.value(out.atom_states).rows() == g.n_atoms);
  CHECK(tape.value(out.mol_state).rows() == 1);
  CHECK(tape.value(out.mol_state).cols() == params.config.d_model);

  // one attention record per edge, atom, and molecule site per layer
  CHECK(log.size() == static_cast<std::size_t>(
                          params.config.n_layers *
                          (g.n_directed_edges + g.n_atoms + 1)));
  for (const auto &rec : log) {
    REQUIRE(rec.weights.size() ==
            static_cast<std::size_t>(rec.heads * rec.m));
    for (int h = 0; h < rec.heads; ++h) {
      double sum = 0.0;
      for (int r = 0; r < rec.m; ++r) sum += rec.weights[h * rec.m + r];
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }

  const int logits = predict_graph(tape, model, out.mol_state);
  CHECK(tape.value(logits).cols() == 3);
  const int rec_logits = predict_atoms(tape, model, out.atom_states);
  CHECK(tape.value(rec_logits).rows() == g.n_atoms);
  CHECK(tape.value(rec_logits).cols() == params.recovery_dim());
}

TEST_CASE("zero-bond molecules run the atom and molecule stages") {
  ModelParams params = desk_params();
  const DirectedGraph g =
      build_directed_graph(parse_smiles("[NH4+]"), params.scheme);
  Tape tape;
  BoundModel model = bind_params(tape, params);
  const dgat::ModelOutputs out = dgat_forward(tape, model, g, params.config);
  CHECK(tape.value(out.edge_states).rows() == 0);
  CHECK(tape.value(out.atom_states).rows() == 1);
  CHECK(tape.value(out.mol_state).cols() == params.config.d_model);
}

TEST_CASE("relabeling atoms permutes states without changing the readout") {
  ModelParams params = desk_params();
  std::mt19937 shuffler(77);
  for (const char *smi : {"CC(=O)NC1CCCCC1", "c1ccc2ncccc2c1", "CCO"}) {
    Molecule mol = parse_smiles(smi);
    std::vector<int> perm(mol.n_atoms());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), shuffler);
    Molecule shuffled = dgat::permute_molecule(mol, perm);

    Tape t1, t2;
    BoundModel m1 = bind_params(t1, params);
    BoundModel m2 = bind_params(t2, params);
    const DirectedGraph g1 = build_directed_graph(mol, params.scheme);
    const DirectedGraph g2 = build_directed_graph(shuffled, params.scheme);
    const dgat::ModelOutputs o1 = dgat_forward(t1, m1, g1, params.config);
    const dgat::ModelOutputs o2 = dgat_forward(t2, m2, g2, params.config);

    // molecule state is invariant
    for (int c = 0; c < params.config.d_model; ++c)
      CHECK(std::abs(t1.value(o1.mol_state).at(0, c) -
                     t2.value(o2.mol_state).at(0, c)) < 1e-9);

    // atom states are equivariant: old row i lands at row perm[i]
    for (int i = 0; i < mol.n_atoms(); ++i)
      for (int c = 0; c < params.config.d_model; ++c)
        CHECK(std::abs(t1.value(o1.atom_states).at(i, c) -
                       t2.value(o2.atom_states).at(perm[i], c)) < 1e-9);

    // directed-edge states follow the endpoint relabeling
    for (int e1 = 0; e1 < g1.n_directed_edges; ++e1) {
      const int s = perm[g1.edge_src[e1]], d = perm[g1.edge_dst[e1]];
      int e2 = -1;
      for (int cand = 0; cand < g2.n_directed_edges; ++cand)
        if (g2.edge_src[cand] == s && g2.edge_dst[cand] == d) e2 = cand;
      REQUIRE(e2 >= 0);
      for (int c = 0; c < params.config.d_model; ++c)
        CHECK(std::abs(t1.value(o1.edge_states).at(e1, c) -
                       t2.value(o2.edge_states).at(e2, c)) < 1e-9);
    }
  }
}

TEST_CASE("identical inputs give bit-identical forwards") {
  ModelParams params = desk_params();
  const DirectedGraph g =
      build_directed_graph(parse_smiles("Cc1ccccc1"), params.scheme);
  auto run = [&]() {
    Tape tape;
    BoundModel model = bind_params(tape, params);
    const dgat::ModelOutputs out = dgat_forward(tape, model, g, params.config);
    return tape.value(out.mol_state).data();
  };
  CHECK(run() == run());
}

TEST_CASE("the directed receptive field grows one hop per layer") {
  // Pentane vs pentane-with-a-nitrogen-appended, position-blind features:
  // the state of edge (1 -> 0) cannot tell them apart until its cone
  // reaches the far end, so the first difference appears at layer 4. The
  // appended atom must differ in features, not just exist: attention
  // averages its neighborhood, and averaging in one more copy of an
  // identical value changes nothing, so appending a plain C never shows.
  FeatureScheme scheme;
  scheme.atom_blocks.push_back(
      {dgat::AtomBlockKind::kElement, {"C", "N", "OTHER", "MASK"}});
  scheme.atom_blocks.push_back(
      {dgat::AtomBlockKind::kAromatic, {"false", "true", "MASK"}});
  scheme.bond_blocks.push_back(
      {dgat::BondBlockKind::kOrder,
       {"single", "double", "triple", "aromatic", "MASK"}});
  scheme.validate();

  ModelConfig config = ModelConfig::desk();
  config.n_layers = 8;
  ModelParams params = ModelParams::init(config, scheme, 1, 321);

  auto edge_trace_of = [&](const char *smi) {
    Molecule mol = parse_smiles(smi);
    const DirectedGraph g = build_directed_graph(mol, params.scheme);
    Tape tape;
    BoundModel model = bind_params(tape, params);
    std::vector<int> trace;
    dgat::ForwardOptions opt;
    opt.edge_trace = &trace;
    dgat_forward(tape, model, g, config, opt);
    // edge (1 -> 0) is id 1 (bond 0 reversed); collect its row per layer
    std::vector<std::vector<double>> rows;
    for (int id : trace) {
      const Tensor &states = tape.value(id);
      std::vector<double> row(states.row_ptr(1),
                              states.row_ptr(1) + states.cols());
      rows.push_back(std::move(row));
    }
    return rows;
  };

  const auto pentane = edge_trace_of("CCCCC");
  const auto aminopentane = edge_trace_of("CCCCCN");
  REQUIRE(pentane.size() == 9); // init + 8 layers
  for (int t = 0; t <= 3; ++t) CHECK(pentane[t] == aminopentane[t]);
  CHECK(pentane[4] != aminopentane[4]);
}

TEST_CASE("messages do not flow back through the reverse edge") {
  // In A-B-C, the state of edge (B -> A) may depend on (C -> B) but never
  // on (A -> B). Perturbing atom A's features must leave the aggregate of
  // what (B -> A) receives from third parties unchanged; compare against
  // the directed cone: state of (C -> B) at every layer is independent of
  // whether the far atom is C or N when its own cone never reaches it.
  ModelParams params = desk_params();
  auto trace_edge = [&](const char *smi, int edge_id) {
    const DirectedGraph g =
        build_directed_graph(parse_smiles(smi), params.scheme);
    Tape tape;
    BoundModel model = bind_params(tape, params);
    std::vector<int> trace;
    dgat::ForwardOptions opt;
    opt.edge_trace = &trace;
    dgat_forward(tape, model, g, params.config, opt);
    std::vector<std::vector<double>> rows;
    for (int id : trace) {
      const Tensor &states = tape.value(id);
      rows.emplace_back(states.row_ptr(edge_id),
                        states.row_ptr(edge_id) + states.cols());
    }
    return rows;
  };

  // OCC vs NCC: bonds are (0,1) and (1,2); edge 2 is (1 -> 2), whose cone
  // is {self} + incoming(1) - reverse = edge (0 -> 1), so it sees the O/N
  // swap. Edge 3 is (2 -> 1): its cone is incoming(2) - reverse = empty,
  // so every layer must be bit-identical despite the different molecule.
  const auto occ = trace_edge("OCC", 3);
  const auto ncc = trace_edge("NCC", 3);
  for (std::size_t t = 0; t < occ.size(); ++t) CHECK(occ[t] == ncc[t]);
  // edge 2 starts from identical local features but picks up the swapped
  // atom through one attention hop
  const auto occ_fwd = trace_edge("OCC", 2);
  const auto ncc_fwd = trace_edge("NCC", 2);
  CHECK(occ_fwd[0] == ncc_fwd[0]);
  CHECK(occ_fwd[1] != ncc_fwd[1]);
}

TEST_CASE("initialization is reproducible and structured") {
  ModelParams a = desk_params(2, 7);
  ModelParams b = desk_params(2, 7);
  ModelParams c = desk_params(2, 8);

  const auto refs_a = a.refs();
  const auto refs_b = b.refs();
  REQUIRE(refs_a.size() == refs_b.size());
  // 5 input tensors + 27 per layer + recovery + head pairs
  CHECK(refs_a.size() ==
        static_cast<std::size_t>(5 + a.config.n_layers * 27 + 4));
  std::set<std::string> names;
  bool all_equal = true, any_differs_from_c = false;
  const auto refs_c = c.refs();
  for (std::size_t i = 0; i < refs_a.size(); ++i) {
    names.insert(refs_a[i].name);
    if (refs_a[i].tensor->data() != refs_b[i].tensor->data())
      all_equal = false;
    if (refs_a[i].tensor->data() != refs_c[i].tensor->data())
      any_differs_from_c = true;
  }
  CHECK(names.size() == refs_a.size()); // unique names
  CHECK(all_equal);
  CHECK(any_differs_from_c);

  // biases start at zero, gains at one
  for (const auto &ref : refs_a) {
    if (ref.name.ends_with(".bias") || ref.name.ends_with(".b") ||
        ref.name.ends_with(".b1") || ref.name.ends_with(".b2"))
      for (double v : ref.tensor->data()) CHECK(v == 0.0);
    if (ref.name.ends_with(".gain"))
      for (double v : ref.tensor->data()) CHECK(v == 1.0);
  }

  // config guards
  ModelConfig bad = ModelConfig::desk();
  bad.d_model = 30; // not divisible by 4 heads
  CHECK_THROWS_AS(bad.validate(), dgat::ConfigError);
  bad = ModelConfig::desk();
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), dgat::ConfigError);
  CHECK_THROWS_AS(ModelParams::init(ModelConfig::desk(),
                                    FeatureScheme::defaults(), 0, 1),
                  dgat::ConfigError);
}

TEST_CASE("checkpoints round-trip bit-exactly after f32 rounding") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "dgat_test_ckpt";
  fs::create_directories(dir);
  const std::string path = (dir / "model.ckpt").string();

  ModelParams params = desk_params(3, 2024);
  dgat::round_through_f32(params);
  nlohmann::json extra;
  extra["phase"] = "test";
  dgat::save_checkpoint(path, params, extra);

  dgat::Checkpoint ckpt = dgat::load_checkpoint(path);
  CHECK(ckpt.manifest.at("phase") == "test");
  CHECK(ckpt.manifest.at("feature_scheme_hash") == params.scheme.hash_hex());
  ModelParams loaded = dgat::params_from_checkpoint(ckpt);
  CHECK(loaded.n_tasks == 3);
  const auto ra = params.refs(), rb = loaded.refs();
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i)
    CHECK(ra[i].tensor->data() == rb[i].tensor->data());

  SECTION("warm start copies matching tensors, skips new heads") {
    ModelParams target =
        ModelParams::init(params.config, params.scheme, 5, 31); // new task count
    const auto [copied, skipped] = dgat::load_matching_params(target, ckpt);
    CHECK(copied > 0);
    CHECK(skipped == 2); // head.w and head.b change shape
    // backbone equals source, head stays freshly initialized
    CHECK(target.atom_in.w.data() == params.atom_in.w.data());
    CHECK(target.head.w.cols() == 5);
  }

  SECTION("truncated files are rejected") {
    std::string bytes = dgat::read_file(path);
    dgat::write_file_atomic(path + ".bad", bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS(dgat::load_checkpoint(path + ".bad"));
    dgat::write_file_atomic(path + ".bad", "NOTACKPT" + bytes.substr(8));
    CHECK_THROWS_AS(dgat::load_checkpoint(path + ".bad"), dgat::CompatError);
  }

  fs::remove_all(dir);
}
