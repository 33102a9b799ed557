// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Featurized molecular graph with directed edges. Every undirected bond b
// yields two directed edges 2b (a->b) and 2b+1 (b->a); both carry the same
// undirected bond features but evolve independent hidden states.

#include <algorithm>
#include <vector>

#include "dgat/common/error.hpp"
#include "dgat/molgraph/features.hpp"
#include "dgat/molgraph/molecule.hpp"
#include "dgat/tensor/tensor.hpp"

namespace dgat {

struct DirectedGraph {
  int n_atoms = 0;
  int n_directed_edges = 0;
  std::vector<int> edge_src;
  std::vector<int> edge_dst;
  std::vector<int> reverse_of;
  std::vector<std::vector<int>> incoming; // per atom, sorted edge ids
  Tensor atom_feat;                       // n_atoms x atom_dim
  Tensor bond_feat;                       // n_directed_edges x bond_dim

  void check_invariants() const {
    if (n_directed_edges != static_cast<int>(edge_src.size()) ||
        n_directed_edges != static_cast<int>(edge_dst.size()) ||
        n_directed_edges != static_cast<int>(reverse_of.size()))
      throw DataError("directed graph: inconsistent edge arrays");
    for (int e = 0; e < n_directed_edges; ++e) {
      const int r = reverse_of[e];
      if (r < 0 || r >= n_directed_edges || r == e)
        throw DataError("directed graph: bad reverse index");
      if (reverse_of[r] != e)
        throw DataError("directed graph: reverse_of is not an involution");
      if (edge_src[e] != edge_dst[r] || edge_dst[e] != edge_src[r])
        throw DataError("directed graph: reverse edge endpoints mismatch");
    }
    std::vector<int> seen(n_directed_edges, 0);
    for (int i = 0; i < n_atoms; ++i) {
      for (int e : incoming[i]) {
        if (edge_dst[e] != i)
          throw DataError("directed graph: incoming list wrong destination");
        ++seen[e];
      }
      if (!std::is_sorted(incoming[i].begin(), incoming[i].end()))
        throw DataError("directed graph: incoming list not sorted");
    }
    for (int e = 0; e < n_directed_edges; ++e)
      if (seen[e] != 1)
        throw DataError("directed graph: edge missing from incoming lists");
  }
};

inline DirectedGraph build_directed_graph(const Molecule &mol,
                                          const Featurized &feats) {
  if (feats.atom_feat.rows() != mol.n_atoms() ||
      feats.bond_feat.rows() != mol.n_bonds())
    throw ShapeError("featurization does not match molecule");
  DirectedGraph g;
  g.n_atoms = mol.n_atoms();
  g.n_directed_edges = 2 * mol.n_bonds();
  g.edge_src.resize(g.n_directed_edges);
  g.edge_dst.resize(g.n_directed_edges);
  g.reverse_of.resize(g.n_directed_edges);
  g.incoming.assign(g.n_atoms, {});
  g.atom_feat = feats.atom_feat;
  g.bond_feat = Tensor(g.n_directed_edges, feats.bond_feat.cols());
  for (int b = 0; b < mol.n_bonds(); ++b) {
    const int fwd = 2 * b;
    const int rev = 2 * b + 1;
    g.edge_src[fwd] = mol.bonds[b].a;
    g.edge_dst[fwd] = mol.bonds[b].b;
    g.edge_src[rev] = mol.bonds[b].b;
    g.edge_dst[rev] = mol.bonds[b].a;
    g.reverse_of[fwd] = rev;
    g.reverse_of[rev] = fwd;
    for (int c = 0; c < feats.bond_feat.cols(); ++c) {
      g.bond_feat.at(fwd, c) = feats.bond_feat.at(b, c);
      g.bond_feat.at(rev, c) = feats.bond_feat.at(b, c);
    }
  }
  for (int e = 0; e < g.n_directed_edges; ++e)
    g.incoming[g.edge_dst[e]].push_back(e);
  for (auto &list : g.incoming) std::sort(list.begin(), list.end());
  return g;
}

inline DirectedGraph build_directed_graph(const Molecule &mol,
                                          const FeatureScheme &scheme) {
  return build_directed_graph(mol, featurize(mol, scheme));
}

// Attention key set for updating edge e = (i -> j): e itself plus every
// edge entering i except the reverse j -> i, so information never flows
// straight back to its source. Order: e first, then ascending edge id.
inline std::vector<int> edge_neighborhood(const DirectedGraph &g, int e) {
  if (e < 0 || e >= g.n_directed_edges)
    throw DataError("edge id out of range");
  std::vector<int> out{e};
  for (int in : g.incoming[g.edge_src[e]])
    if (in != g.reverse_of[e]) out.push_back(in);
  return out;
}

} // namespace dgat
