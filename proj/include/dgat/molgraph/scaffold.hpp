// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Bemis-Murcko scaffolds. Side chains are pruned by repeatedly deleting
// degree-1 atoms until a fixpoint; what remains (ring systems plus the
// linkers between them) is canonicalized into a 64-bit key by
// Weisfeiler-Lehman style neighborhood-hash refinement.
//
// Atom labels entering the hash are (element, aromatic, formal charge);
// hydrogen counts and degrees are deliberately excluded so a scaffold key
// matches the key of the bare scaffold parsed on its own. WL refinement is
// not a complete isomorphism test, but at corpus scale collisions are
// checked by tests rather than prevented by construction.

#include <algorithm>
#include <string>
#include <vector>

#include "dgat/common/rng.hpp"
#include "dgat/molgraph/molecule.hpp"

namespace dgat {

struct ScaffoldKey {
  std::string value;

  bool is_empty() const { return value == "empty"; }
  bool operator==(const ScaffoldKey &other) const = default;
  auto operator<=>(const ScaffoldKey &other) const = default;

  static ScaffoldKey empty() { return {"empty"}; }
};

// Indices of atoms surviving side-chain pruning, ascending. Empty for
// acyclic molecules.
inline std::vector<int> murcko_atoms(const Molecule &mol) {
  const int n = mol.n_atoms();
  std::vector<bool> alive(n, true);
  std::vector<int> degree(n, 0);
  for (const auto &bond : mol.bonds) {
    ++degree[bond.a];
    ++degree[bond.b];
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < n; ++i) {
      if (!alive[i] || degree[i] > 1 || mol.atoms[i].in_ring) continue;
      alive[i] = false;
      changed = true;
      for (const auto &bond : mol.bonds) {
        if (bond.a == i && alive[bond.b]) --degree[bond.b];
        if (bond.b == i && alive[bond.a]) --degree[bond.a];
      }
      degree[i] = 0;
    }
  }
  std::vector<int> kept;
  for (int i = 0; i < n; ++i)
    if (alive[i] && degree[i] > 0) kept.push_back(i);
  return kept;
}

namespace detail {

inline std::uint64_t hash_string(const std::string &s) {
  std::uint64_t h = 0x9ae16a3b2f90404fULL;
  for (unsigned char c : s) h = mix64(h, c);
  return h;
}

inline std::uint64_t edge_code(BondOrder order) {
  return static_cast<std::uint64_t>(order);
}

} // namespace detail

inline ScaffoldKey murcko_scaffold(const Molecule &mol) {
  const std::vector<int> kept = murcko_atoms(mol);
  if (kept.empty()) return ScaffoldKey::empty();

  const int n = static_cast<int>(kept.size());
  std::vector<int> local(mol.n_atoms(), -1);
  for (int i = 0; i < n; ++i) local[kept[i]] = i;

  // Induced subgraph adjacency with bond-order edge labels.
  std::vector<std::vector<std::pair<int, std::uint64_t>>> adj(n);
  int n_edges = 0;
  for (const auto &bond : mol.bonds) {
    const int a = local[bond.a];
    const int b = local[bond.b];
    if (a < 0 || b < 0) continue;
    adj[a].emplace_back(b, detail::edge_code(bond.order));
    adj[b].emplace_back(a, detail::edge_code(bond.order));
    ++n_edges;
  }

  std::vector<std::uint64_t> label(n);
  for (int i = 0; i < n; ++i) {
    const AtomRecord &atom = mol.atoms[kept[i]];
    label[i] = mix64(detail::hash_string(atom.element),
                     atom.aromatic ? 1 : 0,
                     static_cast<std::uint64_t>(atom.formal_charge + 16));
  }

  std::vector<std::uint64_t> next(n);
  std::vector<std::uint64_t> neighborhood;
  for (int round = 0; round < 2 * n; ++round) {
    for (int i = 0; i < n; ++i) {
      neighborhood.clear();
      for (const auto &[j, code] : adj[i])
        neighborhood.push_back(mix64(code, label[j]));
      std::sort(neighborhood.begin(), neighborhood.end());
      std::uint64_t h = mix64(label[i], 0x5ca1ab1eULL);
      for (std::uint64_t x : neighborhood) h = mix64(h, x);
      next[i] = h;
    }
    label.swap(next);
  }

  std::sort(label.begin(), label.end());
  std::uint64_t h = mix64(static_cast<std::uint64_t>(n),
                          static_cast<std::uint64_t>(n_edges));
  for (std::uint64_t x : label) h = mix64(h, x);

  static const char *digits = "0123456789abcdef";
  std::string hex(16, '0');
  for (int i = 15; i >= 0; --i) {
    hex[i] = digits[h & 0xf];
    h >>= 4;
  }
  return ScaffoldKey{"wl:" + hex};
}

} // namespace dgat
