// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dgat/common/error.hpp"

namespace dgat {

enum class BondOrder : std::uint8_t {
  kSingle = 1,
  kDouble = 2,
  kTriple = 3,
  kAromatic = 4,
};

struct AtomRecord {
  std::string element;
  int formal_charge = 0;
  // Hydrogens written explicitly in brackets vs. computed by valence rules.
  int explicit_hydrogens = 0;
  int implicit_hydrogens = 0;
  bool h_count_explicit = false; // bracket atom: H count is authoritative
  bool aromatic = false;
  int degree = 0; // heavy-atom neighbors
  bool in_ring = false;

  int total_hydrogens() const { return explicit_hydrogens + implicit_hydrogens; }
};

struct BondRecord {
  int a = 0; // endpoints, a < b
  int b = 0;
  BondOrder order = BondOrder::kSingle;
  bool in_ring = false;
  bool conjugated = false;
};

// Heavy-atom chemical graph. Hydrogens are counts on atoms, never nodes.
struct Molecule {
  std::vector<AtomRecord> atoms;
  std::vector<BondRecord> bonds;

  int n_atoms() const { return static_cast<int>(atoms.size()); }
  int n_bonds() const { return static_cast<int>(bonds.size()); }

  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::vector<int>> adj(atoms.size());
    for (const auto &bond : bonds) {
      adj[bond.a].push_back(bond.b);
      adj[bond.b].push_back(bond.a);
    }
    return adj;
  }

  void validate() const {
    const int n = n_atoms();
    std::set<std::pair<int, int>> seen;
    for (const auto &bond : bonds) {
      if (bond.a < 0 || bond.b < 0 || bond.a >= n || bond.b >= n)
        throw DataError("bond endpoint out of range");
      if (bond.a == bond.b) throw DataError("self-bond");
      if (bond.a > bond.b) throw DataError("bond endpoints not normalized");
      if (!seen.insert({bond.a, bond.b}).second)
        throw DataError("duplicate bond");
      if (bond.order == BondOrder::kAromatic &&
          (!atoms[bond.a].aromatic || !atoms[bond.b].aromatic))
        throw DataError("aromatic bond between non-aromatic atoms");
    }
    std::vector<int> deg(n, 0);
    for (const auto &bond : bonds) {
      ++deg[bond.a];
      ++deg[bond.b];
    }
    for (int i = 0; i < n; ++i)
      if (atoms[i].degree != deg[i]) throw DataError("stored degree mismatch");
  }
};

// Relabels atoms: new index of old atom i is perm[i]. Bond endpoints are
// re-normalized and the bond list re-sorted, so the result is a valid
// Molecule with the same structure.
inline Molecule permute_molecule(const Molecule &mol,
                                 const std::vector<int> &perm) {
  Molecule out;
  out.atoms.resize(mol.atoms.size());
  for (std::size_t i = 0; i < mol.atoms.size(); ++i)
    out.atoms[perm[i]] = mol.atoms[i];
  out.bonds.reserve(mol.bonds.size());
  for (const auto &bond : mol.bonds) {
    BondRecord nb = bond;
    nb.a = std::min(perm[bond.a], perm[bond.b]);
    nb.b = std::max(perm[bond.a], perm[bond.b]);
    out.bonds.push_back(nb);
  }
  std::sort(out.bonds.begin(), out.bonds.end(),
            [](const BondRecord &x, const BondRecord &y) {
              return std::tie(x.a, x.b) < std::tie(y.a, y.b);
            });
  return out;
}

} // namespace dgat
