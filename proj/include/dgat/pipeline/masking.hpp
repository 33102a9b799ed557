// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Masked-atom corruption for self-supervised pretraining.
//
// Per atom, one i.i.d. draw: with p_mask the atom's features become the
// MASK category in every block, with p_rand they are replaced by uniformly
// drawn ordinary categories (BERT-style). Either way the atom becomes a
// recovery target labeled with its original categories, and every bond
// touching it is masked in both directions so the answer cannot leak
// through bond features. If the draws select nobody, one atom is forced so
// a plan always trains something.

#include <cstdint>
#include <vector>

#include "dgat/common/rng.hpp"
#include "dgat/molgraph/directed_graph.hpp"
#include "dgat/molgraph/features.hpp"
#include "dgat/molgraph/molecule.hpp"

namespace dgat {

enum class MaskAction : uint8_t { kKeep, kMask, kRandomize };

struct MaskPlan {
  std::vector<MaskAction> actions; // per atom
  std::vector<int> selected;       // ascending indices of non-keep atoms
  // One row per selected atom: original categories, one-hot per block with
  // the MASK column dropped (recovery logits never predict MASK).
  Tensor recovery_targets;
  uint64_t plan_hash = 0;

  std::vector<int> recovery_widths(const FeatureScheme &scheme) const {
    std::vector<int> widths;
    widths.reserve(scheme.atom_blocks.size());
    for (const auto &b : scheme.atom_blocks) widths.push_back(b.width() - 1);
    return widths;
  }
};

struct MaskedGraph {
  MaskPlan plan;
  DirectedGraph graph;
};

inline MaskedGraph make_mask_plan(const Molecule &mol,
                                  const FeatureScheme &scheme, Rng &rng,
                                  double p_mask = 0.16, double p_rand = 0.04) {
  if (p_mask < 0.0 || p_rand < 0.0 || p_mask + p_rand > 1.0)
    throw ConfigError("mask probabilities must be nonnegative, sum <= 1");
  const int n = mol.n_atoms();
  const int n_blocks = static_cast<int>(scheme.atom_blocks.size());
  MaskPlan plan;
  plan.actions.assign(n, MaskAction::kKeep);
  // Replacement categories drawn for randomized atoms, in draw order.
  std::vector<std::vector<int>> randomized(n);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    if (u < p_mask) {
      plan.actions[i] = MaskAction::kMask;
    } else if (u < p_mask + p_rand) {
      plan.actions[i] = MaskAction::kRandomize;
      randomized[i].resize(n_blocks);
      for (int b = 0; b < n_blocks; ++b)
        randomized[i][b] = static_cast<int>(
            rng.uniform_int(scheme.atom_blocks[b].width() - 1));
    }
  }
  bool any = false;
  for (const MaskAction a : plan.actions)
    any = any || a != MaskAction::kKeep;
  if (!any) plan.actions[rng.uniform_int(n)] = MaskAction::kMask;

  for (int i = 0; i < n; ++i)
    if (plan.actions[i] != MaskAction::kKeep) plan.selected.push_back(i);

  uint64_t h = 0x6d61736bULL; // plan fingerprint for freshness checks
  for (int i = 0; i < n; ++i) {
    h = mix64(h, static_cast<uint64_t>(i),
              static_cast<uint64_t>(plan.actions[i]));
    for (const int cat : randomized[i])
      h = mix64(h, static_cast<uint64_t>(cat));
  }
  plan.plan_hash = h;

  // Recovery targets: original categories of the selected atoms.
  int rec_dim = 0;
  for (const auto &b : scheme.atom_blocks) rec_dim += b.width() - 1;
  plan.recovery_targets =
      Tensor(static_cast<int>(plan.selected.size()), rec_dim);
  for (std::size_t r = 0; r < plan.selected.size(); ++r) {
    const auto cats = scheme.atom_categories(mol, plan.selected[r]);
    int offset = 0;
    for (int b = 0; b < n_blocks; ++b) {
      plan.recovery_targets.at(static_cast<int>(r), offset + cats[b]) = 1.0;
      offset += scheme.atom_blocks[b].width() - 1;
    }
  }

  // Corrupted feature matrices.
  Featurized feats = featurize(mol, scheme);
  for (const int i : plan.selected) {
    for (int c = 0; c < scheme.atom_dim(); ++c) feats.atom_feat.at(i, c) = 0.0;
    int offset = 0;
    for (int b = 0; b < n_blocks; ++b) {
      const auto &block = scheme.atom_blocks[b];
      const int idx = plan.actions[i] == MaskAction::kMask
                          ? block.mask_index()
                          : randomized[i][b];
      feats.atom_feat.at(i, offset + idx) = 1.0;
      offset += block.width();
    }
  }
  for (int b = 0; b < mol.n_bonds(); ++b) {
    const BondRecord &bond = mol.bonds[b];
    if (plan.actions[bond.a] == MaskAction::kKeep &&
        plan.actions[bond.b] == MaskAction::kKeep)
      continue;
    for (int c = 0; c < scheme.bond_dim(); ++c) feats.bond_feat.at(b, c) = 0.0;
    int offset = 0;
    for (const auto &block : scheme.bond_blocks) {
      feats.bond_feat.at(b, offset + block.mask_index()) = 1.0;
      offset += block.width();
    }
  }
  return {std::move(plan), build_directed_graph(mol, feats)};
}

} // namespace dgat
