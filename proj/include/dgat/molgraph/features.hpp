// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// One-hot featurization of atoms and bonds. A feature vector is a
// concatenation of blocks; each block is a small categorical vocabulary
// plus a trailing MASK category (used by masked pretraining) and, where
// values can fall outside the vocabulary, an OTHER category that absorbs
// them. Block order and vocabulary order are normative: checkpoints carry
// the scheme hash and refuse to run against a different scheme.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dgat/common/error.hpp"
#include "dgat/common/rng.hpp"
#include "dgat/molgraph/molecule.hpp"
#include "dgat/tensor/tensor.hpp"

#include "json.hpp"

namespace dgat {

enum class AtomBlockKind {
  kElement,
  kDegree,
  kFormalCharge,
  kHCount,
  kAromatic,
  kInRing,
};

enum class BondBlockKind {
  kOrder,
  kInRing,
  kConjugated,
};

namespace detail {

inline const char *atom_block_kind_name(AtomBlockKind kind) {
  switch (kind) {
    case AtomBlockKind::kElement: return "element";
    case AtomBlockKind::kDegree: return "degree";
    case AtomBlockKind::kFormalCharge: return "formal_charge";
    case AtomBlockKind::kHCount: return "h_count";
    case AtomBlockKind::kAromatic: return "aromatic";
    case AtomBlockKind::kInRing: return "in_ring";
  }
  return "?";
}

inline const char *bond_block_kind_name(BondBlockKind kind) {
  switch (kind) {
    case BondBlockKind::kOrder: return "order";
    case BondBlockKind::kInRing: return "in_ring";
    case BondBlockKind::kConjugated: return "conjugated";
  }
  return "?";
}

inline AtomBlockKind atom_block_kind_from_name(const std::string &name) {
  static const std::map<std::string, AtomBlockKind> table = {
      {"element", AtomBlockKind::kElement},
      {"degree", AtomBlockKind::kDegree},
      {"formal_charge", AtomBlockKind::kFormalCharge},
      {"h_count", AtomBlockKind::kHCount},
      {"aromatic", AtomBlockKind::kAromatic},
      {"in_ring", AtomBlockKind::kInRing}};
  auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown atom block kind: " + name);
  return it->second;
}

inline BondBlockKind bond_block_kind_from_name(const std::string &name) {
  static const std::map<std::string, BondBlockKind> table = {
      {"order", BondBlockKind::kOrder},
      {"in_ring", BondBlockKind::kInRing},
      {"conjugated", BondBlockKind::kConjugated}};
  auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown bond block kind: " + name);
  return it->second;
}

} // namespace detail

template <typename Kind>
struct FeatureBlock {
  Kind kind;
  // Category labels in normative order. "MASK" must be last; "OTHER", when
  // present, absorbs out-of-vocabulary values.
  std::vector<std::string> categories;

  int width() const { return static_cast<int>(categories.size()); }
  int mask_index() const { return width() - 1; }

  int other_index() const {
    for (int i = 0; i < width(); ++i)
      if (categories[i] == "OTHER") return i;
    return -1;
  }

  // Index of `label`, falling back to OTHER.
  int category_index(const std::string &label, const char *what) const {
    for (int i = 0; i + 1 < width(); ++i)
      if (categories[i] == label) return i;
    const int other = other_index();
    if (other >= 0) return other;
    throw DataError(std::string("value '") + label +
                    "' outside vocabulary of block without OTHER: " + what);
  }

  void validate(const char *what) const {
    if (categories.size() < 2)
      throw ConfigError(std::string("feature block too small: ") + what);
    if (categories.back() != "MASK")
      throw ConfigError(std::string("feature block must end with MASK: ") +
                        what);
  }
};

using AtomBlock = FeatureBlock<AtomBlockKind>;
using BondBlock = FeatureBlock<BondBlockKind>;

struct FeatureScheme {
  std::vector<AtomBlock> atom_blocks;
  std::vector<BondBlock> bond_blocks;

  int atom_dim() const {
    int d = 0;
    for (const auto &block : atom_blocks) d += block.width();
    return d;
  }
  int bond_dim() const {
    int d = 0;
    for (const auto &block : bond_blocks) d += block.width();
    return d;
  }

  void validate() const {
    if (atom_blocks.empty() || bond_blocks.empty())
      throw ConfigError("feature scheme needs atom and bond blocks");
    for (const auto &block : atom_blocks)
      block.validate(detail::atom_block_kind_name(block.kind));
    for (const auto &block : bond_blocks)
      block.validate(detail::bond_block_kind_name(block.kind));
  }

  static FeatureScheme defaults() {
    FeatureScheme s;
    s.atom_blocks.push_back(
        {AtomBlockKind::kElement,
         {"B", "C", "N", "O", "F", "Si", "P", "S", "Cl", "Se", "Br", "I",
          "OTHER", "MASK"}});
    s.atom_blocks.push_back(
        {AtomBlockKind::kDegree, {"0", "1", "2", "3", "4", "5", "OTHER", "MASK"}});
    s.atom_blocks.push_back(
        {AtomBlockKind::kFormalCharge,
         {"-2", "-1", "0", "1", "2", "OTHER", "MASK"}});
    s.atom_blocks.push_back(
        {AtomBlockKind::kHCount, {"0", "1", "2", "3", "4", "OTHER", "MASK"}});
    s.atom_blocks.push_back(
        {AtomBlockKind::kAromatic, {"false", "true", "MASK"}});
    s.atom_blocks.push_back({AtomBlockKind::kInRing, {"false", "true", "MASK"}});
    s.bond_blocks.push_back(
        {BondBlockKind::kOrder,
         {"single", "double", "triple", "aromatic", "MASK"}});
    s.bond_blocks.push_back({BondBlockKind::kInRing, {"false", "true", "MASK"}});
    s.bond_blocks.push_back(
        {BondBlockKind::kConjugated, {"false", "true", "MASK"}});
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["atom_blocks"] = nlohmann::json::array();
    for (const auto &block : atom_blocks)
      j["atom_blocks"].push_back(
          {{"kind", detail::atom_block_kind_name(block.kind)},
           {"categories", block.categories}});
    j["bond_blocks"] = nlohmann::json::array();
    for (const auto &block : bond_blocks)
      j["bond_blocks"].push_back(
          {{"kind", detail::bond_block_kind_name(block.kind)},
           {"categories", block.categories}});
    return j;
  }

  static FeatureScheme from_json(const nlohmann::json &j) {
    FeatureScheme s;
    for (const auto &jb : j.at("atom_blocks")) {
      AtomBlock block;
      block.kind = detail::atom_block_kind_from_name(jb.at("kind"));
      block.categories = jb.at("categories").get<std::vector<std::string>>();
      s.atom_blocks.push_back(std::move(block));
    }
    for (const auto &jb : j.at("bond_blocks")) {
      BondBlock block;
      block.kind = detail::bond_block_kind_from_name(jb.at("kind"));
      block.categories = jb.at("categories").get<std::vector<std::string>>();
      s.bond_blocks.push_back(std::move(block));
    }
    s.validate();
    return s;
  }

  // FNV-1a over the canonical JSON serialization.
  std::uint64_t hash() const {
    const std::string text = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  std::string hash_hex() const {
    static const char *digits = "0123456789abcdef";
    std::uint64_t h = hash();
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
      out[i] = digits[h & 0xf];
      h >>= 4;
    }
    return out;
  }

  // Category index of atom i for each atom block, in block order.
  std::vector<int> atom_categories(const Molecule &mol, int i) const {
    const AtomRecord &atom = mol.atoms[i];
    std::vector<int> out;
    out.reserve(atom_blocks.size());
    for (const auto &block : atom_blocks) {
      std::string label;
      switch (block.kind) {
        case AtomBlockKind::kElement: label = atom.element; break;
        case AtomBlockKind::kDegree: label = std::to_string(atom.degree); break;
        case AtomBlockKind::kFormalCharge:
          label = std::to_string(atom.formal_charge);
          break;
        case AtomBlockKind::kHCount:
          label = std::to_string(atom.total_hydrogens());
          break;
        case AtomBlockKind::kAromatic:
          label = atom.aromatic ? "true" : "false";
          break;
        case AtomBlockKind::kInRing:
          label = atom.in_ring ? "true" : "false";
          break;
      }
      out.push_back(block.category_index(
          label, detail::atom_block_kind_name(block.kind)));
    }
    return out;
  }

  std::vector<int> bond_categories(const Molecule &mol, int b) const {
    const BondRecord &bond = mol.bonds[b];
    std::vector<int> out;
    out.reserve(bond_blocks.size());
    for (const auto &block : bond_blocks) {
      std::string label;
      switch (block.kind) {
        case BondBlockKind::kOrder:
          switch (bond.order) {
            case BondOrder::kSingle: label = "single"; break;
            case BondOrder::kDouble: label = "double"; break;
            case BondOrder::kTriple: label = "triple"; break;
            case BondOrder::kAromatic: label = "aromatic"; break;
          }
          break;
        case BondBlockKind::kInRing:
          label = bond.in_ring ? "true" : "false";
          break;
        case BondBlockKind::kConjugated:
          label = bond.conjugated ? "true" : "false";
          break;
      }
      out.push_back(block.category_index(
          label, detail::bond_block_kind_name(block.kind)));
    }
    return out;
  }
};

namespace detail {

template <typename Kind>
inline void write_onehot_row(double *row, const std::vector<FeatureBlock<Kind>> &blocks,
                             const std::vector<int> &categories) {
  int offset = 0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    row[offset + categories[k]] = 1.0;
    offset += blocks[k].width();
  }
}

} // namespace detail

struct Featurized {
  Tensor atom_feat; // n_atoms x atom_dim
  Tensor bond_feat; // n_bonds x bond_dim (undirected)
};

// One 1 per block; MASK categories are all zero here.
inline Featurized featurize(const Molecule &mol, const FeatureScheme &scheme) {
  Featurized out;
  out.atom_feat = Tensor(mol.n_atoms(), scheme.atom_dim());
  out.bond_feat = Tensor(mol.n_bonds(), scheme.bond_dim());
  for (int i = 0; i < mol.n_atoms(); ++i)
    detail::write_onehot_row(out.atom_feat.row_ptr(i), scheme.atom_blocks,
                             scheme.atom_categories(mol, i));
  for (int b = 0; b < mol.n_bonds(); ++b)
    detail::write_onehot_row(out.bond_feat.row_ptr(b), scheme.bond_blocks,
                             scheme.bond_categories(mol, b));
  return out;
}

} // namespace dgat
