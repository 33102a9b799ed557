// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// SMILES parser for the organic subset plus bracket atoms.
//
// Supported grammar: organic-subset atoms (B C N O P S F Cl Br I), aromatic
// lowercase (b c n o p s, plus se/as in brackets), bracket atoms with
// isotope/H-count/charge, bonds - = # :, branches, ring closures (digit and
// %nn). Stereo markers (/ \ @) are accepted and ignored with a warning.
//
// Aromaticity is taken literally from the notation: lowercase atoms are
// aromatic, a bond between two aromatic atoms defaults to aromatic, and no
// kekulization is attempted. Implicit hydrogens follow standard valence
// rules; for aromatic C/N/P one extra unit of valence is consumed by the
// ring pi system (so benzene carbons get one H and a pyrrole nitrogen must
// be written [nH]), while aromatic O/S/B donate a lone pair and get none.

#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "dgat/common/error.hpp"
#include "dgat/molgraph/molecule.hpp"

namespace dgat {

namespace detail {

inline const std::unordered_set<std::string> &element_table() {
  static const std::unordered_set<std::string> table = {
      "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al",
      "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn",
      "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb",
      "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
      "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm",
      "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta",
      "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At",
      "Rn"};
  return table;
}

// Standard valences used for implicit hydrogen assignment.
inline const std::vector<int> *organic_valences(const std::string &element) {
  static const std::map<std::string, std::vector<int>> table = {
      {"B", {3}},  {"C", {4}},  {"N", {3, 5}}, {"O", {2}},  {"P", {3, 5}},
      {"S", {2, 4, 6}}, {"F", {1}}, {"Cl", {1}}, {"Br", {1}}, {"I", {1}}};
  auto it = table.find(element);
  return it == table.end() ? nullptr : &it->second;
}

// Aromatic C/N/P carry a formal double bond into the pi system.
inline bool aromatic_pi_increment(const std::string &element) {
  return element == "C" || element == "N" || element == "P";
}

class SmilesParser {
public:
  SmilesParser(std::string_view text, std::vector<std::string> *warnings)
      : text_(text), warnings_(warnings) {}

  Molecule run() {
    if (text_.empty()) throw ParseError("empty SMILES", 0);
    while (pos_ < text_.size()) step();
    if (!branch_stack_.empty())
      throw ParseError("unbalanced parenthesis", branch_stack_.back().second);
    if (!ring_open_.empty())
      throw ParseError("unmatched ring-closure digit",
                       ring_open_.begin()->second.offset);
    if (pending_bond_)
      throw ParseError("bond symbol with no following atom",
                       pending_bond_->offset);
    finish();
    return std::move(mol_);
  }

private:
  struct PendingBond {
    char symbol;
    std::size_t offset;
  };
  struct RingOpen {
    int atom;
    char bond_symbol; // 0 when unspecified
    std::size_t offset;
  };

  void warn(const std::string &msg) {
    if (warnings_) warnings_->push_back(msg);
  }

  void step() {
    const char c = text_[pos_];
    if (c == '(') {
      if (prev_atom_ < 0)
        throw ParseError("branch before any atom", pos_);
      branch_stack_.emplace_back(prev_atom_, pos_);
      ++pos_;
    } else if (c == ')') {
      if (branch_stack_.empty())
        throw ParseError("unbalanced parenthesis", pos_);
      if (pending_bond_)
        throw ParseError("bond symbol before ')'", pending_bond_->offset);
      prev_atom_ = branch_stack_.back().first;
      branch_stack_.pop_back();
      ++pos_;
    } else if (c == '-' || c == '=' || c == '#' || c == ':') {
      if (prev_atom_ < 0) throw ParseError("bond before any atom", pos_);
      if (pending_bond_)
        throw ParseError("two consecutive bond symbols", pos_);
      pending_bond_ = PendingBond{c, pos_};
      ++pos_;
    } else if (c == '/' || c == '\\') {
      warn("ignoring stereo bond marker at byte " + std::to_string(pos_));
      if (prev_atom_ < 0) throw ParseError("bond before any atom", pos_);
      if (!pending_bond_) pending_bond_ = PendingBond{'-', pos_};
      ++pos_;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      ring_closure(c - '0', pos_);
      ++pos_;
    } else if (c == '%') {
      if (pos_ + 2 >= text_.size() ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2])))
        throw ParseError("'%' ring closure needs two digits", pos_);
      const int num = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
      ring_closure(num, pos_);
      pos_ += 3;
    } else if (c == '[') {
      add_atom(parse_bracket_atom(), pos_at_token_);
    } else if (c == '.') {
      throw ParseError("disconnected components ('.') are not supported",
                       pos_);
    } else {
      add_atom(parse_organic_atom(), pos_at_token_);
    }
  }

  AtomRecord parse_organic_atom() {
    pos_at_token_ = pos_;
    AtomRecord atom;
    const char c = text_[pos_];
    // Two-letter symbols first.
    if (c == 'C' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'l') {
      atom.element = "Cl";
      pos_ += 2;
      return atom;
    }
    if (c == 'B' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'r') {
      atom.element = "Br";
      pos_ += 2;
      return atom;
    }
    static const std::string uppercase = "BCNOPSFI";
    static const std::string lowercase = "bcnops";
    if (uppercase.find(c) != std::string::npos) {
      atom.element = std::string(1, c);
      ++pos_;
      return atom;
    }
    if (lowercase.find(c) != std::string::npos) {
      atom.element = std::string(1, static_cast<char>(std::toupper(c)));
      atom.aromatic = true;
      ++pos_;
      return atom;
    }
    throw ParseError(std::string("unknown element token '") + c + "'", pos_);
  }

  AtomRecord parse_bracket_atom() {
    pos_at_token_ = pos_;
    const std::size_t open = pos_;
    ++pos_; // '['
    AtomRecord atom;
    atom.h_count_explicit = true;

    // Isotope (accepted, not recorded).
    bool saw_isotope = false;
    while (pos_ < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      saw_isotope = true;
      ++pos_;
    }
    if (saw_isotope)
      warn("ignoring isotope label at byte " + std::to_string(open));

    // Element symbol.
    if (pos_ >= text_.size()) throw ParseError("unterminated bracket", open);
    std::string sym;
    const char c0 = text_[pos_];
    if (std::islower(static_cast<unsigned char>(c0))) {
      // Aromatic symbols allowed in brackets.
      static const std::unordered_set<std::string> arom = {
          "b", "c", "n", "o", "p", "s", "se", "as"};
      std::string two = text_.substr(pos_, 2).size() == 2
                            ? std::string(text_.substr(pos_, 2))
                            : std::string();
      if (arom.count(two)) {
        sym = two;
        pos_ += 2;
      } else if (arom.count(std::string(1, c0))) {
        sym = std::string(1, c0);
        ++pos_;
      } else {
        throw ParseError("unknown element token in bracket", pos_);
      }
      atom.aromatic = true;
      sym[0] = static_cast<char>(std::toupper(sym[0]));
      atom.element = sym;
    } else if (std::isupper(static_cast<unsigned char>(c0))) {
      std::string two;
      if (pos_ + 1 < text_.size() &&
          std::islower(static_cast<unsigned char>(text_[pos_ + 1])))
        two = std::string(text_.substr(pos_, 2));
      if (!two.empty() && element_table().count(two)) {
        atom.element = two;
        pos_ += 2;
      } else if (c0 == 'H') {
        throw ParseError(
            "explicit hydrogen atoms are not supported; use H counts", pos_);
      } else if (element_table().count(std::string(1, c0))) {
        atom.element = std::string(1, c0);
        ++pos_;
      } else {
        throw ParseError("unknown element token in bracket", pos_);
      }
    } else {
      throw ParseError("expected element symbol in bracket", pos_);
    }

    // Chirality (accepted, ignored).
    if (pos_ < text_.size() && text_[pos_] == '@') {
      ++pos_;
      if (pos_ < text_.size() && text_[pos_] == '@') ++pos_;
      warn("ignoring chirality marker at byte " + std::to_string(open));
    }

    // Hydrogen count.
    if (pos_ < text_.size() && text_[pos_] == 'H') {
      ++pos_;
      int count = 1;
      if (pos_ < text_.size() &&
          std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        count = text_[pos_] - '0';
        ++pos_;
      }
      atom.explicit_hydrogens = count;
    }

    // Charge.
    if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
      const char sign_char = text_[pos_];
      const int sign = sign_char == '+' ? 1 : -1;
      int magnitude = 1;
      ++pos_;
      if (pos_ < text_.size() &&
          std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        magnitude = text_[pos_] - '0';
        ++pos_;
        if (pos_ < text_.size() &&
            std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          magnitude = magnitude * 10 + (text_[pos_] - '0');
          ++pos_;
        }
      } else {
        while (pos_ < text_.size() && text_[pos_] == sign_char) {
          ++magnitude;
          ++pos_;
        }
      }
      atom.formal_charge = sign * magnitude;
    }

    // Atom class (accepted, ignored).
    if (pos_ < text_.size() && text_[pos_] == ':') {
      ++pos_;
      if (pos_ >= text_.size() ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_])))
        throw ParseError("atom class expects digits", pos_);
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_])))
        ++pos_;
      warn("ignoring atom class at byte " + std::to_string(open));
    }

    if (pos_ >= text_.size() || text_[pos_] != ']')
      throw ParseError("unterminated bracket", open);
    ++pos_;
    return atom;
  }

  void add_atom(AtomRecord atom, std::size_t offset) {
    const int id = mol_.n_atoms();
    mol_.atoms.push_back(std::move(atom));
    atom_offsets_.push_back(offset);
    if (prev_atom_ >= 0) {
      std::optional<PendingBond> bond = std::exchange(pending_bond_, {});
      add_bond(prev_atom_, id, bond);
    } else if (pending_bond_) {
      throw ParseError("bond before any atom", pending_bond_->offset);
    }
    prev_atom_ = id;
  }

  void ring_closure(int number, std::size_t offset) {
    if (prev_atom_ < 0)
      throw ParseError("ring closure before any atom", offset);
    auto it = ring_open_.find(number);
    if (it == ring_open_.end()) {
      char symbol = 0;
      if (pending_bond_) {
        symbol = pending_bond_->symbol;
        pending_bond_.reset();
      }
      ring_open_[number] = RingOpen{prev_atom_, symbol, offset};
      return;
    }
    const RingOpen open = it->second;
    ring_open_.erase(it);
    char symbol = open.bond_symbol;
    if (pending_bond_) {
      if (symbol != 0 && symbol != pending_bond_->symbol)
        throw ParseError("conflicting ring-closure bond symbols", offset);
      symbol = pending_bond_->symbol;
      pending_bond_.reset();
    }
    if (open.atom == prev_atom_)
      throw ParseError("ring closure forms a self-bond", offset);
    std::optional<PendingBond> bond;
    if (symbol != 0) bond = PendingBond{symbol, offset};
    add_bond(open.atom, prev_atom_, bond);
  }

  void add_bond(int a, int b, const std::optional<PendingBond> &pending) {
    BondRecord bond;
    bond.a = std::min(a, b);
    bond.b = std::max(a, b);
    const bool both_aromatic =
        mol_.atoms[a].aromatic && mol_.atoms[b].aromatic;
    if (!pending) {
      bond.order = both_aromatic ? BondOrder::kAromatic : BondOrder::kSingle;
    } else {
      switch (pending->symbol) {
        case '-': bond.order = BondOrder::kSingle; break;
        case '=': bond.order = BondOrder::kDouble; break;
        case '#': bond.order = BondOrder::kTriple; break;
        case ':':
          if (!both_aromatic)
            throw ParseError("aromatic bond between non-aromatic atoms",
                             pending->offset);
          bond.order = BondOrder::kAromatic;
          break;
        default:
          throw ParseError("unknown bond symbol", pending->offset);
      }
    }
    for (const auto &existing : mol_.bonds)
      if (existing.a == bond.a && existing.b == bond.b)
        throw ParseError("duplicate bond",
                         pending ? pending->offset : pos_);
    mol_.bonds.push_back(bond);
  }

  // Implicit hydrogens, ring perception, conjugation, degrees.
  void finish() {
    const int n = mol_.n_atoms();
    std::vector<int> degree(n, 0);
    std::vector<double> order_sum(n, 0.0);
    std::vector<int> multiple_count(n, 0); // double/triple/aromatic bonds
    for (const auto &bond : mol_.bonds) {
      ++degree[bond.a];
      ++degree[bond.b];
      double order = 1.0;
      if (bond.order == BondOrder::kDouble) order = 2.0;
      if (bond.order == BondOrder::kTriple) order = 3.0;
      if (bond.order == BondOrder::kAromatic) order = 1.0;
      order_sum[bond.a] += order;
      order_sum[bond.b] += order;
      if (bond.order != BondOrder::kSingle) {
        ++multiple_count[bond.a];
        ++multiple_count[bond.b];
      }
    }
    for (int i = 0; i < n; ++i) {
      AtomRecord &atom = mol_.atoms[i];
      atom.degree = degree[i];
      if (atom.h_count_explicit) continue; // bracket atom: H given
      const auto *valences = organic_valences(atom.element);
      if (valences == nullptr)
        throw ParseError("no valence model for element " + atom.element,
                         atom_offsets_[i]);
      int need = static_cast<int>(order_sum[i]);
      if (atom.aromatic && aromatic_pi_increment(atom.element)) ++need;
      int h = -1;
      for (int v : *valences)
        if (v >= need) {
          h = v - need;
          break;
        }
      if (h < 0)
        throw ParseError("valence overflow on " + atom.element,
                         atom_offsets_[i]);
      atom.implicit_hydrogens = h;
    }
    perceive_rings();
    perceive_conjugation();
    mol_.validate();
  }

  // Bridge-finding DFS; a bond is in a ring iff it is not a bridge.
  void perceive_rings() {
    const int n = mol_.n_atoms();
    std::vector<std::vector<std::pair<int, int>>> adj(n); // (neighbor, bond)
    for (int b = 0; b < mol_.n_bonds(); ++b) {
      adj[mol_.bonds[b].a].emplace_back(mol_.bonds[b].b, b);
      adj[mol_.bonds[b].b].emplace_back(mol_.bonds[b].a, b);
    }
    std::vector<int> disc(n, -1), low(n, 0);
    int timer = 0;
    // Iterative DFS: frame = (vertex, parent bond, next edge index).
    struct Frame {
      int vertex;
      int parent_bond;
      std::size_t edge_index;
    };
    for (int start = 0; start < n; ++start) {
      if (disc[start] >= 0) continue;
      std::vector<Frame> stack{{start, -1, 0}};
      disc[start] = low[start] = timer++;
      while (!stack.empty()) {
        Frame &frame = stack.back();
        if (frame.edge_index < adj[frame.vertex].size()) {
          auto [next, bond] = adj[frame.vertex][frame.edge_index++];
          if (bond == frame.parent_bond) continue;
          if (disc[next] >= 0) {
            low[frame.vertex] = std::min(low[frame.vertex], disc[next]);
          } else {
            disc[next] = low[next] = timer++;
            stack.push_back({next, bond, 0});
          }
        } else {
          const int v = frame.vertex;
          const int pb = frame.parent_bond;
          stack.pop_back();
          if (!stack.empty()) {
            const int parent = stack.back().vertex;
            low[parent] = std::min(low[parent], low[v]);
            if (low[v] > disc[parent]) bridge_[pb] = true;
          }
        }
      }
    }
    for (int b = 0; b < mol_.n_bonds(); ++b) {
      const bool ring = !bridge_.count(b);
      mol_.bonds[b].in_ring = ring;
      if (ring) {
        mol_.atoms[mol_.bonds[b].a].in_ring = true;
        mol_.atoms[mol_.bonds[b].b].in_ring = true;
      }
    }
  }

  // A bond is conjugated if it is aromatic, or if it is a single bond
  // bridging the pi system: each endpoint must carry a multiple/aromatic
  // bond elsewhere or be a lone-pair donor (N/O/S) next to one. Multiple
  // bonds adjacent to a conjugated bond join the system; an isolated
  // multiple bond (plain alkene, allene) stays unconjugated.
  void perceive_conjugation() {
    const int nb = mol_.n_bonds();
    auto pi_elsewhere = [&](int atom, int self) {
      for (int b = 0; b < nb; ++b) {
        if (b == self) continue;
        const auto &bond = mol_.bonds[b];
        if (bond.a != atom && bond.b != atom) continue;
        if (bond.order != BondOrder::kSingle) return true;
      }
      return false;
    };
    auto lone_pair_donor = [&](int atom) {
      const std::string &el = mol_.atoms[atom].element;
      return (el == "N" || el == "O" || el == "S") &&
             mol_.atoms[atom].formal_charge <= 0;
    };
    for (int b = 0; b < nb; ++b) {
      auto &bond = mol_.bonds[b];
      if (bond.order == BondOrder::kAromatic) {
        bond.conjugated = true;
        continue;
      }
      if (bond.order != BondOrder::kSingle) {
        bond.conjugated = false; // may join via the adjacency pass below
        continue;
      }
      const bool pa = pi_elsewhere(bond.a, b);
      const bool pb = pi_elsewhere(bond.b, b);
      bond.conjugated = (pa || pb) && (pa || lone_pair_donor(bond.a)) &&
                        (pb || lone_pair_donor(bond.b));
    }
    std::vector<bool> extra(nb, false);
    for (int b = 0; b < nb; ++b) {
      if (mol_.bonds[b].order == BondOrder::kSingle || mol_.bonds[b].conjugated)
        continue;
      for (int other = 0; other < nb; ++other) {
        if (other == b || !mol_.bonds[other].conjugated) continue;
        const auto &x = mol_.bonds[b];
        const auto &y = mol_.bonds[other];
        if (x.a == y.a || x.a == y.b || x.b == y.a || x.b == y.b) {
          extra[b] = true;
          break;
        }
      }
    }
    for (int b = 0; b < nb; ++b)
      if (extra[b]) mol_.bonds[b].conjugated = true;
  }

  std::string_view text_;
  std::vector<std::string> *warnings_;
  std::size_t pos_ = 0;
  std::size_t pos_at_token_ = 0;
  Molecule mol_;
  std::vector<std::size_t> atom_offsets_;
  int prev_atom_ = -1;
  std::optional<PendingBond> pending_bond_;
  std::vector<std::pair<int, std::size_t>> branch_stack_; // (atom, '(' offset)
  std::map<int, RingOpen> ring_open_;
  std::map<int, bool> bridge_;
};

} // namespace detail

inline Molecule parse_smiles(std::string_view text,
                             std::vector<std::string> *warnings = nullptr) {
  return detail::SmilesParser(text, warnings).run();
}

} // namespace dgat
