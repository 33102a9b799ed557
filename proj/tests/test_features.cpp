// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
//
// One-hot featurization: block layout, vocabulary fallbacks, scheme
// serialization and the pinned scheme hash that checkpoints depend on.

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dgat/common/error.hpp"
#include "dgat/molgraph/features.hpp"
#include "dgat/molgraph/smiles.hpp"

using dgat::FeatureScheme;
using dgat::featurize;
using dgat::Molecule;
using dgat::parse_smiles;

TEST_CASE("default scheme dimensions and hash are pinned") {
  FeatureScheme scheme = FeatureScheme::defaults();
  scheme.validate();
  CHECK(scheme.atom_dim() == 42);
  CHECK(scheme.bond_dim() == 11);
  // checkpoints store this hash; changing the vocabulary breaks compatibility
  CHECK(scheme.hash_hex() == "99472dd920dd59e5");
}

TEST_CASE("every block carries exactly one active category") {
  FeatureScheme scheme = FeatureScheme::defaults();
  for (const char *smi :
       {"CCO", "c1ccccc1", "CC(=O)[O-]", "C[N+](C)(C)C", "c1cc[nH]c1",
        "CS(=O)(=O)C", "C1CCC2CCCCC2C1", "[NH4+]"}) {
    Molecule mol = parse_smiles(smi);
    dgat::Featurized feats = featurize(mol, scheme);
    REQUIRE(feats.atom_feat.rows() == mol.n_atoms());
    REQUIRE(feats.atom_feat.cols() == 42);
    REQUIRE(feats.bond_feat.rows() == mol.n_bonds());
    REQUIRE(feats.bond_feat.cols() == 11);
    for (int i = 0; i < mol.n_atoms(); ++i) {
      int offset = 0;
      for (const auto &block : scheme.atom_blocks) {
        double sum = 0.0;
        for (int k = 0; k < block.width(); ++k)
          sum += feats.atom_feat.at(i, offset + k);
        CHECK(sum == 1.0);
        // MASK stays off in plain featurization
        CHECK(feats.atom_feat.at(i, offset + block.mask_index()) == 0.0);
        offset += block.width();
      }
    }
    for (int b = 0; b < mol.n_bonds(); ++b) {
      int offset = 0;
      for (const auto &block : scheme.bond_blocks) {
        double sum = 0.0;
        for (int k = 0; k < block.width(); ++k)
          sum += feats.bond_feat.at(b, offset + k);
        CHECK(sum == 1.0);
        CHECK(feats.bond_feat.at(b, offset + block.mask_index()) == 0.0);
        offset += block.width();
      }
    }
  }
}

TEST_CASE("categories land at the documented positions") {
  FeatureScheme scheme = FeatureScheme::defaults();
  Molecule pyridine = parse_smiles("c1ccncc1");
  const std::vector<int> n_cat = scheme.atom_categories(pyridine, 3);
  // element N, degree 2, charge 0, 0 hydrogens, aromatic, in ring
  CHECK(n_cat == std::vector<int>{2, 2, 2, 0, 1, 1});

  Molecule acetate = parse_smiles("CC(=O)[O-]");
  const std::vector<int> o_cat = scheme.atom_categories(acetate, 3);
  CHECK(o_cat[0] == 3);  // element O
  CHECK(o_cat[2] == 1);  // charge -1
  const std::vector<int> carbonyl = scheme.bond_categories(acetate, 1);
  CHECK(carbonyl[0] == 1);  // double
  CHECK(carbonyl[2] == 1);  // conjugated

  Molecule benzene = parse_smiles("c1ccccc1");
  const std::vector<int> ring_bond = scheme.bond_categories(benzene, 0);
  CHECK(ring_bond == std::vector<int>{3, 1, 1});  // aromatic, in ring, conjugated
}

TEST_CASE("out-of-vocabulary values fall back to OTHER") {
  FeatureScheme scheme = FeatureScheme::defaults();
  const int other_el = scheme.atom_blocks[0].other_index();
  REQUIRE(other_el == 12);

  Molecule te = parse_smiles("[Te]");
  CHECK(scheme.atom_categories(te, 0)[0] == other_el);

  // degree 6 exceeds the 0..5 vocabulary
  Molecule sf6 = parse_smiles("FS(F)(F)(F)(F)F");
  CHECK(scheme.atom_categories(sf6, 1)[1] == scheme.atom_blocks[1].other_index());

  // hydrogen count 5 exceeds 0..4
  Molecule ch5 = parse_smiles("[CH5]");
  CHECK(scheme.atom_categories(ch5, 0)[3] == scheme.atom_blocks[3].other_index());

  // charge 3 exceeds -2..2
  Molecule ti = parse_smiles("[Ti+3]");
  CHECK(scheme.atom_categories(ti, 0)[2] == scheme.atom_blocks[2].other_index());

  // blocks without OTHER refuse out-of-vocabulary labels
  dgat::AtomBlock strict{dgat::AtomBlockKind::kAromatic, {"false", "true", "MASK"}};
  CHECK_THROWS_AS(strict.category_index("maybe", "aromatic"), dgat::DataError);
}

TEST_CASE("scheme serialization round-trips and is hash-stable") {
  FeatureScheme scheme = FeatureScheme::defaults();
  nlohmann::json j = scheme.to_json();
  FeatureScheme back = FeatureScheme::from_json(j);
  CHECK(back.hash() == scheme.hash());
  CHECK(back.atom_dim() == scheme.atom_dim());
  CHECK(back.bond_dim() == scheme.bond_dim());

  // dropping the trailing MASK must be rejected
  nlohmann::json bad = j;
  bad["atom_blocks"][0]["categories"].erase(
      bad["atom_blocks"][0]["categories"].size() - 1);
  CHECK_THROWS_AS(FeatureScheme::from_json(bad), dgat::ConfigError);

  // any vocabulary change moves the hash
  nlohmann::json tweaked = j;
  tweaked["atom_blocks"][0]["categories"][0] = "Al";
  CHECK(FeatureScheme::from_json(tweaked).hash() != scheme.hash());
}

TEST_CASE("zero-bond molecules featurize to empty bond matrices") {
  FeatureScheme scheme = FeatureScheme::defaults();
  Molecule mol = parse_smiles("[NH4+]");
  dgat::Featurized feats = featurize(mol, scheme);
  CHECK(feats.atom_feat.rows() == 1);
  CHECK(feats.bond_feat.rows() == 0);
  CHECK(feats.bond_feat.cols() == 11);
}
