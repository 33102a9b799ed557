// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scaffold-based dataset partitioning.
//
// Molecules sharing a Bemis-Murcko scaffold always land in the same
// partition, so the test set contains only unseen scaffolds. Groups are
// placed greedily (largest first) into train, then valid, then test;
// equal-size groups are shuffled with the seed so the tie order is not an
// artifact of key encoding.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "dgat/common/error.hpp"
#include "dgat/common/rng.hpp"
#include "dgat/molgraph/scaffold.hpp"
#include "dgat/pipeline/dataset.hpp"

namespace dgat {

enum class Partition : uint8_t { kTrain, kValid, kTest };

inline const char *partition_name(Partition p) {
  switch (p) {
  case Partition::kTrain: return "train";
  case Partition::kValid: return "valid";
  default: return "test";
  }
}

inline Partition partition_from_name(const std::string &name) {
  if (name == "train") return Partition::kTrain;
  if (name == "valid") return Partition::kValid;
  if (name == "test") return Partition::kTest;
  throw ConfigError("unknown partition: " + name);
}

struct SplitAssignment {
  std::vector<Partition> partition; // per record
  std::vector<ScaffoldKey> keys;    // per record (empty when imported)
};

inline SplitAssignment scaffold_split(const Dataset &ds,
                                      double train_frac = 0.8,
                                      double valid_frac = 0.1,
                                      uint64_t seed = 0) {
  if (!(train_frac > 0.0) || !(valid_frac > 0.0) ||
      train_frac + valid_frac >= 1.0)
    throw ConfigError("split fractions must be positive and sum below 1");
  const int n = ds.size();
  SplitAssignment out;
  out.partition.assign(n, Partition::kTrain);
  out.keys.reserve(n);
  std::map<ScaffoldKey, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) {
    ScaffoldKey key = murcko_scaffold(ds.records[i].mol);
    groups[key].push_back(i);
    out.keys.push_back(std::move(key));
  }
  if (groups.size() < 3)
    throw DataError("scaffold split needs at least 3 scaffold groups, got " +
                    std::to_string(groups.size()));

  struct Group {
    const ScaffoldKey *key;
    const std::vector<int> *members;
  };
  std::vector<Group> order;
  order.reserve(groups.size());
  for (const auto &[key, members] : groups) order.push_back({&key, &members});
  std::sort(order.begin(), order.end(), [](const Group &a, const Group &b) {
    if (a.members->size() != b.members->size())
      return a.members->size() > b.members->size();
    return *a.key < *b.key;
  });
  // Shuffle runs of equal-size groups so ties don't follow key order.
  Rng rng(mix64(seed, 0x5ca77001dULL));
  std::size_t run_start = 0;
  for (std::size_t i = 1; i <= order.size(); ++i) {
    if (i == order.size() ||
        order[i].members->size() != order[run_start].members->size()) {
      for (std::size_t j = i - 1; j > run_start; --j) {
        const std::size_t k = run_start + rng.uniform_int(j - run_start + 1);
        std::swap(order[j], order[k]);
      }
      run_start = i;
    }
  }

  const double train_cutoff = train_frac * n;
  const double valid_cutoff = (train_frac + valid_frac) * n;
  std::size_t n_train = 0, n_valid = 0;
  for (const Group &g : order) {
    const std::size_t size = g.members->size();
    Partition p;
    if (n_train + size > train_cutoff) {
      if (n_train + n_valid + size > valid_cutoff) {
        p = Partition::kTest;
      } else {
        p = Partition::kValid;
        n_valid += size;
      }
    } else {
      p = Partition::kTrain;
      n_train += size;
    }
    for (int idx : *g.members) out.partition[idx] = p;
  }
  return out;
}

inline nlohmann::json split_to_json(const SplitAssignment &split) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < split.partition.size(); ++i)
    j[std::to_string(i)] = partition_name(split.partition[i]);
  return j;
}

inline SplitAssignment split_from_json(const nlohmann::json &j,
                                       int n_records) {
  SplitAssignment out;
  out.partition.assign(n_records, Partition::kTrain);
  if (static_cast<int>(j.size()) != n_records)
    throw DataError("split file covers " + std::to_string(j.size()) +
                    " records, dataset has " + std::to_string(n_records));
  for (auto it = j.begin(); it != j.end(); ++it) {
    const int idx = std::stoi(it.key());
    if (idx < 0 || idx >= n_records)
      throw DataError("split file index out of range: " + it.key());
    out.partition[idx] = partition_from_name(it.value().get<std::string>());
  }
  return out;
}

} // namespace dgat
