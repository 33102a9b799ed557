// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Checkpoint container:
//   bytes 0-7   magic "DGATCKPT"
//   bytes 8-15  manifest length, u64 little-endian
//   manifest    JSON: format version, feature scheme (full copy + hash),
//               model config, task count, optional task metadata, and a
//               tensor table of {name, rows, cols, offset} entries
//   payload     all tensors as row-major f32, little-endian, in table order
//
// Tensors are stored f32 to halve size; training keeps f64 internally, so
// code that must agree bit-for-bit with a written checkpoint rounds its
// parameters through f32 first (round_through_f32).

#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "dgat/common/error.hpp"
#include "dgat/common/io.hpp"
#include "dgat/model/params.hpp"

namespace dgat {

inline constexpr char kCheckpointMagic[8] = {'D', 'G', 'A', 'T',
                                             'C', 'K', 'P', 'T'};
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::json manifest;
  std::map<std::string, Tensor> tensors;
};

// Serializes params (+ caller metadata, e.g. task names or label
// standardization) and writes atomically.
inline void save_checkpoint(const std::string &path, ModelParams &params,
                            const nlohmann::json &extra = {}) {
  nlohmann::json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["feature_scheme"] = params.scheme.to_json();
  manifest["feature_scheme_hash"] = params.scheme.hash_hex();
  manifest["model"] = params.config.to_json();
  manifest["n_tasks"] = params.n_tasks;
  if (!extra.is_null() && !extra.empty())
    for (auto it = extra.begin(); it != extra.end(); ++it)
      manifest[it.key()] = it.value();

  nlohmann::json table = nlohmann::json::array();
  std::vector<float> payload;
  visit_params(params, [&](const std::string &name, Tensor &t) {
    table.push_back({{"name", name},
                     {"rows", t.rows()},
                     {"cols", t.cols()},
                     {"offset", payload.size()}});
    for (double v : t.data()) payload.push_back(static_cast<float>(v));
  });
  manifest["tensors"] = std::move(table);

  const std::string manifest_str = manifest.dump();
  std::string bytes;
  bytes.reserve(16 + manifest_str.size() + payload.size() * 4);
  bytes.append(kCheckpointMagic, 8);
  const uint64_t len = manifest_str.size();
  for (int i = 0; i < 8; ++i)
    bytes.push_back(static_cast<char>((len >> (8 * i)) & 0xff));
  bytes += manifest_str;
  const std::size_t data_start = bytes.size();
  bytes.resize(data_start + payload.size() * 4);
  std::memcpy(bytes.data() + data_start, payload.data(), payload.size() * 4);
  write_file_atomic(path, bytes);
}

inline Checkpoint load_checkpoint(const std::string &path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
    throw CompatError("not a checkpoint file: " + path);
  uint64_t len = 0;
  for (int i = 0; i < 8; ++i)
    len |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[8 + i]))
           << (8 * i);
  if (16 + len > bytes.size())
    throw CompatError("checkpoint manifest truncated: " + path);
  Checkpoint ckpt;
  try {
    ckpt.manifest = nlohmann::json::parse(bytes.substr(16, len));
  } catch (const nlohmann::json::exception &e) {
    throw CompatError(std::string("checkpoint manifest unreadable: ") +
                      e.what());
  }
  if (ckpt.manifest.value("format_version", -1) != kCheckpointVersion)
    throw CompatError("unsupported checkpoint format version");
  const std::size_t data_start = 16 + len;
  const std::size_t n_floats = (bytes.size() - data_start) / 4;
  for (const auto &entry : ckpt.manifest.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const int rows = entry.at("rows").get<int>();
    const int cols = entry.at("cols").get<int>();
    const std::size_t offset = entry.at("offset").get<std::size_t>();
    const std::size_t count = static_cast<std::size_t>(rows) * cols;
    if (offset + count > n_floats)
      throw CompatError("checkpoint payload truncated at tensor " + name);
    Tensor t(rows, cols);
    for (std::size_t i = 0; i < count; ++i) {
      float f;
      std::memcpy(&f, bytes.data() + data_start + (offset + i) * 4, 4);
      t.data()[i] = static_cast<double>(f);
    }
    ckpt.tensors.emplace(name, std::move(t));
  }
  return ckpt;
}

// Rebuilds ModelParams exactly as saved. Every tensor in the skeleton must
// be present with the right shape.
inline ModelParams params_from_checkpoint(const Checkpoint &ckpt) {
  const ModelConfig config = ModelConfig::from_json(ckpt.manifest.at("model"));
  FeatureScheme scheme =
      FeatureScheme::from_json(ckpt.manifest.at("feature_scheme"));
  if (scheme.hash_hex() !=
      ckpt.manifest.at("feature_scheme_hash").get<std::string>())
    throw CompatError("checkpoint feature scheme does not match its hash");
  const int n_tasks = ckpt.manifest.at("n_tasks").get<int>();
  ModelParams params = ModelParams::init(config, std::move(scheme), n_tasks,
                                         /*seed=*/0);
  visit_params(params, [&](const std::string &name, Tensor &t) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end())
      throw CompatError("checkpoint is missing tensor " + name);
    if (!it->second.same_shape(t))
      throw CompatError("checkpoint tensor " + name + " has shape " +
                        it->second.shape_str() + ", expected " +
                        t.shape_str());
    t = it->second;
  });
  return params;
}

// Warm start: copies tensors whose name and shape match (the backbone),
// leaving the rest (typically fresh task heads) at their initialization.
// Returns {copied, skipped} counts.
inline std::pair<int, int> load_matching_params(ModelParams &params,
                                                const Checkpoint &ckpt) {
  int copied = 0, skipped = 0;
  visit_params(params, [&](const std::string &name, Tensor &t) {
    auto it = ckpt.tensors.find(name);
    if (it != ckpt.tensors.end() && it->second.same_shape(t)) {
      t = it->second;
      ++copied;
    } else {
      ++skipped;
    }
  });
  return {copied, skipped};
}

// Rounds every parameter through f32 so in-memory values equal what a
// save/load cycle would produce.
inline void round_through_f32(ModelParams &params) {
  visit_params(params, [](const std::string &, Tensor &t) {
    for (double &v : t.data()) v = static_cast<double>(static_cast<float>(v));
  });
}

} // namespace dgat
