// Copyright 2026 The TRC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "trc/checkpoint.h"

#include <zlib.h>

#include <bit>
#include <cstring>

#include "trc/config_io.h"
#include "trc/errors.h"

namespace trc {
namespace {

constexpr char kMagic[8] = {'T', 'R', 'C', 'C', 'K', 'P', 'T', '1'};

void AppendLe(std::string& out, uint64_t value, int bytes) {
  for (int i = 0; i < bytes; ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

uint64_t ReadLe(const std::string& in, size_t pos, int bytes) {
  uint64_t value = 0;
  for (int i = 0; i < bytes; ++i) {
    value |= static_cast<uint64_t>(static_cast<unsigned char>(in[pos + i]))
             << (8 * i);
  }
  return value;
}

uint32_t Crc32(const std::string& data) {
  return static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data.data()),
            static_cast<uInt>(data.size())));
}

}  // namespace

std::string SerializeCheckpoint(const TrcModel& model,
                                const TrainConfig& train_config,
                                const std::vector<MetricsRecord>& history) {
  std::string blob;
  Json params = Json::array();
  for (const NamedTensor& nt : model.params().Named()) {
    params.push_back({{"name", nt.name},
                      {"shape", nt.tensor.shape()},
                      {"offset", blob.size()},
                      {"dtype", "float32"}});
    for (double v : nt.tensor.data()) {
      AppendLe(blob, std::bit_cast<uint32_t>(static_cast<float>(v)), 4);
    }
  }
  Json manifest;
  manifest["format_version"] = kCheckpointFormatVersion;
  manifest["problem"] = ToJson(model.problem());
  manifest["trc_config"] = ToJson(model.config());
  manifest["train_config"] = ToJson(train_config);
  manifest["normalizer"] = ToJson(model.normalizer());
  manifest["parameters"] = params;
  manifest["blob_bytes"] = blob.size();
  manifest["crc32"] = Crc32(blob);
  Json hist = Json::array();
  for (const MetricsRecord& r : history) hist.push_back(ToJson(r));
  manifest["metrics_history"] = hist;

  const std::string text = manifest.dump();
  std::string out(kMagic, sizeof(kMagic));
  AppendLe(out, text.size(), 8);
  out += text;
  out += blob;
  return out;
}

Checkpoint ParseCheckpoint(const std::string& bytes,
                           const std::string& origin) {
  const std::string name = origin.empty() ? "checkpoint" : origin;
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw IoError(name + ": not a checkpoint file");
  }
  const uint64_t manifest_len = ReadLe(bytes, 8, 8);
  if (manifest_len > bytes.size() - 16) {
    throw IoError(name + ": truncated manifest");
  }
  Json manifest;
  try {
    manifest = Json::parse(bytes.substr(16, manifest_len));
  } catch (const Json::exception& e) {
    throw IoError(name + ": invalid manifest: " + e.what());
  }
  const std::string blob = bytes.substr(16 + manifest_len);
  try {
    if (manifest.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw IoError(name + ": unsupported checkpoint version");
    }
    if (manifest.at("blob_bytes").get<uint64_t>() != blob.size()) {
      throw IoError(name + ": parameter blob has the wrong size");
    }
    if (manifest.at("crc32").get<uint32_t>() != Crc32(blob)) {
      throw IoError(name + ": checksum mismatch");
    }
    const ControlProblem problem = ProblemFromJson(manifest.at("problem"));
    const TrcConfig config = TrcConfigFromJson(manifest.at("trc_config"));
    const Normalizer normalizer =
        NormalizerFromJson(manifest.at("normalizer"));
    Checkpoint ckpt{TrcModel(problem, config, normalizer, 0),
                    TrainConfigFromJson(manifest.at("train_config")),
                    {}};
    std::vector<NamedTensor> named = ckpt.model.params().Named();
    const Json& descriptors = manifest.at("parameters");
    if (descriptors.size() != named.size()) {
      throw IoError(name + ": parameter list does not match the model");
    }
    uint64_t expected_offset = 0;
    for (size_t i = 0; i < named.size(); ++i) {
      const Json& d = descriptors[i];
      Tensor& t = named[i].tensor;
      if (d.at("name").get<std::string>() != named[i].name ||
          d.at("shape").get<Shape>() != t.shape() ||
          d.at("dtype").get<std::string>() != "float32") {
        throw IoError(name + ": parameter '" + d.at("name").get<std::string>() +
                      "' does not match the model layout");
      }
      const uint64_t offset = d.at("offset").get<uint64_t>();
      if (offset != expected_offset) {
        throw IoError(name + ": parameter offsets are not contiguous");
      }
      std::span<double> out = t.mutable_data();
      for (size_t k = 0; k < out.size(); ++k) {
        const uint32_t raw = static_cast<uint32_t>(ReadLe(blob, offset + 4 * k, 4));
        out[k] = static_cast<double>(std::bit_cast<float>(raw));
      }
      expected_offset = offset + 4 * out.size();
    }
    if (expected_offset != blob.size()) {
      throw IoError(name + ": trailing bytes after the parameters");
    }
    for (const Json& r : manifest.at("metrics_history")) {
      ckpt.history.push_back(MetricsRecordFromJson(r));
    }
    return ckpt;
  } catch (const Json::exception& e) {
    throw IoError(name + ": malformed manifest: " + e.what());
  }
}

void SaveCheckpoint(const std::string& path, const TrcModel& model,
                    const TrainConfig& train_config,
                    const std::vector<MetricsRecord>& history) {
  WriteFileAtomic(path, SerializeCheckpoint(model, train_config, history));
}

Checkpoint LoadCheckpoint(const std::string& path) {
  return ParseCheckpoint(ReadTextFile(path), path);
}

}  // namespace trc
