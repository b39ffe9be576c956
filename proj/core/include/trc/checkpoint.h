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

#ifndef TRC_CHECKPOINT_H_
#define TRC_CHECKPOINT_H_

#include <string>
#include <vector>

#include "trc/model.h"
#include "trc/training.h"

namespace trc {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  TrcModel model;
  TrainConfig train_config;
  std::vector<MetricsRecord> history;
};

// Layout: the 8-byte magic "TRCCKPT1", a little-endian uint64 manifest
// length, the JSON manifest, then the parameters as little-endian binary32
// in manifest order. The manifest records each tensor's name, shape and
// byte offset plus a CRC-32 of the blob.
std::string SerializeCheckpoint(const TrcModel& model,
                                const TrainConfig& train_config,
                                const std::vector<MetricsRecord>& history);
Checkpoint ParseCheckpoint(const std::string& bytes,
                           const std::string& origin = "");

void SaveCheckpoint(const std::string& path, const TrcModel& model,
                    const TrainConfig& train_config,
                    const std::vector<MetricsRecord>& history = {});
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace trc

#endif  // TRC_CHECKPOINT_H_
