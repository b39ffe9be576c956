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

#ifndef TRC_DATASET_IO_H_
#define TRC_DATASET_IO_H_

#include <string>

#include "trc/oracle.h"

namespace trc {

inline constexpr int kDatasetFormatVersion = 1;

// JSON Lines: one header object, then one object per sample with x0,
// x_target, u_star (row-major T x d_u) and j_star.
std::string SerializeDataset(const Dataset& dataset);
Dataset ParseDataset(const std::string& text, const std::string& origin = "");

void WriteDataset(const std::string& path, const Dataset& dataset);
// Validates counts, shapes, finiteness and control bounds.
Dataset ReadDataset(const std::string& path);

}  // namespace trc

#endif  // TRC_DATASET_IO_H_
