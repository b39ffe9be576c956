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

#ifndef TRC_CONFIG_IO_H_
#define TRC_CONFIG_IO_H_

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "trc/dynamics.h"
#include "trc/model.h"
#include "trc/normalizer.h"
#include "trc/oracle.h"
#include "trc/training.h"

namespace trc {

using Json = nlohmann::json;

// JSON conversions. The *FromJson readers start from `base` and override
// only the keys present; unknown keys raise ContractError so that typos in
// config files do not pass silently.
Json ToJson(const ControlProblem& problem);
// Starts from the named system's defaults when "system" is present.
ControlProblem ProblemFromJson(const Json& j);

Json ToJson(const TrcConfig& config);
TrcConfig TrcConfigFromJson(const Json& j, TrcConfig base = {});

Json ToJson(const TrainConfig& config);
TrainConfig TrainConfigFromJson(const Json& j, TrainConfig base = {});

Json ToJson(const OracleConfig& config);
OracleConfig OracleConfigFromJson(const Json& j, OracleConfig base = {});

Json ToJson(const Normalizer& normalizer);
Normalizer NormalizerFromJson(const Json& j);

Json ToJson(const MetricsRecord& record);
MetricsRecord MetricsRecordFromJson(const Json& j);

Json ToJson(const Eigen::VectorXd& v);
Json ToJson(const Eigen::MatrixXd& m);
Eigen::VectorXd VectorFromJson(const Json& j);
Eigen::MatrixXd MatrixFromJson(const Json& j);

// File helpers. Errors raise IoError naming the path.
std::string ReadTextFile(const std::string& path);
Json ReadJsonFile(const std::string& path);
// Writes to a sibling temporary file, then renames over `path`.
void WriteFileAtomic(const std::string& path, const std::string& contents);

}  // namespace trc

#endif  // TRC_CONFIG_IO_H_
