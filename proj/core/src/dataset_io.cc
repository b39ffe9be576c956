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

#include "trc/dataset_io.h"

#include <sstream>

#include "trc/config_io.h"
#include "trc/errors.h"
#include "trc/normalizer.h"

namespace trc {
namespace {

Json SampleToJson(const Sample& s) {
  Json u = Json::array();
  for (int t = 0; t < s.u_star.rows(); ++t) {
    for (int c = 0; c < s.u_star.cols(); ++c) u.push_back(s.u_star(t, c));
  }
  return {{"x0", ToJson(s.x0)},
          {"x_target", ToJson(s.x_target)},
          {"u_star", u},
          {"j_star", s.j_star}};
}

Sample SampleFromJson(const Json& j, const ControlProblem& p,
                      const std::string& where) {
  Sample s;
  try {
    s.x0 = VectorFromJson(j.at("x0"));
    s.x_target = VectorFromJson(j.at("x_target"));
    const std::vector<double> u = j.at("u_star").get<std::vector<double>>();
    if (static_cast<int>(u.size()) != p.horizon * p.control_dim) {
      throw DimensionError(where + ": u_star has " + std::to_string(u.size()) +
                           " values, expected " +
                           std::to_string(p.horizon * p.control_dim));
    }
    s.u_star.resize(p.horizon, p.control_dim);
    for (int t = 0; t < p.horizon; ++t) {
      for (int c = 0; c < p.control_dim; ++c) {
        s.u_star(t, c) = u[t * p.control_dim + c];
      }
    }
    s.j_star = j.at("j_star").get<double>();
  } catch (const Json::exception& e) {
    throw IoError(where + ": malformed sample: " + e.what());
  }
  if (s.x0.size() != p.state_dim || s.x_target.size() != p.state_dim) {
    throw DimensionError(where + ": state has the wrong dimension");
  }
  if (!s.x0.allFinite() || !s.x_target.allFinite() || !s.u_star.allFinite() ||
      !std::isfinite(s.j_star)) {
    throw IoError(where + ": non-finite value in sample");
  }
  for (int t = 0; t < p.horizon; ++t) {
    for (int c = 0; c < p.control_dim; ++c) {
      if (s.u_star(t, c) < p.u_min(c) || s.u_star(t, c) > p.u_max(c)) {
        throw IoError(where + ": u_star outside the control bounds");
      }
    }
  }
  return s;
}

}  // namespace

std::string SerializeDataset(const Dataset& d) {
  Json header;
  header["format_version"] = kDatasetFormatVersion;
  header["problem"] = ToJson(d.problem);
  header["oracle"] = ToJson(d.oracle);
  header["seed"] = d.seed;
  header["requested"] = d.requested;
  header["sample_count"] = d.samples.size();
  header["failure_count"] = d.failure_count;
  header["converged_count"] = d.converged_count;
  if (!d.samples.empty()) {
    header["normalization"] = ToJson(Normalizer::Fit(d.samples));
  }
  std::string out = header.dump() + "\n";
  for (const Sample& s : d.samples) out += SampleToJson(s).dump() + "\n";
  return out;
}

Dataset ParseDataset(const std::string& text, const std::string& origin) {
  const std::string name = origin.empty() ? "dataset" : origin;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError(name + ": empty dataset file");
  Json header;
  try {
    header = Json::parse(line);
  } catch (const Json::exception& e) {
    throw IoError(name + ": invalid header: " + e.what());
  }
  Dataset d;
  int count = 0;
  try {
    const int version = header.at("format_version").get<int>();
    if (version != kDatasetFormatVersion) {
      throw IoError(name + ": unsupported format_version " +
                    std::to_string(version));
    }
    d.problem = ProblemFromJson(header.at("problem"));
    d.oracle = OracleConfigFromJson(header.at("oracle"));
    d.seed = header.at("seed").get<uint64_t>();
    d.requested = header.value("requested", 0);
    d.failure_count = header.at("failure_count").get<int>();
    d.converged_count = header.value("converged_count", 0);
    count = header.at("sample_count").get<int>();
  } catch (const Json::exception& e) {
    throw IoError(name + ": malformed header: " + e.what());
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw IoError(name + ":" + std::to_string(line_no) + ": " + e.what());
    }
    d.samples.push_back(SampleFromJson(
        j, d.problem, name + ":" + std::to_string(line_no)));
  }
  if (static_cast<int>(d.samples.size()) != count) {
    throw IoError(name + ": header declares " + std::to_string(count) +
                  " samples but the body has " +
                  std::to_string(d.samples.size()));
  }
  return d;
}

void WriteDataset(const std::string& path, const Dataset& dataset) {
  WriteFileAtomic(path, SerializeDataset(dataset));
}

Dataset ReadDataset(const std::string& path) {
  return ParseDataset(ReadTextFile(path), path);
}

}  // namespace trc
