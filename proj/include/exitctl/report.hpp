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

// Structured JSON reports.  Every report body is a pure function of the
// inputs and the seed; wall-clock facts (timestamp, runtime, worker count)
// live in one top-level "volatile" object so two runs of the same config
// compare byte-identical once that object is dropped.

#pragma once

#include <string>

#include "json.hpp"

#include "exitctl/dpp.hpp"
#include "exitctl/montecarlo.hpp"
#include "exitctl/problem.hpp"

namespace exitctl {

using ordered_json = nlohmann::ordered_json;

ordered_json problem_json(const ProblemSpec& spec);
ordered_json estimate_json(const Estimate& e);
ordered_json validation_json(const ValidationReport& rep, const LipschitzEstimate& lip);
ordered_json dpp_report_json(const DppReport& rep);
ordered_json stitch_report_json(const StitchReport& rep);

/// Appends {"volatile": {timestamp, runtime_seconds, workers}} to the body
/// and writes it, pretty-printed, to path.
void write_report(const std::string& path, ordered_json body, double runtime_seconds,
                  int workers);

}  // namespace exitctl
