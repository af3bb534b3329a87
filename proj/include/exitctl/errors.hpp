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

#pragma once

#include <stdexcept>
#include <string>

namespace exitctl {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed expression text or an evaluation domain fault (1/0, log(<=0), ...).
struct ExprError : Error {
    ExprError(std::string msg, std::size_t offset)
        : Error(std::move(msg)), byte_offset(offset) {}
    std::size_t byte_offset;
};

/// Config or problem file structure problems: missing sections, unknown keys,
/// unparseable values. CLI maps these to exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

/// Simulation failures: coefficient evaluation faults, non-finite states.
struct SimulationError : Error {
    SimulationError(std::string msg, long step) : Error(std::move(msg)), step_index(step) {}
    long step_index;
};

/// Explicit-scheme stability violation; message names the worst offender.
struct CflError : Error {
    using Error::Error;
};

/// Budget caps, hash mismatches, uncovered stitch points and similar
/// harness-level contract failures.
struct HarnessError : Error {
    using Error::Error;
};

}  // namespace exitctl
