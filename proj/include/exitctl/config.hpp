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

// Run-configuration loading for the command-line tool.  A run config is an
// INI file written for one command; every command loader parses its file
// strictly, so unread sections or keys are hard errors.  The [problem]
// section points at a problem file, resolved relative to the config's own
// directory.
//
// List-valued keys (rules, policies) hold whitespace-separated items; an
// item's arguments follow a ':' and use commas or semicolons internally,
// never spaces.

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "exitctl/dp.hpp"
#include "exitctl/dpp.hpp"
#include "exitctl/policy.hpp"
#include "exitctl/problem.hpp"
#include "exitctl/stopping.hpp"

namespace exitctl::cfg {

/// Command-line values that take precedence over file keys.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
};

struct Common {
    std::string config_dir;
    std::string problem_path;
    ProblemSpec problem;
};

/// [mesh]: nodes (per-axis counts), n_steps (0 derives the stability
/// limit), safety in (0,1], max_stored_slices.
struct MeshSettings {
    std::vector<int> nodes;
    int n_steps = 0;
    double safety = 1.0;
    int max_stored_slices = 2001;
};

/// [mc]: n_steps = 0 derives ceil(T / 1e-3).
struct McSettings {
    long long n_paths = 10000;
    int n_steps = 0;
    std::uint64_t seed = 1;
    int workers = 1;
    bool bridge = false;
    double f_max = 1e12;

    int resolved_steps(double horizon) const;
};

struct CheckConfig {
    Common common;
    std::uint64_t seed = 1;
    int samples = 256;
    int level = 1;
};

struct SolveConfig {
    Common common;
    MeshSettings mesh;
    int control_level = 1;
    int workers = 1;
    double probe_t = 0.0;
    std::vector<double> probe_x;  // empty: no probe row in the report
};

struct EstimateConfig {
    Common common;
    McSettings mc;
    int control_level = 1;
    double t = 0.0;
    std::vector<double> x;
    std::string policy;
    std::string grid_file;  // needed by argmax policies; resolved path
};

struct SimulateConfig {
    Common common;
    int control_level = 1;
    int n_paths = 1;
    int n_steps = 0;
    std::uint64_t seed = 1;
    double t = 0.0;
    std::vector<double> x;
    std::string policy;
    std::string grid_file;
};

struct StitchSettings {
    bool enabled = false;
    std::string base = "zero";  // policy item applied before theta
    std::string theta;          // rule item
    double radius = 0.1;
    double pitch = 0.02;
    double minorant_n = 20.0;
    double eps_decl = 0.0;
    double tol = 0.0;
    long long n_paths = 0;  // 0: reuse [mc].n_paths
};

struct VerifyConfig {
    Common common;
    MeshSettings mesh;      // used when grid_file is empty
    std::string grid_file;
    McSettings mc;
    int control_level = 1;
    double t = 0.0;
    std::vector<double> x;
    std::vector<std::string> rules;
    std::vector<std::string> policies;
    double c_disc = kDiscretizationC;
    double eps_opt = std::numeric_limits<double>::quiet_NaN();
    StitchSettings stitch;
};

struct CoverConfig {
    Common common;
    CoverRegion region;
    double pitch = 0.0;
    double radius = 0.0;
    std::uint64_t seed = 1;
    int queries = 0;  // random ownership queries reported
};

CheckConfig load_check(const std::string& path, const Overrides& ov);
SolveConfig load_solve(const std::string& path, const Overrides& ov);
EstimateConfig load_estimate(const std::string& path, const Overrides& ov);
SimulateConfig load_simulate(const std::string& path, const Overrides& ov);
VerifyConfig load_verify(const std::string& path, const Overrides& ov);
CoverConfig load_cover(const std::string& path, const Overrides& ov);

/// "dir-relative unless absolute".
std::string resolve_path(const std::string& dir, const std::string& path);

/// Rule items: "const:<time>", "hit_box:lo1,hi1[;lo2,hi2...]".
StoppingRule parse_rule(const std::string& item, const ProblemSpec& spec);

/// Policy items: "zero", "constant:u1[,u2...]", "feedback:expr[;expr...]",
/// "random:<index>", "argmax" (needs the solved grid).
ControlPolicy make_policy(const std::string& item, const ProblemSpec& spec,
                          const ValueGrid* grid, int control_level, std::uint64_t seed);

std::vector<std::string> split_items(const std::string& text);

}  // namespace exitctl::cfg
