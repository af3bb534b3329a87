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

// Monte Carlo estimation of the running-cost payoff
//
//     J(t, x) = E [ integral_t^tau f(s, X_s, u_s) ds ],   tau = exit ^ T,
//
// of conditional variants cut at a stopping rule, and of discrete
// lower-semicontinuity envelopes of a value grid.
//
// One streaming kernel drives every estimator.  It regenerates noise from
// the counter-based stream, so a path is a pure function of
// (seed, path_index) and results are independent of worker count and
// schedule.  Left-endpoint quadrature for the integral matches the order
// of the Euler scheme.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "exitctl/dp.hpp"
#include "exitctl/mesh.hpp"
#include "exitctl/paths.hpp"
#include "exitctl/policy.hpp"
#include "exitctl/problem.hpp"
#include "exitctl/stopping.hpp"

namespace exitctl {

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    long long n_paths = 0;
    std::uint64_t seed = 0;
    long long n_saturated = 0;  // f evaluations clamped at f_max
};

struct McOptions {
    int control_level = 1;  // 1-based control-space level the policy runs at
    long long n_paths = 10000;
    std::uint64_t seed = 1;
    int workers = 1;
    // Brownian-bridge correction for between-node boundary crossings.
    // Needs constant scalar-diagonal sigma and a box/halfspace domain; a
    // bridge-detected crossing stops the path at the right endpoint of the
    // straddling step with zero continuation value.
    bool bridge = false;
    double f_max = 1e12;                          // per-step cap on f, saturations counted
    long long nested_budget_cap = 100'000'000;    // outer*inner path cap for nested mode
};

/// Continuation value V(theta, X_theta) used by estimate_conditional_J.
///   - grid set: V interpolates the solved value grid (0 outside G).
///   - n_inner > 0: V is a fresh inner estimate of J from (theta, X_theta)
///     under the shifted policy (two-level Monte Carlo).  Grid-point exit
///     detection only; the bridge flag is ignored in this mode.
///   - fn set: V = fn(theta, X_theta), an arbitrary deterministic field.
///   - none of the above: V = 0.
/// At most one mode may be set.  Exited paths always contribute V = 0.
struct ContinuationValue {
    const ValueGrid* grid = nullptr;
    long long n_inner = 0;
    std::function<double(double, std::span<const double>)> fn;
};

/// Sample mean and standard error of the payoff from (t, x); t snaps down
/// to the mesh.  per_path, when given, receives the n_paths individual
/// payoffs in path order.  Errors from expression evaluation or a state
/// blow-up carry the offending path index.
Estimate estimate_J(const ProblemSpec& spec, double t, std::span<const double> x,
                    const ControlPolicy& policy, const TimeMesh& mesh, const McOptions& opts,
                    std::vector<double>* per_path = nullptr);

/// E [ integral_t^theta f ds + V(theta, X_theta) ] with theta realized as
/// the earlier of the rule's firing and the exit time (clipped to T).  The
/// kernel's step order makes a rule that fires exactly at the exit
/// indistinguishable from the exit itself, so theta <= tau always holds.
Estimate estimate_conditional_J(const ProblemSpec& spec, double t, std::span<const double> x,
                                const ControlPolicy& policy, const StoppingRule& rule,
                                const ContinuationValue& value, const TimeMesh& mesh,
                                const McOptions& opts,
                                std::vector<double>* per_path = nullptr);

struct LscViolation {
    int slice = 0;
    long long node = 0;
    double value = 0.0;
    double envelope = 0.0;
};

struct LscReport {
    double radius = 0.0;              // smallest radius of the sequence, the one used
    std::vector<double> envelope;     // slice-major, aligned with grid.values
    std::vector<LscViolation> violations;
};

/// Discrete lower-semicontinuity check on the stored (t, x) lattice:
/// env(p) = min over lattice points q with dist(q, p) <= r of value(q),
/// r the smallest of the given radii, dist Euclidean in (t, x1..xd).
/// Points with env(p) < value(p) - tol are reported; a lower-semicontinuous
/// field at lattice resolution yields none once tol covers its local
/// oscillation.
LscReport lsc_envelope(const ValueGrid& grid, std::span<const double> radii, double tol);

/// Empirical modulus at scale r: max |value(p) - value(q)| over lattice
/// pairs within distance r, the exterior zeros included.
double grid_modulus(const ValueGrid& grid, double radius);

}  // namespace exitctl
