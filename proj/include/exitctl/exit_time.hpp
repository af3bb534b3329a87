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

// Exit times of discrete paths from the open set G, the distance function
// to G's complement, the perturbation-stability certificate, and a
// Brownian-bridge crossing correction for constant diffusion on box or
// halfspace domains.

#pragma once

#include <cstdint>
#include <span>

#include "exitctl/paths.hpp"
#include "exitctl/problem.hpp"
#include "exitctl/stopping.hpp"

namespace exitctl {

struct ExitResult {
    int tau_index = 0;    // first mesh index >= start with X_k outside G, else n_steps
    double tau = 0.0;     // min(t_{tau_index}, T)
    bool exited = false;  // the state at tau_index is outside G
};

/// rho(x, G^c): exact for box/ball/halfspace, a certified lower bound for
/// expression domains.  1-Lipschitz; 0 outside G.
double distance_to_complement(std::span<const double> x, const Domain& domain);

/// Signed perpendicular distance to each boundary face, positive inside
/// (box: two faces per axis, halfspace: one).  Other domain kinds throw.
void face_distances(const Domain& domain, std::span<const double> x, std::vector<double>& out);

/// P(the continuous bridge between two inside endpoints crosses a face)
/// with faces treated as independent; per face the crossing probability is
/// exp(-2 d_now d_next * inv_var), inv_var = 1/(sigma^2 dt).  The two
/// scratch vectors avoid per-step allocation.
double bridge_crossing_probability(const Domain& domain, std::span<const double> x_now,
                                   std::span<const double> x_next, double inv_var,
                                   std::vector<double>& d_now, std::vector<double>& d_next);

/// Grid-point detection: first k >= start_index with X_k outside G (strict
/// membership; boundary counts as exited).  Upward-biased by O(sqrt(dt))
/// because between-node crossings go unseen.
ExitResult exit_time(const SamplePath& path, const Domain& domain, int start_index);

/// Per inside-inside step the crossing probability of the continuous
/// bridge, per face, is exp(-2 d_k d_{k+1} / (sigma^2 dt)); a crossing is
/// sampled from the path's own (seed, path_index) bridge stream and tau
/// snaps to the right endpoint t_{k+1} of the straddling step.  Exact for
/// constant scalar-diagonal sigma; restricted to box/halfspace domains.
ExitResult exit_time_bridge_corrected(const SamplePath& path, const Domain& domain,
                                      double sigma_const, int start_index);

/// Realized stopping index theta = min(first k >= start where the rule
/// fires, tau_index).  Always start <= theta <= tau; the exit wins a tie.
int realize_stopping(const StoppingRule& rule, const SamplePath& path, const Domain& domain);

/// delta = min over mesh points t_k <= a (k >= start) of the distance to
/// G^c along the path.  Contract: every path Y with max_k |Y_k - X_k| <
/// delta/2 (componentwise sup over the same index range) still has
/// exit_time(Y) > a.  Throws Error("path exits before a") when the
/// precondition tau > a fails.
double semicontinuity_certificate(const SamplePath& path, double a, const Domain& domain);

}  // namespace exitctl
