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

// Control policies: expression feedback, lookup-table feedback, open-loop
// tables, and the stitched composite (base until a stopping rule fires,
// then the policy of the half-open cell owning the switch point).
// Every produced control is clamped to the active control-level box.

#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "exitctl/expr.hpp"
#include "exitctl/mesh.hpp"
#include "exitctl/problem.hpp"
#include "exitctl/stopping.hpp"

namespace exitctl {

/// Nearest-node lookup table: u(t, x) = values at the nearest stored time
/// slice and nearest space node.  Self-contained so a policy survives its
/// source grid.
struct FeedbackTable {
    int d = 0;
    int m = 0;
    std::vector<double> slice_times;  // ascending
    std::vector<double> axis_lo;
    std::vector<double> axis_dx;
    std::vector<int> axis_n;
    std::vector<double> u_values;  // slice-major, then node (axis 0 fastest), then control

    long long node_count() const;
    void lookup(double t, std::span<const double> x, std::span<double> u_out) const;
};

struct ControlPolicy {
    enum class Kind { feedback, feedback_table, open_loop, stitched };
    Kind kind = Kind::feedback;
    std::string id;

    std::vector<expr::Expression> g;  // feedback: m expressions of (t, x)

    FeedbackTable table;  // feedback_table

    std::vector<double> open_loop_u;  // open_loop: n_steps x m, absolute mesh indexing

    // stitched
    std::shared_ptr<const ControlPolicy> base;
    StoppingRule theta;
    std::vector<HalfOpenCell> cells;
    std::vector<std::shared_ptr<const ControlPolicy>> cell_policies;
};

/// Per-path evaluation state.  Only stitched policies have state: the
/// realized switch index and the owning cell.  Fresh per path; policies
/// themselves stay immutable and shareable across threads.
struct PolicyState {
    int theta_index = -1;
    int cell = -1;
    std::unique_ptr<PolicyState> base_state;
    std::unique_ptr<PolicyState> cell_state;

    void reset();
};

/// Computes the control for step k (applied on [t_k, t_{k+1})) and advances
/// stitched state.  Must be called with strictly increasing k along one
/// path.  `level` is a 0-based index into control_space.levels; outputs are
/// clamped to that box.  When a stitched rule fires at a state inside G that
/// no cell owns, throws HarnessError naming the point; firing outside G
/// (theta == tau) falls back to the base policy since post-exit controls
/// never matter.
void policy_control(const ControlPolicy& policy, PolicyState& state,
                    const ProblemSpec& spec, int level, const TimeMesh& mesh, int k,
                    int start_index, std::span<const double> x, std::span<double> u_out);

ControlPolicy make_feedback(std::vector<expr::Expression> g, std::string id);
ControlPolicy make_constant_policy(const ProblemSpec& spec, std::span<const double> u,
                                   std::string id);
ControlPolicy make_zero_policy(const ProblemSpec& spec);
ControlPolicy make_open_loop(const TimeMesh& mesh, int m, std::vector<double> table,
                             std::string id);
ControlPolicy make_stitched(std::shared_ptr<const ControlPolicy> base, StoppingRule theta,
                            std::vector<HalfOpenCell> cells,
                            std::vector<std::shared_ptr<const ControlPolicy>> cell_policies,
                            std::string id);

/// Smooth randomized feedback u_j = center + halfwidth * tanh(affine(t,x))
/// over the 0-based level's box, deterministic in (seed, index).  Used to
/// populate policy families for the sup-side checks.
ControlPolicy random_feedback(const ProblemSpec& spec, int level, std::uint64_t seed,
                              int index);

}  // namespace exitctl
