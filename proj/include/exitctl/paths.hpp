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

// Euler-Maruyama simulation on [0, T] with a frozen prefix (the state sits
// at x until the start time), trajectory concatenation at a mesh index,
// policy shifting, the flow-property check, and the start-point
// continuity scaling table.

#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "exitctl/errors.hpp"
#include "exitctl/expr.hpp"
#include "exitctl/mesh.hpp"
#include "exitctl/policy.hpp"
#include "exitctl/problem.hpp"
#include "exitctl/rng.hpp"

namespace exitctl {

struct BrownianPath {
    TimeMesh mesh;
    int d = 0;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    std::vector<double> increments;  // n_steps x d, row-major

    const double* inc(int k) const {
        return increments.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(d);
    }

    /// Cumulative trajectory W(t_k), (n_steps+1) x d, W(t0) = 0.
    std::vector<double> trajectory() const;
};

/// Increment for one step, regenerated from the counter-based stream:
/// out[j] = sqrt_dt * N(0,1).  sample_brownian and the streaming Monte
/// Carlo kernel both call this, so their paths agree bitwise.
inline void brownian_increment(std::uint64_t seed, std::uint64_t path_index, int step, int d,
                               double sqrt_dt, double* out) {
    rng::fill_normals(seed, path_index, static_cast<std::uint32_t>(step),
                      rng::Purpose::gaussian, out, d);
    for (int j = 0; j < d; ++j) out[j] *= sqrt_dt;
}

BrownianPath sample_brownian(const TimeMesh& mesh, int d, std::uint64_t seed,
                             std::uint64_t path_index);

/// Splice at mesh index theta: the output keeps w's increments before theta
/// and w2's from theta on.  In trajectory terms that is exactly "w up to
/// t_theta, then w2 shifted to be continuous at the splice":
/// out(u) = w(u) on [t0, t_theta], out(u) = w2(u) - w2(t_theta) + w(t_theta) after.
BrownianPath concatenate(const BrownianPath& w, const BrownianPath& w2, int theta_index);

struct SamplePath {
    TimeMesh mesh;
    int d = 0;
    int m = 0;
    int start_index = 0;
    std::vector<double> start_x;
    std::vector<double> states;    // (n_steps+1) x d
    std::vector<double> controls;  // n_steps x m; zero (never applied) before start_index
    std::uint64_t seed = 0;        // driving-noise identity
    std::uint64_t path_index = 0;

    std::span<const double> state(int k) const {
        return {states.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(d),
                static_cast<std::size_t>(d)};
    }
    std::span<const double> control(int k) const {
        return {controls.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(m),
                static_cast<std::size_t>(m)};
    }
};

/// One Euler-Maruyama step: x_next = x + b(t,x,u) dt + sigma(t,x,u) dW.
/// x_next must not alias x.  Throws ExprError on evaluation faults; the
/// caller owns the non-finite check (it knows the step index).
inline void euler_step(const CoefficientSet& c, double t, double dt,
                       std::span<const double> x, std::span<const double> u,
                       const double* dW, std::span<double> x_next) {
    const int d = c.d;
    for (int j = 0; j < d; ++j) {
        double v = x[static_cast<std::size_t>(j)] +
                   expr::eval(c.b[static_cast<std::size_t>(j)], t, x, u) * dt;
        for (int l = 0; l < d; ++l) {
            const auto& s = c.sigma[static_cast<std::size_t>(j) * static_cast<std::size_t>(d) +
                                    static_cast<std::size_t>(l)];
            // Constant-zero entries short-circuit so diagonal models pay
            // for d sigma evaluations per step, not d*d.
            if (s.nodes.size() == 1 && s.nodes[0].kind == expr::NodeKind::constant &&
                s.nodes[0].value == 0.0)
                continue;
            v += expr::eval(s, t, x, u) * dW[l];
        }
        x_next[static_cast<std::size_t>(j)] = v;
    }
}

/// Simulates from (t, x) on the driving path bp (mesh must span [0, T]).
/// t snaps down to the mesh; states before the start index stay exactly x.
/// The path is carried through to T even after leaving G; exit times are
/// the exit module's concern.  `level` is 0-based as in policy_control.
SamplePath simulate(const ProblemSpec& spec, int level, double t, std::span<const double> x,
                    const ControlPolicy& policy, const BrownianPath& bp);

/// Policy that, driven by any suffix noise from (t_theta, X_theta(prefix)),
/// reproduces the original policy driven by concatenate(prefix_noise, suffix)
/// from index theta on.  Feedback variants shift to themselves; open-loop
/// tables keep absolute indexing; a stitched policy whose rule already fired
/// on the prefix collapses to the selected cell policy.
ControlPolicy shift_policy(const ControlPolicy& policy, int theta_index,
                           const SamplePath& prefix);

/// Max over k >= theta of |X_a(k) - X_b(k)|_inf where path a runs from
/// (t, x) on spliced increments and path b runs from (t_theta, X_a(theta))
/// on the suffix increments under the shifted policy.  Both recursions are
/// identical step by step, so the contract is <= 1e-12.
double check_flow_property(const ProblemSpec& spec, int level, double t,
                           std::span<const double> x, const ControlPolicy& policy,
                           const BrownianPath& bp1, const BrownianPath& bp2,
                           int theta_index);

struct Perturbation {
    double s = 0.0;
    std::vector<double> y;
};

struct ScalingPoint {
    double h = 0.0;    // sqrt((s-t)^2 + |y-x|^2) after mesh snapping
    double m_h = 0.0;  // empirical E sup_k |X^{s,y} - X^{t,x}|^{2q}
};

/// Common-random-number coupling: per sample one shared driving path feeds
/// both starts, and the sup runs over the whole mesh (frozen zones
/// included).
std::vector<ScalingPoint> continuity_scaling_test(
    const ProblemSpec& spec, int level, const ControlPolicy& policy, int q, double t,
    std::span<const double> x, std::span<const Perturbation> perturbations,
    const TimeMesh& mesh, int n_paths, std::uint64_t seed, int workers);

/// Debug export, columns: k, t_k, x1..xd, u1..um.
void write_path_csv(const SamplePath& path, std::ostream& os);

}  // namespace exitctl
