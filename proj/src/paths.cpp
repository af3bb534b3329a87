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

#include "exitctl/paths.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "exitctl/parallel.hpp"
#include "exitctl/reduce.hpp"
#include "exitctl/stopping.hpp"

namespace exitctl {

// ---------------------------------------------------------------- stopping

StoppingRule constant_rule(double s) {
    StoppingRule r;
    r.kind = StoppingRule::Kind::constant;
    r.time = s;
    char buf[48];
    std::snprintf(buf, sizeof buf, "const(%g)", s);
    r.id = buf;
    return r;
}

StoppingRule first_hit_rule(Domain subdomain) {
    StoppingRule r;
    r.kind = StoppingRule::Kind::first_hit;
    r.subdomain = std::move(subdomain);
    r.id = "first_hit";
    return r;
}

StoppingRule min_of_rule(std::vector<StoppingRule> children) {
    StoppingRule r;
    r.kind = StoppingRule::Kind::min_of;
    r.children = std::move(children);
    std::string id = "min(";
    for (std::size_t i = 0; i < r.children.size(); ++i) {
        if (i) id += ",";
        id += r.children[i].id;
    }
    r.id = id + ")";
    return r;
}

bool rule_fires(const StoppingRule& rule, const TimeMesh& mesh, int k, int start_index,
                std::span<const double> x) {
    switch (rule.kind) {
        case StoppingRule::Kind::constant: {
            int threshold = mesh.snap_down(rule.time);
            if (threshold < start_index) threshold = start_index;
            return k >= threshold;
        }
        case StoppingRule::Kind::first_hit:
            return !rule.subdomain.contains(x);
        case StoppingRule::Kind::min_of:
            for (const StoppingRule& c : rule.children)
                if (rule_fires(c, mesh, k, start_index, x)) return true;
            return false;
    }
    return false;
}

int owning_cell(std::span<const HalfOpenCell> cells, double tq, std::span<const double> xq) {
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i].base_contains(tq, xq)) return static_cast<int>(i);
    return -1;
}

// ------------------------------------------------------------------ policy

long long FeedbackTable::node_count() const {
    long long n = 1;
    for (int c : axis_n) n *= c;
    return n;
}

void FeedbackTable::lookup(double t, std::span<const double> x, std::span<double> u_out) const {
    // Nearest stored slice; ties resolve to the earlier slice.
    std::size_t best;
    const auto it = std::lower_bound(slice_times.begin(), slice_times.end(), t);
    if (it == slice_times.begin()) {
        best = 0;
    } else if (it == slice_times.end()) {
        best = slice_times.size() - 1;
    } else {
        const std::size_t hi = static_cast<std::size_t>(it - slice_times.begin());
        best = (t - slice_times[hi - 1] <= slice_times[hi] - t) ? hi - 1 : hi;
    }
    long long node = 0;
    long long stride = 1;
    for (int j = 0; j < d; ++j) {
        const std::size_t k = static_cast<std::size_t>(j);
        double pos = (x[k] - axis_lo[k]) / axis_dx[k];
        long long i = static_cast<long long>(std::lround(pos));
        if (i < 0) i = 0;
        if (i >= axis_n[k]) i = axis_n[k] - 1;
        node += i * stride;
        stride *= axis_n[k];
    }
    const std::size_t base =
        (best * static_cast<std::size_t>(node_count()) + static_cast<std::size_t>(node)) *
        static_cast<std::size_t>(m);
    for (int j = 0; j < m; ++j) u_out[static_cast<std::size_t>(j)] = u_values[base + static_cast<std::size_t>(j)];
}

void PolicyState::reset() {
    theta_index = -1;
    cell = -1;
    if (base_state) base_state->reset();
    if (cell_state) cell_state->reset();
}

namespace {

[[noreturn]] void throw_uncovered(double t, std::span<const double> x) {
    std::ostringstream os;
    os << "stitched control: switch point (t=" << t << ", x=(";
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (j) os << ", ";
        os << x[j];
    }
    os << ")) is not covered by any cell";
    throw HarnessError(os.str());
}

}  // namespace

void policy_control(const ControlPolicy& policy, PolicyState& state, const ProblemSpec& spec,
                    int level, const TimeMesh& mesh, int k, int start_index,
                    std::span<const double> x, std::span<double> u_out) {
    const int m = spec.dim_u();
    switch (policy.kind) {
        case ControlPolicy::Kind::feedback: {
            const double t_k = mesh.time(k);
            for (int j = 0; j < m; ++j)
                u_out[static_cast<std::size_t>(j)] =
                    expr::eval(policy.g[static_cast<std::size_t>(j)], t_k, x, {});
            break;
        }
        case ControlPolicy::Kind::feedback_table:
            policy.table.lookup(mesh.time(k), x, u_out);
            break;
        case ControlPolicy::Kind::open_loop: {
            const std::size_t base = static_cast<std::size_t>(k) * static_cast<std::size_t>(m);
            for (int j = 0; j < m; ++j)
                u_out[static_cast<std::size_t>(j)] = policy.open_loop_u[base + static_cast<std::size_t>(j)];
            break;
        }
        case ControlPolicy::Kind::stitched: {
            if (state.theta_index < 0) {
                const bool exited = !spec.domain.contains(x);
                if (exited || rule_fires(policy.theta, mesh, k, start_index, x)) {
                    state.theta_index = k;
                    if (!exited) {
                        state.cell = owning_cell(policy.cells, mesh.time(k), x);
                        if (state.cell < 0) throw_uncovered(mesh.time(k), x);
                    } else {
                        // theta == tau: the suffix control never matters, keep base.
                        state.cell = -1;
                    }
                }
            }
            if (state.theta_index >= 0 && state.cell >= 0) {
                if (!state.cell_state) state.cell_state = std::make_unique<PolicyState>();
                policy_control(*policy.cell_policies[static_cast<std::size_t>(state.cell)],
                               *state.cell_state, spec, level, mesh, k, start_index, x, u_out);
            } else {
                if (!state.base_state) state.base_state = std::make_unique<PolicyState>();
                policy_control(*policy.base, *state.base_state, spec, level, mesh, k,
                               start_index, x, u_out);
            }
            // Clamp already done by the inner policy; return to skip the
            // second clamp below (harmless but redundant).
            return;
        }
    }
    spec.control_space.clamp(level, u_out);
}

ControlPolicy make_feedback(std::vector<expr::Expression> g, std::string id) {
    ControlPolicy p;
    p.kind = ControlPolicy::Kind::feedback;
    p.g = std::move(g);
    p.id = std::move(id);
    return p;
}

ControlPolicy make_constant_policy(const ProblemSpec& spec, std::span<const double> u,
                                   std::string id) {
    std::vector<expr::Expression> g;
    for (std::size_t j = 0; j < u.size(); ++j) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", u[j]);
        g.push_back(expr::parse(buf, spec.dim_x(), 0));
    }
    return make_feedback(std::move(g), std::move(id));
}

ControlPolicy make_zero_policy(const ProblemSpec& spec) {
    std::vector<double> u(static_cast<std::size_t>(spec.dim_u()), 0.0);
    return make_constant_policy(spec, u, "zero");
}

ControlPolicy make_open_loop(const TimeMesh& mesh, int m, std::vector<double> table,
                             std::string id) {
    if (static_cast<long long>(table.size()) !=
        static_cast<long long>(mesh.n_steps) * static_cast<long long>(m))
        throw Error("open-loop table must have n_steps*m entries");
    ControlPolicy p;
    p.kind = ControlPolicy::Kind::open_loop;
    p.open_loop_u = std::move(table);
    p.id = std::move(id);
    return p;
}

ControlPolicy make_stitched(std::shared_ptr<const ControlPolicy> base, StoppingRule theta,
                            std::vector<HalfOpenCell> cells,
                            std::vector<std::shared_ptr<const ControlPolicy>> cell_policies,
                            std::string id) {
    if (cells.size() != cell_policies.size())
        throw Error("stitched policy needs one policy per cell");
    ControlPolicy p;
    p.kind = ControlPolicy::Kind::stitched;
    p.base = std::move(base);
    p.theta = std::move(theta);
    p.cells = std::move(cells);
    p.cell_policies = std::move(cell_policies);
    p.id = std::move(id);
    return p;
}

ControlPolicy random_feedback(const ProblemSpec& spec, int level, std::uint64_t seed,
                              int index) {
    using rng::Purpose;
    const int d = spec.dim_x();
    const int m = spec.dim_u();
    if (m == 0) return make_feedback({}, "random" + std::to_string(index));
    const ControlLevel& box = spec.control_space.levels[static_cast<std::size_t>(level)];
    std::vector<expr::Expression> g;
    std::uint32_t blk = 0;
    const auto stream = static_cast<std::uint64_t>(index);
    auto next_coeff = [&]() {
        return 2.0 * rng::uniform01(seed, stream, 0, Purpose::policy_coeffs, blk++) - 1.0;
    };
    for (int j = 0; j < m; ++j) {
        const std::size_t k = static_cast<std::size_t>(j);
        const double center = 0.5 * (box.lo[k] + box.hi[k]);
        const double halfwidth = 0.5 * (box.hi[k] - box.lo[k]);
        std::ostringstream os;
        char num[40];
        std::snprintf(num, sizeof num, "%.17g", center);
        os << num << " + ";
        std::snprintf(num, sizeof num, "%.17g", halfwidth);
        os << num << " * tanh(";
        std::snprintf(num, sizeof num, "%.17g", 2.0 * next_coeff());
        os << num;
        for (int l = 0; l < d; ++l) {
            std::snprintf(num, sizeof num, "%.17g", 3.0 * next_coeff());
            os << " + " << num << " * x" << l + 1;
        }
        std::snprintf(num, sizeof num, "%.17g", next_coeff());
        os << " + " << num << " * t)";
        g.push_back(expr::parse(os.str(), d, 0));
    }
    return make_feedback(std::move(g), "random" + std::to_string(index));
}

// ---------------------------------------------------------------- brownian

std::vector<double> BrownianPath::trajectory() const {
    std::vector<double> w(static_cast<std::size_t>(mesh.n_steps + 1) * static_cast<std::size_t>(d),
                          0.0);
    for (int k = 0; k < mesh.n_steps; ++k)
        for (int j = 0; j < d; ++j)
            w[static_cast<std::size_t>(k + 1) * static_cast<std::size_t>(d) +
              static_cast<std::size_t>(j)] =
                w[static_cast<std::size_t>(k) * static_cast<std::size_t>(d) +
                  static_cast<std::size_t>(j)] +
                increments[static_cast<std::size_t>(k) * static_cast<std::size_t>(d) +
                           static_cast<std::size_t>(j)];
    return w;
}

BrownianPath sample_brownian(const TimeMesh& mesh, int d, std::uint64_t seed,
                             std::uint64_t path_index) {
    BrownianPath bp;
    bp.mesh = mesh;
    bp.d = d;
    bp.seed = seed;
    bp.path_index = path_index;
    bp.increments.resize(static_cast<std::size_t>(mesh.n_steps) * static_cast<std::size_t>(d));
    const double sqrt_dt = std::sqrt(mesh.dt());
    for (int k = 0; k < mesh.n_steps; ++k)
        brownian_increment(seed, path_index, k, d, sqrt_dt,
                           bp.increments.data() +
                               static_cast<std::size_t>(k) * static_cast<std::size_t>(d));
    return bp;
}

BrownianPath concatenate(const BrownianPath& w, const BrownianPath& w2, int theta_index) {
    if (!w.mesh.same_as(w2.mesh) || w.d != w2.d)
        throw Error("concatenate: driving paths live on different meshes");
    if (theta_index < 0 || theta_index > w.mesh.n_steps)
        throw Error("concatenate: splice index off the mesh");
    BrownianPath out = w;
    const std::size_t row = static_cast<std::size_t>(w.d);
    for (int k = theta_index; k < w.mesh.n_steps; ++k)
        for (std::size_t j = 0; j < row; ++j)
            out.increments[static_cast<std::size_t>(k) * row + j] =
                w2.increments[static_cast<std::size_t>(k) * row + j];
    return out;
}

// ---------------------------------------------------------------- simulate

SamplePath simulate(const ProblemSpec& spec, int level, double t, std::span<const double> x,
                    const ControlPolicy& policy, const BrownianPath& bp) {
    const int d = spec.dim_x();
    const int m = spec.dim_u();
    if (bp.d != d) throw Error("simulate: driving path dimension mismatch");
    if (bp.mesh.t0 != 0.0 || bp.mesh.T != spec.horizon)
        throw Error("simulate: driving path mesh must span [0, T]");
    if (static_cast<int>(x.size()) != d) throw Error("simulate: start point dimension mismatch");

    SamplePath path;
    path.mesh = bp.mesh;
    path.d = d;
    path.m = m;
    path.start_index = bp.mesh.snap_down(t);
    path.start_x.assign(x.begin(), x.end());
    path.seed = bp.seed;
    path.path_index = bp.path_index;
    const int n = bp.mesh.n_steps;
    path.states.assign(static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(d), 0.0);
    path.controls.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(m), 0.0);

    for (int k = 0; k <= path.start_index; ++k)
        for (int j = 0; j < d; ++j)
            path.states[static_cast<std::size_t>(k) * static_cast<std::size_t>(d) +
                        static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)];

    const double dt = bp.mesh.dt();
    PolicyState st;
    for (int k = path.start_index; k < n; ++k) {
        const std::span<const double> xk = path.state(k);
        const std::span<double> uk{
            path.controls.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(m),
            static_cast<std::size_t>(m)};
        policy_control(policy, st, spec, level, bp.mesh, k, path.start_index, xk, uk);
        const std::span<double> xk1{
            path.states.data() + static_cast<std::size_t>(k + 1) * static_cast<std::size_t>(d),
            static_cast<std::size_t>(d)};
        euler_step(spec.coefficients, bp.mesh.time(k), dt, xk, uk, bp.inc(k), xk1);
        for (int j = 0; j < d; ++j)
            if (!std::isfinite(xk1[static_cast<std::size_t>(j)]))
                throw SimulationError("non-finite state (blow-up) at step " + std::to_string(k + 1),
                                      k + 1);
    }
    return path;
}

ControlPolicy shift_policy(const ControlPolicy& policy, int theta_index,
                           const SamplePath& prefix) {
    switch (policy.kind) {
        case ControlPolicy::Kind::feedback:
        case ControlPolicy::Kind::feedback_table:
        case ControlPolicy::Kind::open_loop:
            return policy;  // state/time lookups are shift-invariant as-is
        case ControlPolicy::Kind::stitched: {
            // Replay the rule over the prefix to see whether the switch
            // already happened by theta.  Callers shift at theta <= tau, so
            // the prefix stays in G strictly before theta; an exit exactly
            // at theta lands in the uncovered branch below.
            for (int k = prefix.start_index; k <= theta_index; ++k) {
                const auto xk = prefix.state(k);
                if (rule_fires(policy.theta, prefix.mesh, k, prefix.start_index, xk)) {
                    const int cell = owning_cell(policy.cells, prefix.mesh.time(k), xk);
                    if (cell >= 0)
                        return shift_policy(
                            *policy.cell_policies[static_cast<std::size_t>(cell)], theta_index,
                            prefix);
                    // Fired at an uncovered point: the simulation keeps the
                    // base policy there (exit case), so shift the base.
                    return shift_policy(*policy.base, theta_index, prefix);
                }
            }
            ControlPolicy out = policy;
            auto shifted_base = std::make_shared<ControlPolicy>(
                shift_policy(*policy.base, theta_index, prefix));
            out.base = std::move(shifted_base);
            return out;
        }
    }
    return policy;
}

double check_flow_property(const ProblemSpec& spec, int level, double t,
                           std::span<const double> x, const ControlPolicy& policy,
                           const BrownianPath& bp1, const BrownianPath& bp2,
                           int theta_index) {
    if (policy.kind == ControlPolicy::Kind::stitched)
        throw Error("check_flow_property: stitched policies are out of contract");
    const BrownianPath spliced = concatenate(bp1, bp2, theta_index);
    const SamplePath a = simulate(spec, level, t, x, policy, spliced);
    const double t_theta = a.mesh.time(theta_index);
    const ControlPolicy shifted = shift_policy(policy, theta_index, a);
    const SamplePath b = simulate(spec, level, t_theta, a.state(theta_index), shifted, bp2);
    double worst = 0.0;
    for (int k = theta_index; k <= a.mesh.n_steps; ++k) {
        const auto xa = a.state(k);
        const auto xb = b.state(k);
        for (int j = 0; j < a.d; ++j)
            worst = std::fmax(worst, std::fabs(xa[static_cast<std::size_t>(j)] -
                                               xb[static_cast<std::size_t>(j)]));
    }
    return worst;
}

std::vector<ScalingPoint> continuity_scaling_test(
    const ProblemSpec& spec, int level, const ControlPolicy& policy, int q, double t,
    std::span<const double> x, std::span<const Perturbation> perturbations,
    const TimeMesh& mesh, int n_paths, std::uint64_t seed, int workers) {
    const int d = spec.dim_x();
    std::vector<ScalingPoint> out;
    std::vector<double> sups(static_cast<std::size_t>(n_paths));
    for (const Perturbation& pert : perturbations) {
        const double t_base = mesh.time(mesh.snap_down(t));
        const double t_pert = mesh.time(mesh.snap_down(pert.s));
        double h2 = (t_pert - t_base) * (t_pert - t_base);
        for (int j = 0; j < d; ++j) {
            const double dy = pert.y[static_cast<std::size_t>(j)] - x[static_cast<std::size_t>(j)];
            h2 += dy * dy;
        }
        parallel_for(n_paths, workers, [&](long p) {
            const BrownianPath bp =
                sample_brownian(mesh, d, seed, static_cast<std::uint64_t>(p));
            const SamplePath pa = simulate(spec, level, t, x, policy, bp);
            const SamplePath pb = simulate(spec, level, pert.s, pert.y, policy, bp);
            double sup2 = 0.0;
            for (int k = 0; k <= mesh.n_steps; ++k) {
                const auto xa = pa.state(k);
                const auto xb = pb.state(k);
                double dist2 = 0.0;
                for (int j = 0; j < d; ++j) {
                    const double dd =
                        xa[static_cast<std::size_t>(j)] - xb[static_cast<std::size_t>(j)];
                    dist2 += dd * dd;
                }
                sup2 = std::fmax(sup2, dist2);
            }
            sups[static_cast<std::size_t>(p)] = std::pow(sup2, static_cast<double>(q));
        });
        ScalingPoint pt;
        pt.h = std::sqrt(h2);
        pt.m_h = pairwise_sum(sups) / static_cast<double>(n_paths);
        out.push_back(pt);
    }
    return out;
}

void write_path_csv(const SamplePath& path, std::ostream& os) {
    os << "k,t";
    for (int j = 0; j < path.d; ++j) os << ",x" << j + 1;
    for (int j = 0; j < path.m; ++j) os << ",u" << j + 1;
    os << "\n";
    char buf[40];
    for (int k = 0; k <= path.mesh.n_steps; ++k) {
        os << k;
        std::snprintf(buf, sizeof buf, "%.17g", path.mesh.time(k));
        os << "," << buf;
        const auto xk = path.state(k);
        for (int j = 0; j < path.d; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", xk[static_cast<std::size_t>(j)]);
            os << "," << buf;
        }
        if (k < path.mesh.n_steps) {
            const auto uk = path.control(k);
            for (int j = 0; j < path.m; ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", uk[static_cast<std::size_t>(j)]);
                os << "," << buf;
            }
        } else {
            for (int j = 0; j < path.m; ++j) os << ",0";
        }
        os << "\n";
    }
}

}  // namespace exitctl
