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

#include "exitctl/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "exitctl/errors.hpp"
#include "exitctl/exit_time.hpp"
#include "exitctl/parallel.hpp"
#include "exitctl/reduce.hpp"
#include "exitctl/rng.hpp"

namespace exitctl {

namespace {

constexpr int kMaxDim = 8;

bool const_value(const expr::Expression& e, double* out) {
    if (e.nodes.size() != 1 || e.nodes[0].kind != expr::NodeKind::constant) return false;
    *out = e.nodes[0].value;
    return true;
}

// The bridge's crossing probability assumes one scalar noise intensity, so
// sigma must be a literal constant s > 0 on the diagonal and a literal 0
// off it.
double bridge_sigma(const CoefficientSet& c) {
    double s = 0.0;
    for (int j = 0; j < c.d; ++j)
        for (int l = 0; l < c.d; ++l) {
            double v = 0.0;
            const bool lit =
                const_value(c.sigma[static_cast<std::size_t>(j * c.d + l)], &v);
            if (j == l) {
                if (!lit || !(v > 0.0))
                    throw Error("bridge correction needs constant scalar-diagonal sigma");
                if (j == 0)
                    s = v;
                else if (v != s)
                    throw Error("bridge correction needs constant scalar-diagonal sigma");
            } else if (!lit || v != 0.0) {
                throw Error("bridge correction needs constant scalar-diagonal sigma");
            }
        }
    return s;
}

struct PathOutcome {
    double payoff = 0.0;  // left-endpoint quadrature of f over [start, stop)
    int stop_k = 0;
    bool exited = false;  // stopped by leaving G (grid-point or bridge detection)
    long long saturated = 0;
    double x_stop[kMaxDim] = {};
};

// One path, noise regenerated from (seed, path_index).  Stops at the first
// of: horizon, state outside G, rule fired, bridge crossing.  The exit
// check precedes the rule check at equal k, which realizes theta = rule ^
// tau without a separate clipping pass.
PathOutcome run_path(const ProblemSpec& spec, int level, const TimeMesh& mesh,
                     int start_index, std::span<const double> x0,
                     const ControlPolicy& policy, const StoppingRule* rule, bool bridge,
                     double inv_var, double f_max, std::uint64_t seed,
                     std::uint64_t path_index) {
    const int d = spec.dim_x();
    const int m = spec.dim_u();
    const int n = mesh.n_steps;
    const double dt = mesh.dt();
    const double sqrt_dt = std::sqrt(dt);

    double x[kMaxDim], xn[kMaxDim], dw[kMaxDim];
    std::copy(x0.begin(), x0.end(), x);
    std::vector<double> u(static_cast<std::size_t>(m));
    std::vector<double> d_now, d_next;
    PolicyState st;
    PathOutcome out;

    for (int k = start_index;; ++k) {
        const std::span<const double> xs{x, static_cast<std::size_t>(d)};
        if (k == n) {
            out.stop_k = n;
            break;
        }
        if (!spec.domain.contains(xs)) {
            out.stop_k = k;
            out.exited = true;
            break;
        }
        if (rule && rule_fires(*rule, mesh, k, start_index, xs)) {
            out.stop_k = k;
            break;
        }
        const double t_k = mesh.time(k);
        policy_control(policy, st, spec, level, mesh, k, start_index, xs,
                       {u.data(), u.size()});
        double fv = expr::eval(spec.coefficients.f, t_k, xs, u);
        if (fv > f_max) {
            fv = f_max;
            ++out.saturated;
        }
        out.payoff += fv * dt;
        brownian_increment(seed, path_index, k, d, sqrt_dt, dw);
        euler_step(spec.coefficients, t_k, dt, xs, u, dw, {xn, static_cast<std::size_t>(d)});
        for (int j = 0; j < d; ++j)
            if (!std::isfinite(xn[j]))
                throw SimulationError("non-finite state (blow-up) at step " + std::to_string(k),
                                      k);
        if (bridge) {
            const std::span<const double> xns{xn, static_cast<std::size_t>(d)};
            const double p_cross =
                bridge_crossing_probability(spec.domain, xs, xns, inv_var, d_now, d_next);
            const double u01 = rng::uniform01(seed, path_index, static_cast<std::uint32_t>(k),
                                              rng::Purpose::bridge, 0);
            if (u01 < p_cross) {
                std::copy(xn, xn + d, x);
                out.stop_k = k + 1;
                out.exited = true;
                break;
            }
        }
        std::copy(xn, xn + d, x);
    }
    std::copy(x, x + d, out.x_stop);
    return out;
}

[[noreturn]] void rethrow_with_path(long long p) {
    const std::string tag = " [path " + std::to_string(p) + "]";
    try {
        throw;
    } catch (const SimulationError& e) {
        throw SimulationError(e.what() + tag, e.step_index);
    } catch (const HarnessError& e) {
        throw HarnessError(e.what() + tag);
    } catch (const Error& e) {
        throw Error(e.what() + tag);
    }
}

void check_inputs(const ProblemSpec& spec, double t, std::span<const double> x,
                  const TimeMesh& mesh, const McOptions& opts) {
    if (mesh.t0 != 0.0 || mesh.T != spec.horizon)
        throw Error("estimator mesh must span [0, T]");
    if (spec.dim_x() > kMaxDim) throw Error("estimators support at most 8 state dimensions");
    if (static_cast<int>(x.size()) != spec.dim_x())
        throw Error("start point dimension mismatch");
    if (!(t >= 0.0 && t <= spec.horizon)) throw Error("start time outside [0, T]");
    if (opts.n_paths < 1) throw Error("n_paths must be positive");
    // Control-free problems act as one empty level.
    const int max_level = std::max(spec.control_space.level_count(), 1);
    if (opts.control_level < 1 || opts.control_level > max_level)
        throw Error("control level out of range");
}

Estimate finish(std::vector<double>& results, std::vector<long long>& sat,
                const McOptions& opts, std::vector<double>* per_path) {
    Estimate e;
    const MeanStderr ms = anchored_mean_stderr(results);
    e.mean = ms.mean;
    e.std_error = ms.std_error;
    e.n_paths = opts.n_paths;
    e.seed = opts.seed;
    for (long long s : sat) e.n_saturated += s;
    if (per_path) *per_path = std::move(results);
    return e;
}

}  // namespace

Estimate estimate_J(const ProblemSpec& spec, double t, std::span<const double> x,
                    const ControlPolicy& policy, const TimeMesh& mesh, const McOptions& opts,
                    std::vector<double>* per_path) {
    check_inputs(spec, t, x, mesh, opts);
    const int start = mesh.snap_down(t);
    double inv_var = 0.0;
    if (opts.bridge) {
        const double s = bridge_sigma(spec.coefficients);
        inv_var = 1.0 / (s * s * mesh.dt());
    }
    std::vector<double> results(static_cast<std::size_t>(opts.n_paths), 0.0);
    std::vector<long long> sat(static_cast<std::size_t>(opts.n_paths), 0);
    parallel_for(opts.n_paths, opts.workers, [&](long long p) {
        try {
            const PathOutcome o =
                run_path(spec, opts.control_level - 1, mesh, start, x, policy, nullptr,
                         opts.bridge, inv_var, opts.f_max, opts.seed,
                         static_cast<std::uint64_t>(p));
            results[static_cast<std::size_t>(p)] = o.payoff;
            sat[static_cast<std::size_t>(p)] = o.saturated;
        } catch (...) {
            rethrow_with_path(p);
        }
    });
    return finish(results, sat, opts, per_path);
}

Estimate estimate_conditional_J(const ProblemSpec& spec, double t, std::span<const double> x,
                                const ControlPolicy& policy, const StoppingRule& rule,
                                const ContinuationValue& value, const TimeMesh& mesh,
                                const McOptions& opts, std::vector<double>* per_path) {
    check_inputs(spec, t, x, mesh, opts);
    const int start = mesh.snap_down(t);
    const int d = spec.dim_x();

    if ((value.grid != nullptr) + (value.n_inner > 0) + (value.fn != nullptr) > 1)
        throw Error("continuation value: at most one of grid, nested, fn");
    if (value.grid && value.grid->spec_hash != problem_hash(spec))
        throw HarnessError("value grid was solved for a different problem (hash mismatch)");

    std::vector<double> results(static_cast<std::size_t>(opts.n_paths), 0.0);
    std::vector<long long> sat(static_cast<std::size_t>(opts.n_paths), 0);

    if (value.n_inner > 0) {
        // Two-level mode: the inner estimate replaces the continuation
        // value.  Exits are detected at grid points only here, and the
        // policy is shifted so it sees the suffix exactly as the original
        // policy would have seen the full path.
        if (opts.n_paths > opts.nested_budget_cap / value.n_inner)
            throw HarnessError("nested budget " + std::to_string(opts.n_paths) + " x " +
                               std::to_string(value.n_inner) + " paths exceeds cap " +
                               std::to_string(opts.nested_budget_cap));
        const double dt = mesh.dt();
        parallel_for(opts.n_paths, opts.workers, [&](long long p) {
            try {
                const BrownianPath bp =
                    sample_brownian(mesh, d, opts.seed, static_cast<std::uint64_t>(p));
                const SamplePath path =
                    simulate(spec, opts.control_level - 1, t, x, policy, bp);
                const int theta = realize_stopping(rule, path, spec.domain);
                double acc = 0.0;
                long long nsat = 0;
                for (int k = start; k < theta; ++k) {
                    double fv = expr::eval(spec.coefficients.f, mesh.time(k), path.state(k),
                                           path.control(k));
                    if (fv > opts.f_max) {
                        fv = opts.f_max;
                        ++nsat;
                    }
                    acc += fv * dt;
                }
                double vterm = 0.0;
                if (theta < mesh.n_steps && spec.domain.contains(path.state(theta))) {
                    const ControlPolicy shifted = shift_policy(policy, theta, path);
                    McOptions inner = opts;
                    inner.n_paths = value.n_inner;
                    inner.seed = rng::derive_seed(opts.seed, static_cast<std::uint64_t>(p), 1);
                    inner.workers = 1;
                    inner.bridge = false;
                    const Estimate ie = estimate_J(spec, mesh.time(theta), path.state(theta),
                                                   shifted, mesh, inner);
                    vterm = ie.mean;
                    nsat += ie.n_saturated;
                }
                results[static_cast<std::size_t>(p)] = acc + vterm;
                sat[static_cast<std::size_t>(p)] = nsat;
            } catch (...) {
                rethrow_with_path(p);
            }
        });
        return finish(results, sat, opts, per_path);
    }

    double inv_var = 0.0;
    if (opts.bridge) {
        const double s = bridge_sigma(spec.coefficients);
        inv_var = 1.0 / (s * s * mesh.dt());
    }
    parallel_for(opts.n_paths, opts.workers, [&](long long p) {
        try {
            const PathOutcome o =
                run_path(spec, opts.control_level - 1, mesh, start, x, policy, &rule,
                         opts.bridge, inv_var, opts.f_max, opts.seed,
                         static_cast<std::uint64_t>(p));
            double vterm = 0.0;
            // An exited path contributes no continuation value: at a
            // grid-point exit the state is outside G (where v = 0), and a
            // bridge detection certifies a crossing even when the endpoint
            // landed back inside.
            if (!o.exited) {
                const std::span<const double> xs{o.x_stop, static_cast<std::size_t>(d)};
                if (value.grid)
                    vterm = evaluate(*value.grid, mesh.time(o.stop_k), xs);
                else if (value.fn)
                    vterm = value.fn(mesh.time(o.stop_k), xs);
            }
            results[static_cast<std::size_t>(p)] = o.payoff + vterm;
            sat[static_cast<std::size_t>(p)] = o.saturated;
        } catch (...) {
            rethrow_with_path(p);
        }
    });
    return finish(results, sat, opts, per_path);
}

namespace {

// Per-point min and max over the closed metric ball of radius r in
// (t, x1..xd), scanned over the stored lattice.
struct BallScan {
    std::vector<double> lo;
    std::vector<double> hi;
};

BallScan ball_scan(const ValueGrid& grid, double r) {
    const SpaceGrid& g = grid.space;
    const int d = g.d;
    const int S = grid.slice_count();
    const long long N = g.node_count();
    std::vector<double> times(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) times[static_cast<std::size_t>(s)] = grid.stored_time(s);

    BallScan out;
    out.lo.resize(grid.values.size());
    out.hi.resize(grid.values.size());

    std::vector<int> idx(static_cast<std::size_t>(d));
    std::vector<int> off(static_cast<std::size_t>(d));
    std::vector<int> reach(static_cast<std::size_t>(d));

    for (int s = 0; s < S; ++s) {
        int s_lo = s, s_hi = s;
        while (s_lo > 0 && times[static_cast<std::size_t>(s)] -
                                   times[static_cast<std::size_t>(s_lo - 1)] <=
                               r)
            --s_lo;
        while (s_hi + 1 < S && times[static_cast<std::size_t>(s_hi + 1)] -
                                       times[static_cast<std::size_t>(s)] <=
                                   r)
            ++s_hi;
        for (long long i = 0; i < N; ++i) {
            long long rem = i;
            for (int j = 0; j < d; ++j) {
                idx[static_cast<std::size_t>(j)] =
                    static_cast<int>(rem % g.n[static_cast<std::size_t>(j)]);
                rem /= g.n[static_cast<std::size_t>(j)];
            }
            double vmin = grid.value(s, i);
            double vmax = vmin;
            for (int s2 = s_lo; s2 <= s_hi; ++s2) {
                const double dts = times[static_cast<std::size_t>(s2)] -
                                   times[static_cast<std::size_t>(s)];
                const double budget2 = r * r - dts * dts;
                if (budget2 < 0.0) continue;
                bool nonempty = true;
                for (int j = 0; j < d; ++j) {
                    reach[static_cast<std::size_t>(j)] = static_cast<int>(
                        std::floor(std::sqrt(budget2) / g.dx[static_cast<std::size_t>(j)]));
                    off[static_cast<std::size_t>(j)] = -reach[static_cast<std::size_t>(j)];
                }
                // Odometer over the spatial offset box.
                while (nonempty) {
                    double dist2 = dts * dts;
                    long long flat = 0;
                    long long stride = 1;
                    bool in_grid = true;
                    for (int j = 0; j < d; ++j) {
                        const int oj = off[static_cast<std::size_t>(j)];
                        const int ij = idx[static_cast<std::size_t>(j)] + oj;
                        if (ij < 0 || ij >= g.n[static_cast<std::size_t>(j)]) {
                            in_grid = false;
                            break;
                        }
                        const double dd =
                            static_cast<double>(oj) * g.dx[static_cast<std::size_t>(j)];
                        dist2 += dd * dd;
                        flat += static_cast<long long>(ij) * stride;
                        stride *= g.n[static_cast<std::size_t>(j)];
                    }
                    if (in_grid && dist2 <= r * r) {
                        const double v = grid.value(s2, flat);
                        if (v < vmin) vmin = v;
                        if (v > vmax) vmax = v;
                    }
                    int j = 0;
                    for (; j < d; ++j) {
                        if (off[static_cast<std::size_t>(j)] <
                            reach[static_cast<std::size_t>(j)]) {
                            ++off[static_cast<std::size_t>(j)];
                            break;
                        }
                        off[static_cast<std::size_t>(j)] = -reach[static_cast<std::size_t>(j)];
                    }
                    if (j == d) nonempty = false;
                }
            }
            const std::size_t at = static_cast<std::size_t>(s) * static_cast<std::size_t>(N) +
                                   static_cast<std::size_t>(i);
            out.lo[at] = vmin;
            out.hi[at] = vmax;
        }
    }
    return out;
}

}  // namespace

LscReport lsc_envelope(const ValueGrid& grid, std::span<const double> radii, double tol) {
    if (radii.empty()) throw Error("lsc envelope needs at least one radius");
    double r = radii[0];
    for (double q : radii) r = std::min(r, q);
    if (!(r > 0.0)) throw Error("lsc envelope radii must be positive");

    LscReport rep;
    rep.radius = r;
    const BallScan scan = ball_scan(grid, r);
    rep.envelope = scan.lo;
    const long long N = grid.space.node_count();
    for (int s = 0; s < grid.slice_count(); ++s)
        for (long long i = 0; i < N; ++i) {
            const std::size_t at = static_cast<std::size_t>(s) * static_cast<std::size_t>(N) +
                                   static_cast<std::size_t>(i);
            const double v = grid.values[at];
            if (rep.envelope[at] < v - tol)
                rep.violations.push_back({s, i, v, rep.envelope[at]});
        }
    return rep;
}

double grid_modulus(const ValueGrid& grid, double radius) {
    if (!(radius > 0.0)) throw Error("grid modulus radius must be positive");
    const BallScan scan = ball_scan(grid, radius);
    double m = 0.0;
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        const double v = grid.values[i];
        m = std::max(m, std::max(v - scan.lo[i], scan.hi[i] - v));
    }
    return m;
}

}  // namespace exitctl
