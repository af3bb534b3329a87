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

#include "exitctl/dpp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "exitctl/errors.hpp"
#include "exitctl/rng.hpp"

namespace exitctl {

DppReport verify_dpp(const ProblemSpec& spec, double t, std::span<const double> x,
                     const ValueGrid& grid, std::span<const ControlPolicy> policies,
                     std::span<const StoppingRule> rules, const TimeMesh& mc_mesh,
                     const VerifyOptions& opts) {
    if (grid.spec_hash != problem_hash(spec))
        throw HarnessError("value grid was solved for a different problem (hash mismatch)");
    if (policies.empty() || rules.empty())
        throw HarnessError("verification needs at least one policy and one rule");
    if (opts.control_level < 1 ||
        opts.control_level > std::max(spec.control_space.level_count(), 1))
        throw Error("control level out of range");
    const long long n_rows =
        static_cast<long long>(policies.size()) * static_cast<long long>(rules.size());
    if (n_rows > opts.budget_cap / std::max<long long>(opts.n_paths, 1))
        throw HarnessError("verification budget " + std::to_string(n_rows) + " rows x " +
                           std::to_string(opts.n_paths) + " paths exceeds cap " +
                           std::to_string(opts.budget_cap));

    DppReport rep;
    const int start = mc_mesh.snap_down(t);
    rep.v_ref = evaluate(grid, mc_mesh.time(start), x);

    double dx_max = 0.0;
    for (double h : grid.space.dx) dx_max = std::max(dx_max, h);
    rep.eps_disc = opts.c_disc * (std::sqrt(mc_mesh.dt()) + dx_max);

    if (std::isnan(opts.eps_opt)) {
        double pitch = 0.0;
        if (spec.dim_u() > 0) {
            const ControlLevel& level =
                spec.control_space.levels[static_cast<std::size_t>(opts.control_level - 1)];
            for (std::size_t a = 0; a < level.mesh_counts.size(); ++a)
                if (level.mesh_counts[a] > 1)
                    pitch = std::max(pitch, (level.hi[a] - level.lo[a]) /
                                                static_cast<double>(level.mesh_counts[a] - 1));
        }
        rep.eps_opt =
            0.5 * pitch * (spec.horizon - mc_mesh.time(start)) * spec.dim_u();
    } else {
        rep.eps_opt = opts.eps_opt;
    }

    McOptions mc;
    mc.control_level = opts.control_level;
    mc.n_paths = opts.n_paths;
    mc.workers = opts.workers;
    mc.bridge = opts.bridge;
    mc.f_max = opts.f_max;

    ContinuationValue value;
    value.grid = &grid;

    long long row_index = 0;
    for (const ControlPolicy& policy : policies)
        for (const StoppingRule& rule : rules) {
            mc.seed = rng::derive_seed(opts.seed, static_cast<std::uint64_t>(row_index), 0xD);
            const Estimate e =
                estimate_conditional_J(spec, t, x, policy, rule, value, mc_mesh, mc);
            DppRow row;
            row.policy_id = policy.id;
            row.rule_id = rule.id;
            row.estimate = e.mean;
            row.std_error = e.std_error;
            row.slack = rep.v_ref - e.mean;
            row.upper_ok = e.mean <= rep.v_ref + 3.0 * e.std_error + rep.eps_disc;
            row.n_paths = e.n_paths;
            row.seed = e.seed;
            rep.rows.push_back(std::move(row));
            ++row_index;
        }

    rep.upper_ok = true;
    for (const DppRow& row : rep.rows) rep.upper_ok = rep.upper_ok && row.upper_ok;

    // Achievability per rule: the identity holds for every stopping rule
    // separately, so each rule's best supplied policy must reach v_ref.
    rep.achieve_ok = true;
    rep.achieved_gap = 0.0;
    const std::size_t n_rules = rules.size();
    for (std::size_t r = 0; r < n_rules; ++r) {
        const DppRow* best = nullptr;
        for (std::size_t p = 0; p < policies.size(); ++p) {
            const DppRow& row = rep.rows[p * n_rules + r];
            if (!best || row.estimate > best->estimate) best = &row;
        }
        const bool ok = best->estimate >=
                        rep.v_ref - 3.0 * best->std_error - rep.eps_disc - rep.eps_opt;
        rep.achieve_ok = rep.achieve_ok && ok;
        rep.achieved_gap = std::max(rep.achieved_gap, rep.v_ref - best->estimate);
    }
    return rep;
}

std::vector<HalfOpenCell> build_cover(
    const CoverRegion& region, double pitch,
    const std::function<double(double, std::span<const double>)>& radius_fn) {
    const int d = static_cast<int>(region.x_lo.size());
    if (d == 0 || region.x_hi.size() != region.x_lo.size())
        throw Error("cover region needs matching x bounds");
    if (!(pitch > 0.0)) throw Error("cover lattice pitch must be positive");
    if (!(region.t_hi >= region.t_lo)) throw Error("cover region has negative time extent");
    for (int j = 0; j < d; ++j)
        if (!(region.x_hi[static_cast<std::size_t>(j)] >=
              region.x_lo[static_cast<std::size_t>(j)]))
            throw Error("cover region has negative spatial extent");

    const double margin = pitch * (1.0 + std::sqrt(static_cast<double>(d)));

    const auto axis_count = [&](double lo, double hi) {
        return hi > lo ? static_cast<int>(std::ceil((hi - lo) / pitch)) : 0;
    };
    const int nt = axis_count(region.t_lo, region.t_hi);
    std::vector<int> nx(static_cast<std::size_t>(d));
    long long lattice = static_cast<long long>(nt) + 1;
    for (int j = 0; j < d; ++j) {
        nx[static_cast<std::size_t>(j)] = axis_count(region.x_lo[static_cast<std::size_t>(j)],
                                                     region.x_hi[static_cast<std::size_t>(j)]);
        lattice *= nx[static_cast<std::size_t>(j)] + 1;
    }
    if (lattice > 50'000'000) throw HarnessError("cover lattice too fine: raise the pitch");

    std::vector<HalfOpenCell> cells;
    std::vector<double> xq(static_cast<std::size_t>(d));
    std::vector<int> ix(static_cast<std::size_t>(d), 0);

    const auto deep_covered = [&](double tq, std::span<const double> xs) {
        for (const HalfOpenCell& c : cells) {
            if (!(tq > c.t - c.radius + margin && tq <= c.t)) continue;
            double s = 0.0;
            for (int j = 0; j < d; ++j) {
                const double dd = xs[static_cast<std::size_t>(j)] - c.x[static_cast<std::size_t>(j)];
                s += dd * dd;
            }
            const double rr = c.radius - margin;
            if (rr > 0.0 && s < rr * rr) return true;
        }
        return false;
    };

    for (int it = 0; it <= nt; ++it) {
        // Decreasing time: cell anchors never precede the points they own.
        const double tq = nt == 0 ? region.t_hi
                                  : region.t_hi - (region.t_hi - region.t_lo) *
                                                      (static_cast<double>(it) / nt);
        std::fill(ix.begin(), ix.end(), 0);
        for (;;) {
            for (int j = 0; j < d; ++j) {
                const std::size_t k = static_cast<std::size_t>(j);
                xq[k] = nx[k] == 0 ? region.x_lo[k]
                                   : region.x_lo[k] + (region.x_hi[k] - region.x_lo[k]) *
                                                          (static_cast<double>(ix[k]) / nx[k]);
            }
            if (!deep_covered(tq, xq)) {
                const double r = radius_fn(tq, xq);
                if (!(r > margin + pitch)) {
                    std::ostringstream os;
                    os << "cover would not terminate: radius " << r << " at t=" << tq
                       << " does not clear margin " << margin << " + pitch " << pitch;
                    throw HarnessError(os.str());
                }
                HalfOpenCell c;
                c.t = tq;
                c.x = xq;
                c.radius = r;
                cells.push_back(std::move(c));
                if (cells.size() > 1'000'000)
                    throw HarnessError("cover exceeds 1e6 cells: raise radii or the pitch");
            }
            int j = 0;
            for (; j < d; ++j) {
                const std::size_t k = static_cast<std::size_t>(j);
                if (ix[k] < nx[k]) {
                    ++ix[k];
                    break;
                }
                ix[k] = 0;
            }
            if (j == d) break;
        }
    }
    return cells;
}

LscMinorant::LscMinorant(const ValueGrid& grid, double n) : grid_(&grid), n_(n) {
    if (!(n > 0.0)) throw Error("minorant slope must be positive");
    for (int s = 0; s < grid.slice_count(); ++s) slice_times_.push_back(grid.stored_time(s));
}

double LscMinorant::operator()(double t, std::span<const double> x) const {
    const SpaceGrid& g = grid_->space;
    const int d = g.d;
    const long long nodes = g.node_count();
    const int S = static_cast<int>(slice_times_.size());

    // Visit slices by increasing |t - t_s|: once n * |t - t_s| cannot beat
    // the running best, no later slice can either.
    const auto it = std::lower_bound(slice_times_.begin(), slice_times_.end(), t);
    int up = static_cast<int>(it - slice_times_.begin());
    int dn = up - 1;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> xq(static_cast<std::size_t>(d));
    while (up < S || dn >= 0) {
        int s;
        if (dn < 0)
            s = up++;
        else if (up >= S)
            s = dn--;
        else if (t - slice_times_[static_cast<std::size_t>(dn)] <=
                 slice_times_[static_cast<std::size_t>(up)] - t)
            s = dn--;
        else
            s = up++;
        const double dt = t - slice_times_[static_cast<std::size_t>(s)];
        if (n_ * std::fabs(dt) >= best) break;
        for (long long i = 0; i < nodes; ++i) {
            g.node(i, xq);
            double dist2 = dt * dt;
            for (int j = 0; j < d; ++j) {
                const double dd = xq[static_cast<std::size_t>(j)] - x[static_cast<std::size_t>(j)];
                dist2 += dd * dd;
            }
            const double cand = grid_->value(s, i) + n_ * std::sqrt(dist2);
            if (cand < best) best = cand;
        }
    }
    return best;
}

StitchReport stitching_improvement_test(
    const ProblemSpec& spec, double t, std::span<const double> x,
    std::shared_ptr<const ControlPolicy> base, const StoppingRule& theta_rule,
    std::vector<HalfOpenCell> cells,
    std::vector<std::shared_ptr<const ControlPolicy>> cell_policies, const LscMinorant& phi,
    double eps_decl, double tol, const ValueGrid& grid, const TimeMesh& mc_mesh,
    const VerifyOptions& opts) {
    if (grid.spec_hash != problem_hash(spec))
        throw HarnessError("value grid was solved for a different problem (hash mismatch)");
    if (!base) throw Error("stitching test needs a base policy");

    StitchReport rep;
    const int start = mc_mesh.snap_down(t);
    rep.v_ref = evaluate(grid, mc_mesh.time(start), x);
    rep.eps_decl = eps_decl;
    rep.tol = tol;
    rep.n_paths = opts.n_paths;
    rep.seed = opts.seed;

    double dx_max = 0.0;
    for (double h : grid.space.dx) dx_max = std::max(dx_max, h);
    rep.eps_disc = opts.c_disc * (std::sqrt(mc_mesh.dt()) + dx_max);

    McOptions mc;
    mc.control_level = opts.control_level;
    mc.n_paths = opts.n_paths;
    mc.seed = opts.seed;
    mc.workers = opts.workers;
    mc.bridge = false;  // the stitched suffix must see the same exits the rule sees
    mc.f_max = opts.f_max;

    const ControlPolicy stitched =
        make_stitched(base, theta_rule, std::move(cells), std::move(cell_policies), "stitched");
    const Estimate js = estimate_J(spec, t, x, stitched, mc_mesh, mc);
    rep.j_stitched = js.mean;
    rep.j_stitched_se = js.std_error;

    ContinuationValue value;
    value.fn = [&phi](double s, std::span<const double> y) { return phi(s, y); };
    const Estimate rhs = estimate_conditional_J(spec, t, x, *base, theta_rule, value, mc_mesh, mc);
    rep.rhs = rhs.mean;
    rep.rhs_se = rhs.std_error;

    const double band = 3.0 * (js.std_error + rhs.std_error) + rep.eps_disc + tol;
    rep.chain_lower_ok = rep.j_stitched >= rep.rhs - 3.0 * eps_decl - band;
    rep.chain_upper_ok = rep.v_ref >= rep.j_stitched - 3.0 * js.std_error - rep.eps_disc - tol;
    return rep;
}

}  // namespace exitctl
