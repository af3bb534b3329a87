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

// Batch front end.  One subcommand per operation, each driven by a strict
// INI run config; results land in --out as report.json plus any bulk files
// (grids, paths, cover cells).  Wall-clock facts are quarantined in the
// report's "volatile" object, so two runs of one config differ in nothing
// else.  Exit codes: 0 success (and, for verify/cover, all checks green),
// 1 runtime or verification failure, 2 malformed config or usage.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "exitctl/config.hpp"
#include "exitctl/dp.hpp"
#include "exitctl/dpp.hpp"
#include "exitctl/errors.hpp"
#include "exitctl/exit_time.hpp"
#include "exitctl/mesh.hpp"
#include "exitctl/montecarlo.hpp"
#include "exitctl/paths.hpp"
#include "exitctl/policy.hpp"
#include "exitctl/problem.hpp"
#include "exitctl/report.hpp"
#include "exitctl/rng.hpp"
#include "exitctl/stopping.hpp"

namespace {

using namespace exitctl;

class Stopwatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

  private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

struct CommonFlags {
    std::string config;
    std::string out = ".";
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;

    cfg::Overrides overrides() const { return {seed, workers}; }
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& desc,
                      CommonFlags& f) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", f.config, "run configuration file")->required();
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--workers", f.workers, "worker-thread override");
    sub->add_option("--seed", f.seed, "seed override");
    return sub;
}

std::string out_path(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    return (std::filesystem::path(dir) / name).string();
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    return os;
}

void check_grid_matches(const ValueGrid& grid, const ProblemSpec& spec) {
    if (grid.spec_hash != problem_hash(spec))
        throw ConfigError("grid file was solved for a different problem (hash mismatch)");
}

ordered_json start_point_json(double t, std::span<const double> x) {
    ordered_json j;
    j["t"] = t;
    j["x"] = std::vector<double>(x.begin(), x.end());
    return j;
}

/// Solves on the configured mesh when no grid file is given.
ValueGrid obtain_grid(const ProblemSpec& spec, const std::string& grid_file,
                      const cfg::MeshSettings& mesh_cfg, int control_level, int workers) {
    if (!grid_file.empty()) {
        ValueGrid g = read_value_grid_binary(grid_file);
        check_grid_matches(g, spec);
        return g;
    }
    const SpaceGrid sg = make_space_grid(spec.domain, mesh_cfg.nodes, spec.sample_envelope);
    const int n_steps = mesh_cfg.n_steps > 0
                            ? mesh_cfg.n_steps
                            : auto_steps(spec, sg, control_level, mesh_cfg.safety);
    const TimeMesh mesh{0.0, spec.horizon, n_steps};
    SolveOptions so;
    so.control_level = control_level;
    so.max_stored_slices = mesh_cfg.max_stored_slices;
    so.workers = workers;
    return solve(spec, sg, mesh, so);
}

int cmd_check(const CommonFlags& f) {
    const Stopwatch clock;
    const cfg::CheckConfig c = cfg::load_check(f.config, f.overrides());
    const ProblemSpec& spec = c.common.problem;

    const ValidationReport rep = validate(spec);
    LipschitzEstimate lip;
    if (rep.ok()) lip = estimate_lipschitz(spec, c.level, c.samples, c.seed);

    ordered_json body;
    body["command"] = "check";
    body["problem"] = problem_json(spec);
    body["parameters"] = {{"samples", c.samples}, {"level", c.level}, {"seed", c.seed}};
    body["results"] = validation_json(rep, lip);
    body["pass"] = rep.ok();
    write_report(out_path(f.out, "report.json"), body, clock.seconds(), 1);

    if (!rep.ok()) {
        for (const std::string& v : rep.violations) std::cerr << v << "\n";
        return 1;
    }
    std::cout << "validation: ok (k_lip=" << lip.k_lip << ", k_growth=" << lip.k_growth
              << ")\n";
    return 0;
}

int cmd_solve(const CommonFlags& f) {
    const Stopwatch clock;
    const cfg::SolveConfig c = cfg::load_solve(f.config, f.overrides());
    const ProblemSpec& spec = c.common.problem;

    const SpaceGrid sg = make_space_grid(spec.domain, c.mesh.nodes, spec.sample_envelope);
    const int n_steps = c.mesh.n_steps > 0
                            ? c.mesh.n_steps
                            : auto_steps(spec, sg, c.control_level, c.mesh.safety);
    const TimeMesh mesh{0.0, spec.horizon, n_steps};

    SolveOptions so;
    so.control_level = c.control_level;
    so.max_stored_slices = c.mesh.max_stored_slices;
    so.workers = c.workers;
    const ValueGrid grid = solve(spec, sg, mesh, so);

    {
        std::ofstream os = open_out(out_path(f.out, "value_grid.csv"));
        write_value_grid_csv(grid, os);
    }
    write_value_grid_binary(grid, out_path(f.out, "value_grid.bin"));

    ordered_json body;
    body["command"] = "solve";
    body["problem"] = problem_json(spec);
    body["parameters"] = {{"nodes", c.mesh.nodes},
                          {"n_steps", n_steps},
                          {"safety", c.mesh.safety},
                          {"control_level", c.control_level},
                          {"max_stored_slices", c.mesh.max_stored_slices}};
    ordered_json results;
    results["n_nodes"] = grid.space.node_count();
    results["stored_slices"] = grid.slice_count();
    results["cfl_max"] = grid.cfl_max;
    results["truncated_domain"] = grid.space.truncated;
    results["grid_csv"] = "value_grid.csv";
    results["grid_binary"] = "value_grid.bin";
    if (!c.probe_x.empty()) {
        ordered_json probe = start_point_json(c.probe_t, c.probe_x);
        probe["v"] = evaluate(grid, c.probe_t, c.probe_x);
        results["probe"] = probe;
    }
    body["results"] = results;
    body["pass"] = true;
    write_report(out_path(f.out, "report.json"), body, clock.seconds(), c.workers);

    std::cout << "solved " << grid.space.node_count() << " nodes x " << n_steps
              << " steps (cfl_max=" << grid.cfl_max << ")";
    if (!c.probe_x.empty()) std::cout << ", v(probe)=" << evaluate(grid, c.probe_t, c.probe_x);
    std::cout << "\n";
    return 0;
}

int cmd_estimate(const CommonFlags& f) {
    const Stopwatch clock;
    const cfg::EstimateConfig c = cfg::load_estimate(f.config, f.overrides());
    const ProblemSpec& spec = c.common.problem;

    std::optional<ValueGrid> grid;
    if (!c.grid_file.empty()) {
        grid = read_value_grid_binary(c.grid_file);
        check_grid_matches(*grid, spec);
    }
    const ControlPolicy policy = cfg::make_policy(c.policy, spec, grid ? &*grid : nullptr,
                                                  c.control_level, c.mc.seed);

    const TimeMesh mesh{0.0, spec.horizon, c.mc.resolved_steps(spec.horizon)};
    McOptions mo;
    mo.control_level = c.control_level;
    mo.n_paths = c.mc.n_paths;
    mo.seed = c.mc.seed;
    mo.workers = c.mc.workers;
    mo.bridge = c.mc.bridge;
    mo.f_max = c.mc.f_max;
    const Estimate e = estimate_J(spec, c.t, c.x, policy, mesh, mo);

    ordered_json body;
    body["command"] = "estimate";
    body["problem"] = problem_json(spec);
    ordered_json params = start_point_json(c.t, c.x);
    params["policy"] = c.policy;
    params["control_level"] = c.control_level;
    params["n_steps"] = mesh.n_steps;
    params["bridge"] = c.mc.bridge;
    params["f_max"] = c.mc.f_max;
    body["parameters"] = params;
    body["results"] = estimate_json(e);
    body["pass"] = true;
    write_report(out_path(f.out, "report.json"), body, clock.seconds(), c.mc.workers);

    std::printf("J = %.10g +- %.3g (n_paths=%lld, seed=%llu, saturated=%lld)\n", e.mean,
                e.std_error, e.n_paths, static_cast<unsigned long long>(e.seed),
                e.n_saturated);
    return 0;
}

int cmd_simulate(const CommonFlags& f) {
    const Stopwatch clock;
    const cfg::SimulateConfig c = cfg::load_simulate(f.config, f.overrides());
    const ProblemSpec& spec = c.common.problem;
    const int d = spec.dim_x();
    const int m = spec.dim_u();

    std::optional<ValueGrid> grid;
    if (!c.grid_file.empty()) {
        grid = read_value_grid_binary(c.grid_file);
        check_grid_matches(*grid, spec);
    }
    const ControlPolicy policy =
        cfg::make_policy(c.policy, spec, grid ? &*grid : nullptr, c.control_level, c.seed);

    const int n_steps = c.n_steps > 0
                            ? c.n_steps
                            : static_cast<int>(std::ceil(spec.horizon / 1e-3));
    const TimeMesh mesh{0.0, spec.horizon, n_steps};

    std::ofstream os = open_out(out_path(f.out, "paths.csv"));
    os << "path,k,t";
    for (int j = 1; j <= d; ++j) os << ",x" << j;
    for (int j = 1; j <= m; ++j) os << ",u" << j;
    os << ",in_domain\n";

    char num[40];
    auto put = [&](double v) {
        std::snprintf(num, sizeof num, "%.17g", v);
        os << ',' << num;
    };

    double tau_sum = 0.0;
    int n_exited = 0;
    for (int p = 0; p < c.n_paths; ++p) {
        const BrownianPath bp =
            sample_brownian(mesh, d, c.seed, static_cast<std::uint64_t>(p));
        const SamplePath sp = simulate(spec, c.control_level - 1, c.t, c.x, policy, bp);
        const ExitResult er = exit_time(sp, spec.domain, sp.start_index);
        tau_sum += er.tau;
        n_exited += er.exited ? 1 : 0;
        for (int k = sp.start_index; k <= er.tau_index; ++k) {
            os << p << ',' << k;
            put(mesh.time(k));
            const auto xk = sp.state(k);
            for (int j = 0; j < d; ++j) put(xk[static_cast<std::size_t>(j)]);
            // The control applied over [t_k, t_{k+1}); none follows the
            // final row.
            for (int j = 0; j < m; ++j)
                put(k < n_steps ? sp.control(k)[static_cast<std::size_t>(j)] : 0.0);
            os << ',' << (spec.domain.contains(xk) ? 1 : 0) << "\n";
        }
    }

    ordered_json body;
    body["command"] = "simulate";
    body["problem"] = problem_json(spec);
    ordered_json params = start_point_json(c.t, c.x);
    params["policy"] = c.policy;
    params["control_level"] = c.control_level;
    params["n_paths"] = c.n_paths;
    params["n_steps"] = n_steps;
    params["seed"] = c.seed;
    body["parameters"] = params;
    ordered_json results;
    results["paths_csv"] = "paths.csv";
    results["n_exited"] = n_exited;
    results["tau_mean"] = tau_sum / c.n_paths;
    body["results"] = results;
    body["pass"] = true;
    write_report(out_path(f.out, "report.json"), body, clock.seconds(), 1);

    std::cout << "simulated " << c.n_paths << " paths (" << n_exited
              << " exited, mean tau=" << tau_sum / c.n_paths << ")\n";
    return 0;
}

/// Where a stopping rule can fire inside G, as a cover region over the
/// grid's bounding box.  A constant rule fires at exactly one mesh time;
/// anything else may fire anywhere in [t_start, T].
CoverRegion stitch_region(const StoppingRule& theta, const ValueGrid& grid,
                          const TimeMesh& mc_mesh, double t_start) {
    CoverRegion region;
    region.x_lo = grid.space.lo;
    region.x_hi = grid.space.hi;
    if (theta.kind == StoppingRule::Kind::constant) {
        const double t_fire = mc_mesh.time(mc_mesh.snap_down(theta.time));
        region.t_lo = region.t_hi = t_fire;
    } else {
        region.t_lo = t_start;
        region.t_hi = mc_mesh.T;
    }
    return region;
}

int cmd_verify(const CommonFlags& f) {
    const Stopwatch clock;
    const cfg::VerifyConfig c = cfg::load_verify(f.config, f.overrides());
    const ProblemSpec& spec = c.common.problem;

    const ValueGrid grid =
        obtain_grid(spec, c.grid_file, c.mesh, c.control_level, c.mc.workers);

    std::vector<StoppingRule> rules;
    for (const std::string& item : c.rules) rules.push_back(cfg::parse_rule(item, spec));
    std::vector<ControlPolicy> policies;
    for (const std::string& item : c.policies)
        policies.push_back(cfg::make_policy(item, spec, &grid, c.control_level, c.mc.seed));

    const TimeMesh mc_mesh{0.0, spec.horizon, c.mc.resolved_steps(spec.horizon)};
    VerifyOptions vo;
    vo.n_paths = c.mc.n_paths;
    vo.seed = c.mc.seed;
    vo.workers = c.mc.workers;
    vo.control_level = c.control_level;
    vo.bridge = c.mc.bridge;
    vo.f_max = c.mc.f_max;
    vo.c_disc = c.c_disc;
    vo.eps_opt = c.eps_opt;

    const DppReport rep = verify_dpp(spec, c.t, c.x, grid, policies, rules, mc_mesh, vo);
    bool pass = rep.upper_ok && rep.achieve_ok;

    ordered_json body;
    body["command"] = "verify";
    body["problem"] = problem_json(spec);
    ordered_json params = start_point_json(c.t, c.x);
    params["rules"] = c.rules;
    params["policies"] = c.policies;
    params["control_level"] = c.control_level;
    params["n_paths"] = c.mc.n_paths;
    params["mc_steps"] = mc_mesh.n_steps;
    params["seed"] = c.mc.seed;
    params["bridge"] = c.mc.bridge;
    params["c_disc"] = c.c_disc;
    params["grid"] = c.grid_file.empty() ? "inline solve" : c.grid_file;
    body["parameters"] = params;
    body["dpp"] = dpp_report_json(rep);

    std::printf("v_ref=%.6f  eps_disc=%.6f  eps_opt=%.6f\n", rep.v_ref, rep.eps_disc,
                rep.eps_opt);
    for (const DppRow& row : rep.rows)
        std::printf("  %-20s %-16s estimate=%.6f se=%.6f slack=%+.6f %s\n",
                    row.policy_id.c_str(), row.rule_id.c_str(), row.estimate, row.std_error,
                    row.slack, row.upper_ok ? "ok" : "UPPER-FAIL");
    std::printf("upper bound: %s; achievability: %s (worst gap=%.6f)\n",
                rep.upper_ok ? "ok" : "FAIL", rep.achieve_ok ? "ok" : "FAIL",
                rep.achieved_gap);

    if (c.stitch.enabled) {
        const StoppingRule theta = cfg::parse_rule(c.stitch.theta, spec);
        const auto base = std::make_shared<const ControlPolicy>(
            cfg::make_policy(c.stitch.base, spec, &grid, c.control_level, c.mc.seed));
        const LscMinorant phi(grid, c.stitch.minorant_n);

        const CoverRegion region = stitch_region(theta, grid, mc_mesh, c.t);
        const double radius = c.stitch.radius;
        std::vector<HalfOpenCell> cells = build_cover(
            region, c.stitch.pitch,
            [radius](double, std::span<const double>) { return radius; });
        const auto cell_policy =
            std::make_shared<const ControlPolicy>(extract_policy(grid, spec));
        std::vector<std::shared_ptr<const ControlPolicy>> cell_policies(cells.size(),
                                                                        cell_policy);

        VerifyOptions so = vo;
        if (c.stitch.n_paths > 0) so.n_paths = c.stitch.n_paths;
        const StitchReport srep = stitching_improvement_test(
            spec, c.t, c.x, base, theta, std::move(cells), std::move(cell_policies), phi,
            c.stitch.eps_decl, c.stitch.tol, grid, mc_mesh, so);

        body["stitch"] = stitch_report_json(srep);
        pass = pass && srep.chain_lower_ok && srep.chain_upper_ok;
        std::printf("stitch: J=%.6f+-%.6f rhs=%.6f+-%.6f lower=%s upper=%s\n",
                    srep.j_stitched, srep.j_stitched_se, srep.rhs, srep.rhs_se,
                    srep.chain_lower_ok ? "ok" : "FAIL",
                    srep.chain_upper_ok ? "ok" : "FAIL");
    }

    body["pass"] = pass;
    write_report(out_path(f.out, "report.json"), body, clock.seconds(), c.mc.workers);
    std::cout << "verify: " << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 1;
}

int cmd_cover(const CommonFlags& f) {
    const Stopwatch clock;
    const cfg::CoverConfig c = cfg::load_cover(f.config, f.overrides());
    const int d = static_cast<int>(c.region.x_lo.size());

    const double radius = c.radius;
    const std::vector<HalfOpenCell> cells = build_cover(
        c.region, c.pitch, [radius](double, std::span<const double>) { return radius; });

    {
        std::ofstream os = open_out(out_path(f.out, "cover.csv"));
        os << "cell,t";
        for (int j = 1; j <= d; ++j) os << ",x" << j;
        os << ",radius\n";
        char num[40];
        for (std::size_t i = 0; i < cells.size(); ++i) {
            os << i;
            std::snprintf(num, sizeof num, "%.17g", cells[i].t);
            os << ',' << num;
            for (int j = 0; j < d; ++j) {
                std::snprintf(num, sizeof num, "%.17g",
                              cells[i].x[static_cast<std::size_t>(j)]);
                os << ',' << num;
            }
            std::snprintf(num, sizeof num, "%.17g", cells[i].radius);
            os << ',' << num << "\n";
        }
    }

    // Uniform queries over the region; every one must land in some cell.
    long long uncovered = 0;
    std::vector<double> xq(static_cast<std::size_t>(d));
    for (int q = 0; q < c.queries; ++q) {
        const auto stream = static_cast<std::uint64_t>(q);
        const double tq =
            c.region.t_lo + rng::uniform01(c.seed, stream, 0, rng::Purpose::sampling, 0) *
                                (c.region.t_hi - c.region.t_lo);
        for (int j = 0; j < d; ++j) {
            const std::size_t sj = static_cast<std::size_t>(j);
            xq[sj] = c.region.x_lo[sj] +
                     rng::uniform01(c.seed, stream, 0, rng::Purpose::sampling,
                                    static_cast<std::uint32_t>(1 + j)) *
                         (c.region.x_hi[sj] - c.region.x_lo[sj]);
        }
        if (owning_cell(cells, tq, xq) < 0) ++uncovered;
    }

    ordered_json body;
    body["command"] = "cover";
    body["problem"] = problem_json(c.common.problem);
    body["parameters"] = {{"t_lo", c.region.t_lo}, {"t_hi", c.region.t_hi},
                          {"x_lo", c.region.x_lo}, {"x_hi", c.region.x_hi},
                          {"pitch", c.pitch},      {"radius", c.radius},
                          {"queries", c.queries},  {"seed", c.seed}};
    ordered_json results;
    results["n_cells"] = cells.size();
    results["cover_csv"] = "cover.csv";
    results["uncovered_queries"] = uncovered;
    body["results"] = results;
    body["pass"] = uncovered == 0;
    write_report(out_path(f.out, "report.json"), body, clock.seconds(), 1);

    std::cout << "cover: " << cells.size() << " cells, " << c.queries << " queries, "
              << uncovered << " uncovered\n";
    return uncovered == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"controlled exit-time toolkit: solve, estimate, and verify"};
    app.require_subcommand(1);

    CommonFlags check_f, solve_f, estimate_f, simulate_f, verify_f, cover_f;
    const CLI::App* check_cmd = add_command(
        app, "check", "validate a problem file and estimate regularity constants", check_f);
    const CLI::App* solve_cmd =
        add_command(app, "solve", "backward-induction value grid", solve_f);
    const CLI::App* estimate_cmd =
        add_command(app, "estimate", "Monte Carlo value of one policy", estimate_f);
    const CLI::App* simulate_cmd =
        add_command(app, "simulate", "export sample paths as CSV", simulate_f);
    const CLI::App* verify_cmd = add_command(
        app, "verify", "two-sided time-consistency verification", verify_f);
    const CLI::App* cover_cmd =
        add_command(app, "cover", "debug dump of a half-open cover", cover_f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (check_cmd->parsed()) return cmd_check(check_f);
        if (solve_cmd->parsed()) return cmd_solve(solve_f);
        if (estimate_cmd->parsed()) return cmd_estimate(estimate_f);
        if (simulate_cmd->parsed()) return cmd_simulate(simulate_f);
        if (verify_cmd->parsed()) return cmd_verify(verify_f);
        if (cover_cmd->parsed()) return cmd_cover(cover_f);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
