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

#include "exitctl/config.hpp"

#include <cmath>
#include <sstream>

#include "exitctl/errors.hpp"
#include "exitctl/ini.hpp"

namespace exitctl::cfg {

namespace {

std::string dir_of(const std::string& path) {
    const std::size_t cut = path.find_last_of('/');
    return cut == std::string::npos ? std::string(".") : path.substr(0, cut);
}

Common load_common(ini::Reader& r, const std::string& config_path) {
    Common c;
    c.config_dir = dir_of(config_path);
    c.problem_path = resolve_path(c.config_dir, r.get_string("problem", "file"));
    c.problem = parse_problem(ini::load(c.problem_path));
    return c;
}

void require_valid(const ProblemSpec& spec) {
    const ValidationReport rep = validate(spec);
    if (!rep.ok())
        throw Error("problem validation failed: " + rep.violations.front() +
                    (rep.violations.size() > 1
                         ? " (+" + std::to_string(rep.violations.size() - 1) + " more)"
                         : ""));
}

MeshSettings read_mesh(ini::Reader& r, const ProblemSpec& spec) {
    MeshSettings m;
    const std::vector<double> nodes = r.get_vector("mesh", "nodes");
    if (static_cast<int>(nodes.size()) != spec.dim_x())
        throw ConfigError(r.origin() + ": [mesh] nodes needs one count per axis");
    for (double v : nodes) {
        if (v < 2.0 || v != std::floor(v))
            throw ConfigError(r.origin() + ": [mesh] nodes must be integers >= 2");
        m.nodes.push_back(static_cast<int>(v));
    }
    m.n_steps = static_cast<int>(r.get_int_or("mesh", "n_steps", 0));
    if (m.n_steps < 0) throw ConfigError(r.origin() + ": [mesh] n_steps must be >= 0");
    m.safety = r.get_double_or("mesh", "safety", 1.0);
    if (!(m.safety > 0.0 && m.safety <= 1.0))
        throw ConfigError(r.origin() + ": [mesh] safety must lie in (0, 1]");
    m.max_stored_slices = static_cast<int>(r.get_int_or("mesh", "max_stored_slices", 2001));
    if (m.max_stored_slices < 2)
        throw ConfigError(r.origin() + ": [mesh] max_stored_slices must be >= 2");
    return m;
}

McSettings read_mc(ini::Reader& r, const Overrides& ov) {
    McSettings m;
    m.n_paths = r.get_int_or("mc", "n_paths", 10000);
    if (m.n_paths < 1) throw ConfigError(r.origin() + ": [mc] n_paths must be positive");
    m.n_steps = static_cast<int>(r.get_int_or("mc", "n_steps", 0));
    if (m.n_steps < 0) throw ConfigError(r.origin() + ": [mc] n_steps must be >= 0");
    m.seed = ov.seed ? *ov.seed : r.get_uint64("mc", "seed");
    if (ov.seed) r.get_string_or("mc", "seed", "");  // consume the file key if present
    m.workers = ov.workers ? *ov.workers
                           : static_cast<int>(r.get_int_or("mc", "workers", 1));
    if (ov.workers) r.get_string_or("mc", "workers", "");
    if (m.workers < 1) throw ConfigError(r.origin() + ": [mc] workers must be positive");
    m.bridge = r.get_bool_or("mc", "bridge", false);
    m.f_max = r.get_double_or("mc", "f_max", 1e12);
    if (!(m.f_max > 0.0)) throw ConfigError(r.origin() + ": [mc] f_max must be positive");
    return m;
}

int read_control_level(ini::Reader& r, const ProblemSpec& spec) {
    const int level = static_cast<int>(r.get_int_or("control", "level", 1));
    if (level < 1 || level > std::max(spec.control_space.level_count(), 1))
        throw ConfigError(r.origin() + ": [control] level out of range");
    return level;
}

}  // namespace

int McSettings::resolved_steps(double horizon) const {
    if (n_steps > 0) return n_steps;
    return static_cast<int>(std::ceil(horizon / 1e-3));
}

std::string resolve_path(const std::string& dir, const std::string& path) {
    if (path.empty() || path.front() == '/') return path;
    return dir + "/" + path;
}

std::vector<std::string> split_items(const std::string& text) {
    std::vector<std::string> items;
    std::istringstream is(text);
    std::string item;
    while (is >> item) items.push_back(item);
    return items;
}

StoppingRule parse_rule(const std::string& item, const ProblemSpec& spec) {
    const std::size_t cut = item.find(':');
    const std::string head = item.substr(0, cut);
    const std::string args = cut == std::string::npos ? "" : item.substr(cut + 1);
    if (head == "const") {
        try {
            return constant_rule(std::stod(args));
        } catch (const std::exception&) {
            throw ConfigError("rule '" + item + "': expected const:<time>");
        }
    }
    if (head == "hit_box") {
        Domain sub;
        sub.kind = DomainKind::box;
        sub.d = spec.dim_x();
        std::istringstream is(args);
        std::string pair;
        while (std::getline(is, pair, ';')) {
            double lo = 0.0, hi = 0.0;
            char comma = 0;
            std::istringstream ps(pair);
            if (!(ps >> lo >> comma >> hi) || comma != ',')
                throw ConfigError("rule '" + item + "': expected hit_box:lo,hi[;lo,hi...]");
            sub.box_lo.push_back(lo);
            sub.box_hi.push_back(hi);
        }
        if (static_cast<int>(sub.box_lo.size()) != spec.dim_x())
            throw ConfigError("rule '" + item + "': needs one lo,hi pair per axis");
        return first_hit_rule(std::move(sub));
    }
    throw ConfigError("unknown rule '" + item + "' (try const:<t> or hit_box:lo,hi)");
}

ControlPolicy make_policy(const std::string& item, const ProblemSpec& spec,
                          const ValueGrid* grid, int control_level, std::uint64_t seed) {
    const std::size_t cut = item.find(':');
    const std::string head = item.substr(0, cut);
    const std::string args = cut == std::string::npos ? "" : item.substr(cut + 1);
    if (head == "zero") return make_zero_policy(spec);
    if (head == "constant") {
        std::vector<double> u;
        std::istringstream is(args);
        std::string tok;
        while (std::getline(is, tok, ',')) {
            try {
                u.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw ConfigError("policy '" + item + "': expected constant:u1[,u2...]");
            }
        }
        if (static_cast<int>(u.size()) != spec.dim_u())
            throw ConfigError("policy '" + item + "': needs one value per control axis");
        return make_constant_policy(spec, u, item);
    }
    if (head == "feedback") {
        std::vector<expr::Expression> g;
        std::istringstream is(args);
        std::string src;
        while (std::getline(is, src, ';')) {
            try {
                g.push_back(expr::parse(src, spec.dim_x(), 0));
            } catch (const ExprError& e) {
                throw ConfigError("policy '" + item + "': " + e.what());
            }
        }
        if (static_cast<int>(g.size()) != spec.dim_u())
            throw ConfigError("policy '" + item + "': needs one expression per control axis");
        return make_feedback(std::move(g), item);
    }
    if (head == "random") {
        int index = 0;
        try {
            index = std::stoi(args);
        } catch (const std::exception&) {
            throw ConfigError("policy '" + item + "': expected random:<index>");
        }
        return random_feedback(spec, control_level - 1, seed, index);
    }
    if (head == "argmax") {
        if (!grid)
            throw ConfigError("policy 'argmax' needs a solved value grid (grid = <file> or "
                              "an inline [mesh] solve)");
        return extract_policy(*grid, spec);
    }
    throw ConfigError("unknown policy '" + item +
                      "' (try zero, constant:u, feedback:expr, random:k, argmax)");
}

CheckConfig load_check(const std::string& path, const Overrides& ov) {
    const ini::File file = ini::load(path);
    ini::Reader r(file);
    CheckConfig c;
    c.common = load_common(r, path);
    c.seed = ov.seed ? *ov.seed : r.get_uint64("check", "seed");
    if (ov.seed) r.get_string_or("check", "seed", "");
    c.samples = static_cast<int>(r.get_int_or("check", "samples", 256));
    if (c.samples < 1) throw ConfigError(r.origin() + ": [check] samples must be positive");
    c.level = static_cast<int>(
        r.get_int_or("check", "level", std::max(c.common.problem.control_space.level_count(), 1)));
    if (c.level < 1 || c.level > std::max(c.common.problem.control_space.level_count(), 1))
        throw ConfigError(r.origin() + ": [check] level out of range");
    r.finish();
    return c;
}

SolveConfig load_solve(const std::string& path, const Overrides& ov) {
    const ini::File file = ini::load(path);
    ini::Reader r(file);
    SolveConfig c;
    c.common = load_common(r, path);
    require_valid(c.common.problem);
    c.mesh = read_mesh(r, c.common.problem);
    c.control_level = read_control_level(r, c.common.problem);
    c.workers = ov.workers ? *ov.workers
                           : static_cast<int>(r.get_int_or("solve", "workers", 1));
    if (ov.workers) r.get_string_or("solve", "workers", "");
    if (c.workers < 1) throw ConfigError(r.origin() + ": [solve] workers must be positive");
    c.probe_t = r.get_double_or("solve", "probe_t", 0.0);
    if (r.has("solve", "probe_x")) c.probe_x = r.get_vector("solve", "probe_x");
    if (!c.probe_x.empty() &&
        static_cast<int>(c.probe_x.size()) != c.common.problem.dim_x())
        throw ConfigError(r.origin() + ": [solve] probe_x dimension mismatch");
    r.touch_section("solve");
    r.finish();
    return c;
}

EstimateConfig load_estimate(const std::string& path, const Overrides& ov) {
    const ini::File file = ini::load(path);
    ini::Reader r(file);
    EstimateConfig c;
    c.common = load_common(r, path);
    require_valid(c.common.problem);
    c.mc = read_mc(r, ov);
    c.control_level = read_control_level(r, c.common.problem);
    c.t = r.get_double("estimate", "t");
    c.x = r.get_vector("estimate", "x");
    if (static_cast<int>(c.x.size()) != c.common.problem.dim_x())
        throw ConfigError(r.origin() + ": [estimate] x needs one coordinate per state axis");
    c.policy = r.get_string("estimate", "policy");
    c.grid_file = resolve_path(c.common.config_dir, r.get_string_or("estimate", "grid", ""));
    r.finish();
    return c;
}

SimulateConfig load_simulate(const std::string& path, const Overrides& ov) {
    const ini::File file = ini::load(path);
    ini::Reader r(file);
    SimulateConfig c;
    c.common = load_common(r, path);
    require_valid(c.common.problem);
    c.control_level = read_control_level(r, c.common.problem);
    c.n_paths = static_cast<int>(r.get_int_or("simulate", "n_paths", 1));
    if (c.n_paths < 1) throw ConfigError(r.origin() + ": [simulate] n_paths must be positive");
    c.n_steps = static_cast<int>(r.get_int_or("simulate", "n_steps", 0));
    c.seed = ov.seed ? *ov.seed : r.get_uint64("simulate", "seed");
    if (ov.seed) r.get_string_or("simulate", "seed", "");
    c.t = r.get_double("simulate", "t");
    c.x = r.get_vector("simulate", "x");
    if (static_cast<int>(c.x.size()) != c.common.problem.dim_x())
        throw ConfigError(r.origin() + ": [simulate] x needs one coordinate per state axis");
    c.policy = r.get_string("simulate", "policy");
    c.grid_file = resolve_path(c.common.config_dir, r.get_string_or("simulate", "grid", ""));
    r.finish();
    return c;
}

VerifyConfig load_verify(const std::string& path, const Overrides& ov) {
    const ini::File file = ini::load(path);
    ini::Reader r(file);
    VerifyConfig c;
    c.common = load_common(r, path);
    require_valid(c.common.problem);
    c.grid_file = resolve_path(c.common.config_dir, r.get_string_or("verify", "grid", ""));
    if (c.grid_file.empty()) c.mesh = read_mesh(r, c.common.problem);
    c.mc = read_mc(r, ov);
    c.control_level = read_control_level(r, c.common.problem);
    c.t = r.get_double("verify", "t");
    c.x = r.get_vector("verify", "x");
    if (static_cast<int>(c.x.size()) != c.common.problem.dim_x())
        throw ConfigError(r.origin() + ": [verify] x needs one coordinate per state axis");
    c.rules = split_items(r.get_string("verify", "rules"));
    c.policies = split_items(r.get_string("verify", "policies"));
    if (c.rules.empty() || c.policies.empty())
        throw ConfigError(r.origin() + ": [verify] rules and policies must be nonempty");
    c.c_disc = r.get_double_or("verify", "c_disc", kDiscretizationC);
    if (r.has("verify", "eps_opt")) c.eps_opt = r.get_double("verify", "eps_opt");

    c.stitch.enabled = r.get_bool_or("stitch", "enabled", false);
    if (c.stitch.enabled) {
        c.stitch.base = r.get_string_or("stitch", "base", "zero");
        c.stitch.theta = r.get_string("stitch", "theta");
        c.stitch.radius = r.get_double("stitch", "radius");
        c.stitch.pitch = r.get_double("stitch", "pitch");
        c.stitch.minorant_n = r.get_double_or("stitch", "minorant_n", 20.0);
        c.stitch.eps_decl = r.get_double("stitch", "eps_decl");
        c.stitch.tol = r.get_double("stitch", "tol");
        c.stitch.n_paths = r.get_int_or("stitch", "n_paths", 0);
        if (!(c.stitch.radius > 0.0) || !(c.stitch.pitch > 0.0))
            throw ConfigError(r.origin() + ": [stitch] radius and pitch must be positive");
    } else {
        r.touch_section("stitch");
    }
    r.finish();
    return c;
}

CoverConfig load_cover(const std::string& path, const Overrides& ov) {
    const ini::File file = ini::load(path);
    ini::Reader r(file);
    CoverConfig c;
    c.common = load_common(r, path);
    c.region.t_lo = r.get_double("cover", "t_lo");
    c.region.t_hi = r.get_double("cover", "t_hi");
    c.region.x_lo = r.get_vector("cover", "x_lo");
    c.region.x_hi = r.get_vector("cover", "x_hi");
    if (c.region.x_lo.empty() || c.region.x_lo.size() != c.region.x_hi.size())
        throw ConfigError(r.origin() + ": [cover] x_lo and x_hi need matching nonempty sizes");
    if (!(c.region.t_hi >= c.region.t_lo))
        throw ConfigError(r.origin() + ": [cover] t_hi must not precede t_lo");
    c.pitch = r.get_double("cover", "pitch");
    c.radius = r.get_double("cover", "radius");
    c.queries = static_cast<int>(r.get_int_or("cover", "queries", 0));
    c.seed = ov.seed ? *ov.seed : r.get_uint64("cover", "seed");
    if (ov.seed) r.get_string_or("cover", "seed", "");
    r.finish();
    return c;
}

}  // namespace exitctl::cfg
