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

#include "exitctl/problem.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "exitctl/errors.hpp"
#include "exitctl/ini.hpp"
#include "exitctl/rng.hpp"

namespace exitctl {

namespace {

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double c : v) s += c * c;
    return std::sqrt(s);
}

void append_num(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

void append_vec(std::ostream& os, std::span<const double> v) {
    os << "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << " ";
        append_num(os, v[i]);
    }
    os << "]";
}

std::string point_text(double t, std::span<const double> x, std::span<const double> u) {
    std::ostringstream os;
    os << "(t=";
    append_num(os, t);
    os << ", x=";
    append_vec(os, x);
    os << ", u=";
    append_vec(os, u);
    os << ")";
    return os.str();
}

}  // namespace

double ControlSpace::axis_point(int level, int axis, int i) const {
    const ControlLevel& L = levels[static_cast<std::size_t>(level)];
    const double lo = L.lo[static_cast<std::size_t>(axis)];
    const double hi = L.hi[static_cast<std::size_t>(axis)];
    const int n = L.mesh_counts[static_cast<std::size_t>(axis)];
    if (n == 1) return 0.5 * (lo + hi);
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

long long ControlSpace::mesh_size(int level) const {
    if (m == 0) return 1;
    const ControlLevel& L = levels[static_cast<std::size_t>(level)];
    long long n = 1;
    for (int c : L.mesh_counts) n *= c;
    return n;
}

void ControlSpace::mesh_point(int level, long long flat, std::span<double> out) const {
    if (m == 0) return;
    const ControlLevel& L = levels[static_cast<std::size_t>(level)];
    for (int j = 0; j < m; ++j) {
        const int c = L.mesh_counts[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(j)] = axis_point(level, j, static_cast<int>(flat % c));
        flat /= c;
    }
}

void ControlSpace::clamp(int level, std::span<double> u) const {
    if (m == 0) return;
    const ControlLevel& L = levels[static_cast<std::size_t>(level)];
    for (int j = 0; j < m; ++j) {
        const std::size_t k = static_cast<std::size_t>(j);
        if (u[k] < L.lo[k]) u[k] = L.lo[k];
        if (u[k] > L.hi[k]) u[k] = L.hi[k];
    }
}

bool ControlSpace::level_contains(int level, std::span<const double> u) const {
    if (m == 0) return true;
    const ControlLevel& L = levels[static_cast<std::size_t>(level)];
    for (int j = 0; j < m; ++j) {
        const std::size_t k = static_cast<std::size_t>(j);
        if (u[k] < L.lo[k] || u[k] > L.hi[k]) return false;
    }
    return true;
}

bool Domain::contains(std::span<const double> x) const {
    switch (kind) {
        case DomainKind::box:
            for (int j = 0; j < d; ++j) {
                const std::size_t k = static_cast<std::size_t>(j);
                if (!(x[k] > box_lo[k] && x[k] < box_hi[k])) return false;
            }
            return true;
        case DomainKind::ball: {
            double s = 0.0;
            for (int j = 0; j < d; ++j) {
                const double dx = x[static_cast<std::size_t>(j)] - center[static_cast<std::size_t>(j)];
                s += dx * dx;
            }
            return s < radius * radius;
        }
        case DomainKind::halfspace: {
            double s = 0.0;
            for (int j = 0; j < d; ++j)
                s += normal[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
            return s < offset;
        }
        case DomainKind::expression:
            return expr::eval(phi, 0.0, x, {}) > 0.0;
    }
    return false;
}

double Domain::dist_lb(std::span<const double> x) const {
    switch (kind) {
        case DomainKind::box: {
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < d; ++j) {
                const std::size_t k = static_cast<std::size_t>(j);
                const double m1 = x[k] - box_lo[k];
                const double m2 = box_hi[k] - x[k];
                best = std::fmin(best, std::fmin(m1, m2));
            }
            return std::fmax(0.0, best);
        }
        case DomainKind::ball: {
            double s = 0.0;
            for (int j = 0; j < d; ++j) {
                const double dx = x[static_cast<std::size_t>(j)] - center[static_cast<std::size_t>(j)];
                s += dx * dx;
            }
            return std::fmax(0.0, radius - std::sqrt(s));
        }
        case DomainKind::halfspace: {
            double s = 0.0;
            for (int j = 0; j < d; ++j)
                s += normal[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
            return std::fmax(0.0, (offset - s) / norm2(normal));
        }
        case DomainKind::expression:
            return std::fmax(0.0, expr::eval(phi, 0.0, x, {})) / phi_lipschitz;
    }
    return 0.0;
}

namespace {

constexpr std::uint64_t kValidateSeed = 0x76A11DA7Eull;
constexpr int kValidateSamples = 256;

struct SampleDraw {
    double t = 0.0;
    std::vector<double> x;
    std::vector<double> u;
};

// One deterministic sample in [0,T] x envelope-box x top-level control box.
SampleDraw draw_sample(const ProblemSpec& spec, std::uint64_t stream) {
    using rng::Purpose;
    SampleDraw s;
    const int d = spec.dim_x();
    const int m = spec.dim_u();
    s.t = spec.horizon * rng::uniform01(kValidateSeed, stream, 0, Purpose::sampling, 0);
    s.x.resize(static_cast<std::size_t>(d));
    const double R = spec.sample_envelope;
    for (int j = 0; j < d; ++j)
        s.x[static_cast<std::size_t>(j)] =
            R * (2.0 * rng::uniform01(kValidateSeed, stream, 0, Purpose::sampling,
                                      static_cast<std::uint32_t>(1 + j)) -
                 1.0);
    s.u.resize(static_cast<std::size_t>(m));
    if (m > 0 && !spec.control_space.levels.empty()) {
        const ControlLevel& top = spec.control_space.levels.back();
        for (int j = 0; j < m; ++j) {
            const std::size_t k = static_cast<std::size_t>(j);
            const double w = rng::uniform01(kValidateSeed, stream, 0, Purpose::sampling,
                                            static_cast<std::uint32_t>(1 + d + j));
            s.u[k] = top.lo[k] + w * (top.hi[k] - top.lo[k]);
        }
    }
    return s;
}

void check_expression_samples(const ProblemSpec& spec, const expr::Expression& e,
                              const std::string& label, bool nonnegative,
                              ValidationReport& report) {
    for (int i = 0; i < kValidateSamples; ++i) {
        const SampleDraw s = draw_sample(spec, static_cast<std::uint64_t>(i));
        double v = 0.0;
        try {
            v = expr::eval(e, s.t, s.x, s.u);
        } catch (const ExprError& ex) {
            report.violations.push_back("evaluation error in " + label + ": " + ex.what() +
                                        " at sample " + point_text(s.t, s.x, s.u));
            return;
        }
        if (!std::isfinite(v)) {
            report.violations.push_back("non-finite value of " + label + " at sample " +
                                        point_text(s.t, s.x, s.u));
            return;
        }
        if (nonnegative && v < 0.0) {
            std::ostringstream os;
            os << "f negative at sample " << point_text(s.t, s.x, s.u) << ": value=";
            append_num(os, v);
            report.violations.push_back(os.str());
            return;
        }
    }
}

void validate_domain(const ProblemSpec& spec, ValidationReport& report) {
    const Domain& g = spec.domain;
    const int d = g.d;
    switch (g.kind) {
        case DomainKind::box:
            if (static_cast<int>(g.box_lo.size()) != d ||
                static_cast<int>(g.box_hi.size()) != d) {
                report.violations.push_back("domain box corners must have dimension d");
                return;
            }
            for (int j = 0; j < d; ++j)
                if (!(g.box_lo[static_cast<std::size_t>(j)] <
                      g.box_hi[static_cast<std::size_t>(j)])) {
                    report.violations.push_back("empty domain: box axis " +
                                                std::to_string(j + 1) + " has lo >= hi");
                    return;
                }
            return;
        case DomainKind::ball:
            if (static_cast<int>(g.center.size()) != d) {
                report.violations.push_back("domain ball center must have dimension d");
                return;
            }
            if (!(g.radius > 0.0))
                report.violations.push_back("empty domain: ball radius must be > 0");
            return;
        case DomainKind::halfspace:
            if (static_cast<int>(g.normal.size()) != d) {
                report.violations.push_back("domain halfspace normal must have dimension d");
                return;
            }
            if (!(norm2(g.normal) > 0.0))
                report.violations.push_back("domain halfspace normal must be nonzero");
            return;
        case DomainKind::expression: {
            if (g.phi.dim_x != d) {
                report.violations.push_back("domain membership expression dimension mismatch");
                return;
            }
            if (g.phi.uses_t()) {
                report.violations.push_back("domain membership must not depend on t");
                return;
            }
            if (!(g.phi_lipschitz > 0.0)) {
                report.violations.push_back(
                    "expression domains require phi_lipschitz > 0");
                return;
            }
            // Sampled emptiness + declared-Lipschitz checks.
            bool nonempty = false;
            double worst_ratio = 0.0;
            std::vector<double> x(static_cast<std::size_t>(d)), y(static_cast<std::size_t>(d));
            for (int i = 0; i < kValidateSamples; ++i) {
                const double R = spec.sample_envelope;
                for (int j = 0; j < d; ++j) {
                    x[static_cast<std::size_t>(j)] =
                        R * (2.0 * rng::uniform01(kValidateSeed, static_cast<std::uint64_t>(i), 1,
                                                  rng::Purpose::sampling,
                                                  static_cast<std::uint32_t>(j)) -
                             1.0);
                    y[static_cast<std::size_t>(j)] =
                        R * (2.0 * rng::uniform01(kValidateSeed, static_cast<std::uint64_t>(i), 2,
                                                  rng::Purpose::sampling,
                                                  static_cast<std::uint32_t>(j)) -
                             1.0);
                }
                double px, py;
                try {
                    px = expr::eval(g.phi, 0.0, x, {});
                    py = expr::eval(g.phi, 0.0, y, {});
                } catch (const ExprError& ex) {
                    report.violations.push_back(std::string("evaluation error in domain phi: ") +
                                                ex.what());
                    return;
                }
                if (!std::isfinite(px) || !std::isfinite(py)) {
                    report.violations.push_back("non-finite value of domain phi at sample");
                    return;
                }
                if (px > 0.0 || py > 0.0) nonempty = true;
                std::vector<double> diff(static_cast<std::size_t>(d));
                for (int j = 0; j < d; ++j)
                    diff[static_cast<std::size_t>(j)] =
                        x[static_cast<std::size_t>(j)] - y[static_cast<std::size_t>(j)];
                const double dist = norm2(diff);
                if (dist > 1e-12) worst_ratio = std::fmax(worst_ratio, std::fabs(px - py) / dist);
            }
            if (!nonempty)
                report.violations.push_back("domain appears empty within sample envelope");
            if (worst_ratio > g.phi_lipschitz * (1.0 + 1e-9))
                report.violations.push_back(
                    "phi_lipschitz too small: sampled slope exceeds declared constant");
            return;
        }
    }
}

void validate_control_space(const ControlSpace& cs, ValidationReport& report) {
    if (cs.levels.empty()) {
        report.violations.push_back("control space needs at least one level");
        return;
    }
    for (std::size_t n = 0; n < cs.levels.size(); ++n) {
        const ControlLevel& L = cs.levels[n];
        if (static_cast<int>(L.lo.size()) != cs.m || static_cast<int>(L.hi.size()) != cs.m ||
            static_cast<int>(L.mesh_counts.size()) != cs.m) {
            report.violations.push_back("control level " + std::to_string(n + 1) +
                                        " has wrong dimension");
            return;
        }
        for (int j = 0; j < cs.m; ++j) {
            const std::size_t k = static_cast<std::size_t>(j);
            if (L.lo[k] > L.hi[k])
                report.violations.push_back("control level " + std::to_string(n + 1) +
                                            " axis " + std::to_string(j + 1) + " has lo > hi");
            if (L.mesh_counts[k] < 1)
                report.violations.push_back("control level " + std::to_string(n + 1) +
                                            " axis " + std::to_string(j + 1) +
                                            " needs mesh count >= 1");
        }
    }
    for (std::size_t n = 0; n + 1 < cs.levels.size(); ++n) {
        const ControlLevel& a = cs.levels[n];
        const ControlLevel& b = cs.levels[n + 1];
        for (int j = 0; j < cs.m; ++j) {
            const std::size_t k = static_cast<std::size_t>(j);
            if (a.lo[k] < b.lo[k] || a.hi[k] > b.hi[k]) {
                report.violations.push_back("control space levels not nested: level " +
                                            std::to_string(n + 2) + " does not contain level " +
                                            std::to_string(n + 1) + " on axis " +
                                            std::to_string(j + 1));
                break;
            }
        }
    }
}

}  // namespace

ValidationReport validate(const ProblemSpec& spec) {
    ValidationReport report;
    const int d = spec.domain.d;
    const int m = spec.control_space.m;
    if (!(spec.horizon > 0.0)) report.violations.push_back("horizon T must be > 0");
    if (d < 1) report.violations.push_back("state dimension d must be >= 1");
    if (m < 0) report.violations.push_back("control dimension m must be >= 0");
    if (spec.coefficients.d != d)
        report.violations.push_back("dimension mismatch: coefficients.d != domain.d");
    if (spec.coefficients.m != m)
        report.violations.push_back("dimension mismatch: coefficients.m != control_space.m");
    if (static_cast<int>(spec.coefficients.b.size()) != d)
        report.violations.push_back("coefficient set needs exactly d drift entries");
    if (static_cast<int>(spec.coefficients.sigma.size()) != d * d)
        report.violations.push_back("coefficient set needs exactly d*d diffusion entries");
    if (!(spec.sample_envelope > 0.0))
        report.violations.push_back("sample_envelope must be > 0");
    if (!report.ok()) return report;

    for (const expr::Expression& e : spec.coefficients.b)
        if (e.dim_x != d || e.dim_u != m) {
            report.violations.push_back("dimension mismatch in a drift expression");
            return report;
        }
    for (const expr::Expression& e : spec.coefficients.sigma)
        if (e.dim_x != d || e.dim_u != m) {
            report.violations.push_back("dimension mismatch in a diffusion expression");
            return report;
        }
    if (spec.coefficients.f.dim_x != d || spec.coefficients.f.dim_u != m) {
        report.violations.push_back("dimension mismatch in the reward expression");
        return report;
    }

    validate_domain(spec, report);
    validate_control_space(spec.control_space, report);
    if (!report.ok()) return report;

    for (int i = 0; i < d; ++i)
        check_expression_samples(spec, spec.coefficients.b[static_cast<std::size_t>(i)],
                                 "drift b" + std::to_string(i + 1), false, report);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            check_expression_samples(spec, spec.coefficients.sigma_at(i, j),
                                     "diffusion sigma_" + std::to_string(i + 1) + "_" +
                                         std::to_string(j + 1),
                                     false, report);
    check_expression_samples(spec, spec.coefficients.f, "reward f", true, report);
    return report;
}

namespace {

double eval_checked(const expr::Expression& e, double t, std::span<const double> x,
                    std::span<const double> u, const char* label) {
    const double v = expr::eval(e, t, x, u);
    if (!std::isfinite(v))
        throw Error(std::string("non-finite value of ") + label + " '" + expr::print(e) +
                    "' at " + point_text(t, x, u));
    return v;
}

}  // namespace

LipschitzEstimate estimate_lipschitz(const ProblemSpec& spec, int level, int n_samples,
                                     std::uint64_t seed) {
    using rng::Purpose;
    const int d = spec.dim_x();
    const int m = spec.dim_u();
    // Control-free problems act as one empty level.
    if (level < 1 || level > std::max(spec.control_space.level_count(), 1))
        throw Error("estimate_lipschitz: level out of range");
    const double R = spec.sample_envelope;

    LipschitzEstimate out;
    std::vector<double> x(static_cast<std::size_t>(d)), y(static_cast<std::size_t>(d)),
        u(static_cast<std::size_t>(m));
    std::vector<double> bx(static_cast<std::size_t>(d)), by(static_cast<std::size_t>(d));
    std::vector<double> sx(static_cast<std::size_t>(d * d)), sy(static_cast<std::size_t>(d * d));

    // Lower levels contribute their own samples, so the estimate over
    // level n is a max over a superset of the level n-1 samples and
    // monotonicity in `level` holds exactly.
    for (int lev = 0; lev < level; ++lev) {
        const ControlLevel* box =
            m > 0 ? &spec.control_space.levels[static_cast<std::size_t>(lev)] : nullptr;
        for (int i = 0; i < n_samples; ++i) {
            const auto stream = static_cast<std::uint64_t>(i);
            const auto step = static_cast<std::uint32_t>(lev);
            std::uint32_t blk = 0;
            const double t =
                spec.horizon * rng::uniform01(seed, stream, step, Purpose::sampling, blk++);
            for (int j = 0; j < d; ++j)
                x[static_cast<std::size_t>(j)] =
                    R * (2.0 * rng::uniform01(seed, stream, step, Purpose::sampling, blk++) - 1.0);
            for (int j = 0; j < d; ++j)
                y[static_cast<std::size_t>(j)] =
                    R * (2.0 * rng::uniform01(seed, stream, step, Purpose::sampling, blk++) - 1.0);
            for (int j = 0; j < m; ++j) {
                const std::size_t k = static_cast<std::size_t>(j);
                const double w = rng::uniform01(seed, stream, step, Purpose::sampling, blk++);
                u[k] = box->lo[k] + w * (box->hi[k] - box->lo[k]);
            }
            if (i % 2 == 1) {
                // Close pair: y = x + r*dir with log-uniform r, to probe the
                // local slope that distant pairs average away.
                const double w = rng::uniform01(seed, stream, step, Purpose::sampling, blk++);
                const double r = std::exp(std::log(1e-7) + w * (std::log(2.0 * R) - std::log(1e-7)));
                double nrm = 0.0;
                for (int j = 0; j < d; ++j) {
                    const auto z = rng::normal_pair(seed, stream, step, Purpose::sampling,
                                                    1000u + static_cast<std::uint32_t>(j));
                    y[static_cast<std::size_t>(j)] = z[0];
                    nrm += z[0] * z[0];
                }
                nrm = std::sqrt(nrm);
                if (nrm > 1e-300)
                    for (int j = 0; j < d; ++j) {
                        const std::size_t k = static_cast<std::size_t>(j);
                        y[k] = x[k] + r * y[k] / nrm;
                    }
            }

            for (int j = 0; j < d; ++j) {
                const std::size_t k = static_cast<std::size_t>(j);
                bx[k] = eval_checked(spec.coefficients.b[k], t, x, u, "drift");
                by[k] = eval_checked(spec.coefficients.b[k], t, y, u, "drift");
            }
            for (int j = 0; j < d * d; ++j) {
                const std::size_t k = static_cast<std::size_t>(j);
                sx[k] = eval_checked(spec.coefficients.sigma[k], t, x, u, "diffusion");
                sy[k] = eval_checked(spec.coefficients.sigma[k], t, y, u, "diffusion");
            }

            double db = 0.0, ds = 0.0, dxy = 0.0;
            for (int j = 0; j < d; ++j) {
                const std::size_t k = static_cast<std::size_t>(j);
                db += (bx[k] - by[k]) * (bx[k] - by[k]);
                dxy += (x[k] - y[k]) * (x[k] - y[k]);
            }
            for (int j = 0; j < d * d; ++j) {
                const std::size_t k = static_cast<std::size_t>(j);
                ds += (sx[k] - sy[k]) * (sx[k] - sy[k]);
            }
            db = std::sqrt(db);
            ds = std::sqrt(ds);
            dxy = std::sqrt(dxy);
            if (dxy > 1e-300) out.k_lip = std::fmax(out.k_lip, (db + ds) / dxy);

            double nb = 0.0, ns = 0.0;
            for (int j = 0; j < d; ++j) nb += bx[static_cast<std::size_t>(j)] * bx[static_cast<std::size_t>(j)];
            for (int j = 0; j < d * d; ++j) ns += sx[static_cast<std::size_t>(j)] * sx[static_cast<std::size_t>(j)];
            out.k_growth =
                std::fmax(out.k_growth, (std::sqrt(nb) + std::sqrt(ns)) / (1.0 + norm2(x)));
        }
    }
    return out;
}

namespace {

void append_level(std::ostream& os, const ControlLevel& L, int index) {
    os << "level " << index << " lo=";
    append_vec(os, L.lo);
    os << " hi=";
    append_vec(os, L.hi);
    os << " mesh=[";
    for (std::size_t i = 0; i < L.mesh_counts.size(); ++i) {
        if (i) os << " ";
        os << L.mesh_counts[i];
    }
    os << "]\n";
}

}  // namespace

std::string canonical_text(const ProblemSpec& spec) {
    std::ostringstream os;
    os << "exit-control problem v1\nT=";
    append_num(os, spec.horizon);
    os << "\nenvelope=";
    append_num(os, spec.sample_envelope);
    os << "\ndomain d=" << spec.domain.d << " kind=";
    switch (spec.domain.kind) {
        case DomainKind::box:
            os << "box lo=";
            append_vec(os, spec.domain.box_lo);
            os << " hi=";
            append_vec(os, spec.domain.box_hi);
            break;
        case DomainKind::ball:
            os << "ball center=";
            append_vec(os, spec.domain.center);
            os << " radius=";
            append_num(os, spec.domain.radius);
            break;
        case DomainKind::halfspace:
            os << "halfspace normal=";
            append_vec(os, spec.domain.normal);
            os << " offset=";
            append_num(os, spec.domain.offset);
            break;
        case DomainKind::expression:
            os << "expression phi=" << expr::print(spec.domain.phi) << " L=";
            append_num(os, spec.domain.phi_lipschitz);
            break;
    }
    os << "\ncoefficients d=" << spec.coefficients.d << " m=" << spec.coefficients.m << "\n";
    for (std::size_t i = 0; i < spec.coefficients.b.size(); ++i)
        os << "b" << i + 1 << "=" << expr::print(spec.coefficients.b[i]) << "\n";
    for (int i = 0; i < spec.coefficients.d; ++i)
        for (int j = 0; j < spec.coefficients.d; ++j)
            os << "sigma_" << i + 1 << "_" << j + 1 << "="
               << expr::print(spec.coefficients.sigma_at(i, j)) << "\n";
    os << "f=" << expr::print(spec.coefficients.f) << "\n";
    os << "control m=" << spec.control_space.m << " levels=" << spec.control_space.level_count()
       << "\n";
    for (std::size_t n = 0; n < spec.control_space.levels.size(); ++n)
        append_level(os, spec.control_space.levels[n], static_cast<int>(n) + 1);
    return os.str();
}

std::uint64_t problem_hash(const ProblemSpec& spec) {
    const std::string text = canonical_text(spec);
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

expr::Expression parse_coeff(const std::string& text, int d, int m, const std::string& origin,
                             const std::string& key) {
    try {
        return expr::parse(text, d, m);
    } catch (const ExprError& ex) {
        throw ConfigError(origin + ": in " + key + ": " + ex.what() + " (byte " +
                          std::to_string(ex.byte_offset) + ")");
    }
}

std::vector<int> to_int_vector(const std::vector<double>& v, const std::string& origin,
                               const std::string& key) {
    std::vector<int> out;
    out.reserve(v.size());
    for (double c : v) {
        const int i = static_cast<int>(c);
        if (static_cast<double>(i) != c)
            throw ConfigError(origin + ": " + key + " must contain integers");
        out.push_back(i);
    }
    return out;
}

std::string stem_of(const std::string& path) {
    std::size_t slash = path.find_last_of("/\\");
    const std::size_t start = slash == std::string::npos ? 0 : slash + 1;
    std::size_t dot = path.find_last_of('.');
    if (dot == std::string::npos || dot < start) dot = path.size();
    return path.substr(start, dot - start);
}

}  // namespace

ProblemSpec parse_problem(const ini::File& file) {
    ini::Reader r(file);
    ProblemSpec spec;
    spec.name = stem_of(file.origin);

    spec.horizon = r.get_double("horizon", "T");

    const int d = static_cast<int>(r.get_int("domain", "d"));
    if (d < 1) throw ConfigError(file.origin + ": domain d must be >= 1");
    spec.domain.d = d;
    const std::string kind = r.get_string("domain", "kind");
    if (kind == "box") {
        spec.domain.kind = DomainKind::box;
        spec.domain.box_lo = r.get_vector("domain", "lo");
        spec.domain.box_hi = r.get_vector("domain", "hi");
    } else if (kind == "ball") {
        spec.domain.kind = DomainKind::ball;
        spec.domain.center = r.get_vector("domain", "center");
        spec.domain.radius = r.get_double("domain", "radius");
    } else if (kind == "halfspace") {
        spec.domain.kind = DomainKind::halfspace;
        spec.domain.normal = r.get_vector("domain", "normal");
        spec.domain.offset = r.get_double("domain", "offset");
    } else if (kind == "expression") {
        spec.domain.kind = DomainKind::expression;
        spec.domain.phi = parse_coeff(r.get_string("domain", "phi"), d, 0, file.origin, "phi");
        spec.domain.phi_lipschitz = r.get_double("domain", "phi_lipschitz");
    } else {
        throw ConfigError(file.origin + ": unknown domain kind '" + kind + "'");
    }

    const int m = static_cast<int>(r.get_int("control_space", "m"));
    if (m < 0) throw ConfigError(file.origin + ": control m must be >= 0");
    const int n_levels = static_cast<int>(r.get_int("control_space", "levels"));
    if (n_levels < 1) throw ConfigError(file.origin + ": control levels must be >= 1");
    spec.control_space.m = m;
    for (int n = 1; n <= n_levels; ++n) {
        ControlLevel L;
        if (m > 0) {
            const std::string base = "level_" + std::to_string(n) + "_";
            const auto lo = r.get_vector("control_space", base + "lo");
            const auto hi = r.get_vector("control_space", base + "hi");
            const auto mesh = r.get_vector("control_space", base + "mesh");
            if (static_cast<int>(lo.size()) != m || static_cast<int>(hi.size()) != m ||
                static_cast<int>(mesh.size()) != m)
                throw ConfigError(file.origin + ": " + base + "lo/hi/mesh must have m entries");
            L.lo = lo;
            L.hi = hi;
            L.mesh_counts = to_int_vector(mesh, file.origin, base + "mesh");
        }
        spec.control_space.levels.push_back(std::move(L));
    }

    spec.coefficients.d = d;
    spec.coefficients.m = m;
    for (int i = 1; i <= d; ++i)
        spec.coefficients.b.push_back(parse_coeff(
            r.get_string("coefficients", "b" + std::to_string(i)), d, m, file.origin,
            "b" + std::to_string(i)));
    for (int i = 1; i <= d; ++i)
        for (int j = 1; j <= d; ++j) {
            const std::string key = "sigma_" + std::to_string(i) + "_" + std::to_string(j);
            const std::string text = r.get_string_or("coefficients", key, "0");
            spec.coefficients.sigma.push_back(parse_coeff(text, d, m, file.origin, key));
        }
    spec.coefficients.f =
        parse_coeff(r.get_string("coefficients", "f"), d, m, file.origin, "f");
    spec.sample_envelope = r.get_double_or("coefficients", "sample_envelope", 10.0);

    r.finish();
    return spec;
}

ProblemSpec load_problem(const std::string& path) { return parse_problem(ini::load(path)); }

}  // namespace exitctl
