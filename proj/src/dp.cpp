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

#include "exitctl/dp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "exitctl/errors.hpp"
#include "exitctl/parallel.hpp"

namespace exitctl {

long long SpaceGrid::node_count() const {
    long long c = 1;
    for (int nj : n) c *= nj;
    return c;
}

void SpaceGrid::node(long long flat, std::span<double> out) const {
    for (int j = 0; j < d; ++j) {
        const int nj = n[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(j)] = coord(j, static_cast<int>(flat % nj));
        flat /= nj;
    }
}

SpaceGrid make_space_grid(const Domain& domain, std::span<const int> counts, double envelope) {
    SpaceGrid g;
    g.d = domain.d;
    if (g.d > 8) throw Error("space grids support at most 8 axes");
    if (static_cast<int>(counts.size()) != g.d)
        throw Error("space grid needs one node count per axis");
    for (int c : counts)
        if (c < 2) throw Error("space grid needs >= 2 nodes per axis");
    switch (domain.kind) {
        case DomainKind::box:
            g.lo = domain.box_lo;
            g.hi = domain.box_hi;
            break;
        case DomainKind::ball:
            for (int j = 0; j < g.d; ++j) {
                g.lo.push_back(domain.center[static_cast<std::size_t>(j)] - domain.radius);
                g.hi.push_back(domain.center[static_cast<std::size_t>(j)] + domain.radius);
            }
            break;
        case DomainKind::halfspace:
        case DomainKind::expression:
            g.lo.assign(static_cast<std::size_t>(g.d), -envelope);
            g.hi.assign(static_cast<std::size_t>(g.d), envelope);
            g.truncated = true;
            break;
    }
    g.n.assign(counts.begin(), counts.end());
    for (int j = 0; j < g.d; ++j) {
        const std::size_t k = static_cast<std::size_t>(j);
        g.dx.push_back((g.hi[k] - g.lo[k]) / static_cast<double>(g.n[k] - 1));
    }
    const long long nodes = g.node_count();
    g.inside.resize(static_cast<std::size_t>(nodes));
    std::vector<double> x(static_cast<std::size_t>(g.d));
    for (long long i = 0; i < nodes; ++i) {
        g.node(i, x);
        g.inside[static_cast<std::size_t>(i)] = domain.contains(x) ? 1 : 0;
    }
    return g;
}

namespace {

// Upwind stencil weights for one (t, x, u): fills pup[j], pdn[j] and
// returns the CFL load su = dt*sum_j(a_j/dx_j^2 + |b_j|/dx_j); the stay
// weight is 1 - su.  Throws when sigma*sigma^T carries off-diagonal mass
// (no monotone axis-aligned stencil exists then).
double weight_row(const CoefficientSet& c, double t, std::span<const double> x,
                  std::span<const double> u, std::span<const double> dx, double dt,
                  const std::vector<char>& sigma_zero, bool need_aniso_check, double* pup,
                  double* pdn, double* sig) {
    const int d = c.d;
    for (int j = 0; j < d * d; ++j)
        sig[j] = sigma_zero[static_cast<std::size_t>(j)]
                     ? 0.0
                     : expr::eval(c.sigma[static_cast<std::size_t>(j)], t, x, u);
    if (need_aniso_check) {
        for (int j = 0; j < d; ++j)
            for (int l = j + 1; l < d; ++l) {
                double off = 0.0, dj = 0.0, dl = 0.0;
                for (int mm = 0; mm < d; ++mm) {
                    off += sig[j * d + mm] * sig[l * d + mm];
                    dj += sig[j * d + mm] * sig[j * d + mm];
                    dl += sig[l * d + mm] * sig[l * d + mm];
                }
                if (std::fabs(off) > 1e-12 * (dj + dl + 1e-300))
                    throw Error(
                        "unsupported anisotropy: sigma*sigma^T has off-diagonal mass at axes " +
                        std::to_string(j + 1) + "," + std::to_string(l + 1));
            }
    }
    double su = 0.0;
    for (int j = 0; j < d; ++j) {
        double a = 0.0;
        for (int mm = 0; mm < d; ++mm) a += sig[j * d + mm] * sig[j * d + mm];
        const double b = expr::eval(c.b[static_cast<std::size_t>(j)], t, x, u);
        const double hx = dx[static_cast<std::size_t>(j)];
        const double bp = b > 0.0 ? b : 0.0;
        const double bn = b < 0.0 ? -b : 0.0;
        pup[j] = dt * (0.5 * a / (hx * hx) + bp / hx);
        pdn[j] = dt * (0.5 * a / (hx * hx) + bn / hx);
        su += pup[j] + pdn[j];
    }
    return su;
}

struct ControlTable {
    int m = 0;
    long long count = 0;
    std::vector<double> u;  // count x m

    std::span<const double> at(long long c) const {
        return {u.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(m),
                static_cast<std::size_t>(m)};
    }
};

ControlTable build_controls(const ControlSpace& cs, int level_index) {
    ControlTable t;
    t.m = cs.m;
    t.count = cs.mesh_size(level_index);
    t.u.resize(static_cast<std::size_t>(t.count) * static_cast<std::size_t>(t.m));
    std::vector<double> buf(static_cast<std::size_t>(t.m));
    for (long long c = 0; c < t.count; ++c) {
        cs.mesh_point(level_index, c, buf);
        for (int j = 0; j < t.m; ++j)
            t.u[static_cast<std::size_t>(c) * static_cast<std::size_t>(t.m) +
                static_cast<std::size_t>(j)] = buf[static_cast<std::size_t>(j)];
    }
    return t;
}

std::vector<char> sigma_zero_mask(const CoefficientSet& c) {
    std::vector<char> z(c.sigma.size());
    for (std::size_t i = 0; i < c.sigma.size(); ++i) {
        const auto& e = c.sigma[i];
        z[i] = e.nodes.size() == 1 && e.nodes[0].kind == expr::NodeKind::constant &&
               e.nodes[0].value == 0.0;
    }
    return z;
}

bool any_offdiag_nonzero(const CoefficientSet& c, const std::vector<char>& zero) {
    for (int j = 0; j < c.d; ++j)
        for (int l = 0; l < c.d; ++l)
            if (j != l && !zero[static_cast<std::size_t>(j * c.d + l)]) return true;
    return false;
}

}  // namespace

int auto_steps(const ProblemSpec& spec, const SpaceGrid& grid, int control_level,
               double safety) {
    if (!(safety > 0.0 && safety <= 1.0)) throw Error("cfl safety must lie in (0, 1]");
    const CoefficientSet& c = spec.coefficients;
    const ControlTable controls = build_controls(spec.control_space, control_level - 1);
    const std::vector<char> zero = sigma_zero_mask(c);
    const bool aniso = any_offdiag_nonzero(c, zero);
    const long long nodes = grid.node_count();
    std::vector<double> x(static_cast<std::size_t>(grid.d));
    std::vector<double> pup(static_cast<std::size_t>(grid.d)), pdn(static_cast<std::size_t>(grid.d));
    std::vector<double> sig(static_cast<std::size_t>(grid.d * grid.d));
    double max_rate = 0.0;
    const double times[3] = {0.0, 0.5 * spec.horizon, spec.horizon};
    for (double t : times) {
        for (long long i = 0; i < nodes; ++i) {
            if (!grid.inside[static_cast<std::size_t>(i)]) continue;
            grid.node(i, x);
            for (long long cc = 0; cc < controls.count; ++cc) {
                const double rate = weight_row(c, t, x, controls.at(cc), grid.dx, 1.0, zero,
                                               aniso, pup.data(), pdn.data(), sig.data());
                if (rate > max_rate) max_rate = rate;
            }
        }
    }
    const double steps = std::ceil(spec.horizon * max_rate / safety);
    const int floor_steps = 100;  // resolves f's time dependence when dynamics are frozen
    if (steps < floor_steps) return floor_steps;
    if (steps > 5e8) throw Error("auto step count exceeds 5e8; coarsen the space grid");
    return static_cast<int>(steps);
}

ValueGrid solve(const ProblemSpec& spec, const SpaceGrid& grid, const TimeMesh& mesh,
                const SolveOptions& opts) {
    if (mesh.t0 != 0.0 || mesh.T != spec.horizon)
        throw Error("solve: time mesh must span [0, T]");
    if (grid.d != spec.dim_x()) throw Error("solve: grid dimension mismatch");
    if (grid.d > 8) throw Error("space grids support at most 8 axes");
    // Control-free problems act as one empty level.
    if (opts.control_level < 1 ||
        opts.control_level > std::max(spec.control_space.level_count(), 1))
        throw Error("solve: control level out of range");

    const int n = mesh.n_steps;
    int stride = opts.store_stride;
    if (stride <= 0) {
        const int max_slices = opts.max_stored_slices < 2 ? 2 : opts.max_stored_slices;
        stride = (n + max_slices - 2) / (max_slices - 1);
        if (stride < 1) stride = 1;
    }

    ValueGrid out;
    out.space = grid;
    out.mesh = mesh;
    out.domain = spec.domain;
    out.control_level = opts.control_level;
    out.spec_hash = problem_hash(spec);
    for (int k = 0; k < n; k += stride) out.stored_k.push_back(k);
    out.stored_k.push_back(n);
    const long long nodes = grid.node_count();
    out.values.assign(out.stored_k.size() * static_cast<std::size_t>(nodes), 0.0);
    out.argmax.assign(out.stored_k.size() * static_cast<std::size_t>(nodes), 0);

    auto slice_pos = [&](int k) {
        return k == n ? static_cast<int>(out.stored_k.size()) - 1 : k / stride;
    };

    const CoefficientSet& c = spec.coefficients;
    const ControlTable controls = build_controls(spec.control_space, opts.control_level - 1);
    const std::vector<char> zero = sigma_zero_mask(c);
    const bool aniso = any_offdiag_nonzero(c, zero);
    const double dt = mesh.dt();
    const int d = grid.d;

    std::vector<long long> stride_axis(static_cast<std::size_t>(d));
    long long s = 1;
    for (int j = 0; j < d; ++j) {
        stride_axis[static_cast<std::size_t>(j)] = s;
        s *= grid.n[static_cast<std::size_t>(j)];
    }

    std::vector<double> vnext(static_cast<std::size_t>(nodes), 0.0);
    std::vector<double> vcur(static_cast<std::size_t>(nodes), 0.0);
    std::vector<std::int32_t> amax(static_cast<std::size_t>(nodes), 0);
    std::vector<double> rate(static_cast<std::size_t>(nodes), 0.0);

    // Terminal slice: values and argmax stay zero.

    const int workers = nodes >= 4096 ? opts.workers : 1;

    for (int k = n - 1; k >= 0; --k) {
        const double t_k = mesh.time(k);
        parallel_for(nodes, workers, [&](long long i) {
            if (!grid.inside[static_cast<std::size_t>(i)]) {
                vcur[static_cast<std::size_t>(i)] = 0.0;
                amax[static_cast<std::size_t>(i)] = 0;
                rate[static_cast<std::size_t>(i)] = 0.0;
                return;
            }
            double x_buf[8];
            double pup[8], pdn[8], sig[64];
            int idx[8];
            long long rem = i;
            for (int j = 0; j < d; ++j) {
                const int nj = grid.n[static_cast<std::size_t>(j)];
                idx[j] = static_cast<int>(rem % nj);
                rem /= nj;
                x_buf[j] = grid.coord(j, idx[j]);
            }
            const std::span<const double> x{x_buf, static_cast<std::size_t>(d)};
            double best = -std::numeric_limits<double>::infinity();
            std::int32_t best_c = 0;
            double worst_rate = 0.0;
            for (long long cc = 0; cc < controls.count; ++cc) {
                const auto u = controls.at(cc);
                const double su =
                    weight_row(c, t_k, x, u, grid.dx, dt, zero, aniso, pup, pdn, sig);
                if (su > worst_rate) worst_rate = su;
                const double p_stay = 1.0 - su;
                double cand = expr::eval(c.f, t_k, x, u) * dt +
                              p_stay * vnext[static_cast<std::size_t>(i)];
                for (int j = 0; j < d; ++j) {
                    if (idx[j] + 1 < grid.n[static_cast<std::size_t>(j)])
                        cand += pup[j] *
                                vnext[static_cast<std::size_t>(i + stride_axis[static_cast<std::size_t>(j)])];
                    if (idx[j] > 0)
                        cand += pdn[j] *
                                vnext[static_cast<std::size_t>(i - stride_axis[static_cast<std::size_t>(j)])];
                }
                if (cand > best) {
                    best = cand;
                    best_c = static_cast<std::int32_t>(cc);
                }
            }
            vcur[static_cast<std::size_t>(i)] = best;
            amax[static_cast<std::size_t>(i)] = best_c;
            rate[static_cast<std::size_t>(i)] = worst_rate;
        });

        double slice_max_rate = 0.0;
        long long worst_node = -1;
        for (long long i = 0; i < nodes; ++i)
            if (rate[static_cast<std::size_t>(i)] > slice_max_rate) {
                slice_max_rate = rate[static_cast<std::size_t>(i)];
                worst_node = i;
            }
        if (slice_max_rate > out.cfl_max) out.cfl_max = slice_max_rate;
        if (slice_max_rate > 1.0 + 1e-12) {
            std::vector<double> x(static_cast<std::size_t>(d));
            grid.node(worst_node, x);
            std::ostringstream os;
            os << "explicit-scheme stability violated: dt*(sum a/dx^2 + |b|/dx) = "
               << slice_max_rate << " > 1 at t=" << t_k << ", x=(";
            for (int j = 0; j < d; ++j) {
                if (j) os << ", ";
                os << x[static_cast<std::size_t>(j)];
            }
            os << "); need n_steps >= "
               << static_cast<long long>(std::ceil(spec.horizon * slice_max_rate / dt / n * n))
               << " (got " << n << ")";
            throw CflError(os.str());
        }

        if (k % stride == 0) {
            const std::size_t base =
                static_cast<std::size_t>(slice_pos(k)) * static_cast<std::size_t>(nodes);
            for (long long i = 0; i < nodes; ++i) {
                out.values[base + static_cast<std::size_t>(i)] = vcur[static_cast<std::size_t>(i)];
                out.argmax[base + static_cast<std::size_t>(i)] = amax[static_cast<std::size_t>(i)];
            }
        }
        std::swap(vcur, vnext);
    }

    for (double v : out.values)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw HarnessError("solver produced a negative or non-finite value");
    return out;
}

double evaluate(const ValueGrid& grid, double t, std::span<const double> x) {
    if (!grid.domain.contains(x)) return 0.0;
    const SpaceGrid& g = grid.space;
    const int d = g.d;

    int base_idx[8];
    double frac[8];
    for (int j = 0; j < d; ++j) {
        const std::size_t k = static_cast<std::size_t>(j);
        double pos = (x[k] - g.lo[k]) / g.dx[k];
        if (pos < 0.0) pos = 0.0;
        const double pmax = static_cast<double>(g.n[k] - 1);
        if (pos > pmax) pos = pmax;
        int i0 = static_cast<int>(pos);
        if (i0 > g.n[k] - 2) i0 = g.n[k] - 2;
        double f = pos - i0;
        if (f < 1e-12) f = 0.0;
        if (f > 1.0 - 1e-12) f = 1.0;
        base_idx[j] = i0;
        frac[j] = f;
    }

    // Bracketing stored slices in time.
    const auto& ks = grid.stored_k;
    int s_hi = 0;
    while (s_hi + 1 < static_cast<int>(ks.size()) && grid.stored_time(s_hi) < t) ++s_hi;
    int s_lo = s_hi > 0 ? s_hi - 1 : 0;
    const double ta = grid.stored_time(s_lo);
    const double tb = grid.stored_time(s_hi);
    double lam = tb > ta ? (t - ta) / (tb - ta) : 0.0;
    if (lam < 1e-12) lam = 0.0;
    if (lam > 1.0 - 1e-12) lam = 1.0;
    if (t <= ta) lam = 0.0;
    if (t >= tb) lam = 1.0;

    const long long nodes = g.node_count();
    double acc = 0.0;
    for (int corner = 0; corner < (1 << d); ++corner) {
        double w = 1.0;
        long long flat = 0;
        long long stride = 1;
        for (int j = 0; j < d; ++j) {
            const int up = (corner >> j) & 1;
            w *= up ? frac[j] : 1.0 - frac[j];
            flat += static_cast<long long>(base_idx[j] + up) * stride;
            stride *= g.n[static_cast<std::size_t>(j)];
        }
        if (w == 0.0) continue;
        const double va = grid.values[static_cast<std::size_t>(s_lo) * static_cast<std::size_t>(nodes) +
                                      static_cast<std::size_t>(flat)];
        const double vb = grid.values[static_cast<std::size_t>(s_hi) * static_cast<std::size_t>(nodes) +
                                      static_cast<std::size_t>(flat)];
        acc += w * (lam == 0.0 ? va : (lam == 1.0 ? vb : (1.0 - lam) * va + lam * vb));
    }
    return acc < 0.0 ? 0.0 : acc;
}

ControlPolicy extract_policy(const ValueGrid& grid, const ProblemSpec& spec) {
    const int level = grid.control_level;
    const ControlSpace& cs = spec.control_space;
    FeedbackTable table;
    table.d = grid.space.d;
    table.m = cs.m;
    table.axis_lo = grid.space.lo;
    table.axis_dx = grid.space.dx;
    table.axis_n = grid.space.n;
    for (int s = 0; s < grid.slice_count(); ++s) table.slice_times.push_back(grid.stored_time(s));
    const long long nodes = grid.space.node_count();
    table.u_values.resize(static_cast<std::size_t>(grid.slice_count()) *
                          static_cast<std::size_t>(nodes) * static_cast<std::size_t>(cs.m));
    std::vector<double> u(static_cast<std::size_t>(cs.m));
    for (int s = 0; s < grid.slice_count(); ++s)
        for (long long i = 0; i < nodes; ++i) {
            const std::size_t at = static_cast<std::size_t>(s) * static_cast<std::size_t>(nodes) +
                                   static_cast<std::size_t>(i);
            cs.mesh_point(level - 1, grid.argmax[at], u);
            for (int j = 0; j < cs.m; ++j)
                table.u_values[at * static_cast<std::size_t>(cs.m) + static_cast<std::size_t>(j)] =
                    u[static_cast<std::size_t>(j)];
        }
    ControlPolicy p;
    p.kind = ControlPolicy::Kind::feedback_table;
    p.table = std::move(table);
    p.id = "argmax";
    return p;
}

void write_value_grid_csv(const ValueGrid& grid, std::ostream& os) {
    os << "t";
    for (int j = 0; j < grid.space.d; ++j) os << ",x" << j + 1;
    os << ",v\n";
    char buf[40];
    const long long nodes = grid.space.node_count();
    std::vector<double> x(static_cast<std::size_t>(grid.space.d));
    for (int s = 0; s < grid.slice_count(); ++s) {
        const double t = grid.stored_time(s);
        for (long long i = 0; i < nodes; ++i) {
            grid.space.node(i, x);
            std::snprintf(buf, sizeof buf, "%.17g", t);
            os << buf;
            for (int j = 0; j < grid.space.d; ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", x[static_cast<std::size_t>(j)]);
                os << "," << buf;
            }
            std::snprintf(buf, sizeof buf, "%.17g", grid.value(s, i));
            os << "," << buf << "\n";
        }
    }
}

namespace {

constexpr char kMagic[8] = {'X', 'C', 'T', 'L', 'V', 'G', '0', '1'};

template <class T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void put_vec(std::ofstream& os, const std::vector<T>& v) {
    const std::uint64_t n = v.size();
    put(os, n);
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(n * sizeof(T)));
}

void put_str(std::ofstream& os, const std::string& s) {
    const std::uint64_t n = s.size();
    put(os, n);
    os.write(s.data(), static_cast<std::streamsize>(n));
}

template <class T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

template <class T>
std::vector<T> get_vec(std::ifstream& is) {
    const std::uint64_t n = get<std::uint64_t>(is);
    if (n > (1ull << 33)) throw ConfigError("value grid file corrupt: oversized array");
    std::vector<T> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    return v;
}

std::string get_str(std::ifstream& is) {
    const std::uint64_t n = get<std::uint64_t>(is);
    if (n > (1ull << 24)) throw ConfigError("value grid file corrupt: oversized string");
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    return s;
}

}  // namespace

void write_value_grid_binary(const ValueGrid& grid, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write value grid file: " + path);
    os.write(kMagic, 8);
    put(os, static_cast<std::int32_t>(grid.space.d));
    put_vec(os, grid.space.n);
    put_vec(os, grid.space.lo);
    put_vec(os, grid.space.hi);
    put_vec(os, grid.space.dx);
    put_vec(os, grid.space.inside);
    put(os, static_cast<std::uint8_t>(grid.space.truncated ? 1 : 0));
    put(os, grid.mesh.t0);
    put(os, grid.mesh.T);
    put(os, static_cast<std::int32_t>(grid.mesh.n_steps));

    put(os, static_cast<std::int32_t>(grid.domain.kind));
    put(os, static_cast<std::int32_t>(grid.domain.d));
    put_vec(os, grid.domain.box_lo);
    put_vec(os, grid.domain.box_hi);
    put_vec(os, grid.domain.center);
    put(os, grid.domain.radius);
    put_vec(os, grid.domain.normal);
    put(os, grid.domain.offset);
    put_str(os, grid.domain.kind == DomainKind::expression ? grid.domain.phi.source : "");
    put(os, grid.domain.phi_lipschitz);

    put(os, static_cast<std::int32_t>(grid.control_level));
    put(os, grid.spec_hash);
    put(os, grid.cfl_max);
    put_vec(os, grid.stored_k);
    put_vec(os, grid.values);
    put_vec(os, grid.argmax);
    if (!os) throw Error("short write while saving value grid: " + path);
}

ValueGrid read_value_grid_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open value grid file: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw ConfigError("not a value grid file: " + path);
    ValueGrid g;
    g.space.d = get<std::int32_t>(is);
    g.space.n = get_vec<int>(is);
    g.space.lo = get_vec<double>(is);
    g.space.hi = get_vec<double>(is);
    g.space.dx = get_vec<double>(is);
    g.space.inside = get_vec<std::uint8_t>(is);
    g.space.truncated = get<std::uint8_t>(is) != 0;
    g.mesh.t0 = get<double>(is);
    g.mesh.T = get<double>(is);
    g.mesh.n_steps = get<std::int32_t>(is);

    g.domain.kind = static_cast<DomainKind>(get<std::int32_t>(is));
    g.domain.d = get<std::int32_t>(is);
    g.domain.box_lo = get_vec<double>(is);
    g.domain.box_hi = get_vec<double>(is);
    g.domain.center = get_vec<double>(is);
    g.domain.radius = get<double>(is);
    g.domain.normal = get_vec<double>(is);
    g.domain.offset = get<double>(is);
    const std::string phi_src = get_str(is);
    g.domain.phi_lipschitz = get<double>(is);
    if (g.domain.kind == DomainKind::expression)
        g.domain.phi = expr::parse(phi_src, g.domain.d, 0);

    g.control_level = get<std::int32_t>(is);
    g.spec_hash = get<std::uint64_t>(is);
    g.cfl_max = get<double>(is);
    g.stored_k = get_vec<int>(is);
    g.values = get_vec<double>(is);
    g.argmax = get_vec<std::int32_t>(is);
    if (!is) throw ConfigError("value grid file truncated: " + path);
    const std::size_t expect =
        g.stored_k.size() * static_cast<std::size_t>(g.space.node_count());
    if (g.values.size() != expect || g.argmax.size() != expect)
        throw ConfigError("value grid file corrupt: array sizes disagree");
    return g;
}

}  // namespace exitctl
