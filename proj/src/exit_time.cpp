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

#include "exitctl/exit_time.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "exitctl/errors.hpp"
#include "exitctl/rng.hpp"

namespace exitctl {

double distance_to_complement(std::span<const double> x, const Domain& domain) {
    return domain.dist_lb(x);
}

ExitResult exit_time(const SamplePath& path, const Domain& domain, int start_index) {
    ExitResult r;
    const int n = path.mesh.n_steps;
    for (int k = start_index; k <= n; ++k) {
        if (!domain.contains(path.state(k))) {
            r.tau_index = k;
            r.tau = path.mesh.time(k);
            r.exited = true;
            return r;
        }
    }
    r.tau_index = n;
    r.tau = path.mesh.T;
    r.exited = false;
    return r;
}

void face_distances(const Domain& g, std::span<const double> x, std::vector<double>& out) {
    out.clear();
    switch (g.kind) {
        case DomainKind::box:
            for (int j = 0; j < g.d; ++j) {
                const std::size_t k = static_cast<std::size_t>(j);
                out.push_back(x[k] - g.box_lo[k]);
                out.push_back(g.box_hi[k] - x[k]);
            }
            return;
        case DomainKind::halfspace: {
            double s = 0.0, nn = 0.0;
            for (int j = 0; j < g.d; ++j) {
                const std::size_t k = static_cast<std::size_t>(j);
                s += g.normal[k] * x[k];
                nn += g.normal[k] * g.normal[k];
            }
            out.push_back((g.offset - s) / std::sqrt(nn));
            return;
        }
        default:
            throw Error("bridge correction supports box and halfspace domains only");
    }
}

int realize_stopping(const StoppingRule& rule, const SamplePath& path, const Domain& domain) {
    const ExitResult er = exit_time(path, domain, path.start_index);
    for (int k = path.start_index; k < er.tau_index; ++k)
        if (rule_fires(rule, path.mesh, k, path.start_index, path.state(k))) return k;
    return er.tau_index;
}

double bridge_crossing_probability(const Domain& domain, std::span<const double> x_now,
                                   std::span<const double> x_next, double inv_var,
                                   std::vector<double>& d_now, std::vector<double>& d_next) {
    face_distances(domain, x_now, d_now);
    face_distances(domain, x_next, d_next);
    double survive = 1.0;
    for (std::size_t f = 0; f < d_now.size(); ++f) {
        const double p = std::exp(-2.0 * d_now[f] * d_next[f] * inv_var);
        survive *= p >= 1.0 ? 0.0 : 1.0 - p;
    }
    return 1.0 - survive;
}

ExitResult exit_time_bridge_corrected(const SamplePath& path, const Domain& domain,
                                      double sigma_const, int start_index) {
    if (!(sigma_const > 0.0)) throw Error("bridge correction needs sigma_const > 0");
    ExitResult r;
    const int n = path.mesh.n_steps;
    const double dt = path.mesh.dt();
    const double inv_var = 1.0 / (sigma_const * sigma_const * dt);
    std::vector<double> d_now, d_next;
    for (int k = start_index; k <= n; ++k) {
        if (!domain.contains(path.state(k))) {
            r.tau_index = k;
            r.tau = path.mesh.time(k);
            r.exited = true;
            return r;
        }
        if (k == n) break;
        const double p_cross = bridge_crossing_probability(domain, path.state(k),
                                                           path.state(k + 1), inv_var, d_now,
                                                           d_next);
        const double u = rng::uniform01(path.seed, path.path_index,
                                        static_cast<std::uint32_t>(k), rng::Purpose::bridge, 0);
        if (u < p_cross) {
            r.tau_index = k + 1;
            r.tau = path.mesh.time(k + 1);
            r.exited = true;
            return r;
        }
    }
    r.tau_index = n;
    r.tau = path.mesh.T;
    r.exited = false;
    return r;
}

double semicontinuity_certificate(const SamplePath& path, double a, const Domain& domain) {
    const ExitResult er = exit_time(path, domain, path.start_index);
    if (er.exited && er.tau <= a) {
        std::ostringstream os;
        os << "path exits before a: tau=" << er.tau << " <= a=" << a;
        throw Error(os.str());
    }
    int last = path.mesh.snap_down(a);
    if (last > path.mesh.n_steps) last = path.mesh.n_steps;
    double delta = std::numeric_limits<double>::infinity();
    for (int k = path.start_index; k <= last; ++k)
        delta = std::fmin(delta, distance_to_complement(path.state(k), domain));
    if (last < path.start_index)
        delta = distance_to_complement(path.state(path.start_index), domain);
    return delta;
}

}  // namespace exitctl
