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

// Test-only reference solver, independent of the library code paths.
//
// Solves the linear backward problem
//     v_t + (1/2) sigma^2 v_xx + b v_x + f = 0   on (xl, xr) x [0, T]
//     v(T, .) = 0,  v(., xl) = v(., xr) = 0
// with Crank-Nicolson time stepping and a tridiagonal (Thomas) solve.
// Used as an algebraically independent route for expected-exit-time style
// benchmarks; the production solver is an explicit monotone scheme and
// shares no code with this file.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace testsupport {

struct CrankNicolson1D {
    double xl, xr, T;
    double sigma, drift, source;
    std::size_t n_nodes;   // interior + 2 boundary nodes
    std::size_t n_steps;

    // returns v(0, x) on all nodes, including the zero boundary nodes
    std::vector<double> solve() const {
        if (n_nodes < 3 || n_steps < 1) throw std::invalid_argument("mesh too small");
        const std::size_t n = n_nodes;
        const std::size_t ni = n - 2;
        const double dx = (xr - xl) / static_cast<double>(n - 1);
        const double dt = T / static_cast<double>(n_steps);
        const double a = 0.5 * sigma * sigma;

        // interior operator L v = a v_xx + b v_x, central differences
        const double lo = a / (dx * dx) - drift / (2.0 * dx);
        const double di = -2.0 * a / (dx * dx);
        const double up = a / (dx * dx) + drift / (2.0 * dx);

        // (I - dt/2 L) v^k = (I + dt/2 L) v^{k+1} + dt f
        std::vector<double> sub(ni, -0.5 * dt * lo);
        std::vector<double> diag(ni, 1.0 - 0.5 * dt * di);
        std::vector<double> sup(ni, -0.5 * dt * up);

        std::vector<double> v(ni, 0.0), rhs(ni), cp(ni), dp(ni);
        for (std::size_t step = 0; step < n_steps; ++step) {
            for (std::size_t i = 0; i < ni; ++i) {
                const double vm = (i == 0) ? 0.0 : v[i - 1];
                const double vp = (i + 1 == ni) ? 0.0 : v[i + 1];
                rhs[i] = v[i] + 0.5 * dt * (lo * vm + di * v[i] + up * vp) + dt * source;
            }
            // Thomas algorithm
            cp[0] = sup[0] / diag[0];
            dp[0] = rhs[0] / diag[0];
            for (std::size_t i = 1; i < ni; ++i) {
                const double m = diag[i] - sub[i] * cp[i - 1];
                cp[i] = sup[i] / m;
                dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / m;
            }
            v[ni - 1] = dp[ni - 1];
            for (std::size_t i = ni - 1; i-- > 0;) v[i] = dp[i] - cp[i] * v[i + 1];
        }

        std::vector<double> full(n, 0.0);
        for (std::size_t i = 0; i < ni; ++i) full[i + 1] = v[i];
        return full;
    }

    double value_at(double x) const {
        const auto full = solve();
        const double dx = (xr - xl) / static_cast<double>(n_nodes - 1);
        const double r = (x - xl) / dx;
        const auto i = static_cast<std::size_t>(r);
        if (i + 1 >= n_nodes) return full.back();
        const double w = r - static_cast<double>(i);
        return (1.0 - w) * full[i] + w * full[i + 1];
    }
};

}  // namespace testsupport
