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

#pragma once

namespace exitctl {

/// Uniform time grid t_k = t0 + k*(T-t0)/n_steps, k = 0..n_steps.
struct TimeMesh {
    double t0 = 0.0;
    double T = 0.0;
    int n_steps = 0;

    double dt() const { return (T - t0) / n_steps; }

    /// Endpoint-exact: time(0) == t0 and time(n_steps) == T bitwise.
    double time(int k) const {
        return t0 + (T - t0) * (static_cast<double>(k) / static_cast<double>(n_steps));
    }

    /// Largest k with time(k) <= s, clamped to [0, n_steps].  A half-ulp
    /// guard keeps values intended to sit on the mesh from rounding down
    /// one full step.
    int snap_down(double s) const {
        const double k_real = (s - t0) / dt() + 1e-9;
        if (k_real <= 0.0) return 0;
        const int k = static_cast<int>(k_real);
        return k > n_steps ? n_steps : k;
    }

    bool same_as(const TimeMesh& o) const {
        return t0 == o.t0 && T == o.T && n_steps == o.n_steps;
    }
};

}  // namespace exitctl
