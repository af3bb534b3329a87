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

// Mesh-valued stopping rules and half-open space-time cells.
//
// Every rule realizes a stopping index theta with start <= theta <= tau:
// Constant(s) fires once the mesh time passes s (snapped down), FirstHit(D)
// fires when the state leaves D, MinOf fires with its earliest child.  All
// three decide from the path up to the current index only, so they are
// nonanticipating by construction.

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "exitctl/mesh.hpp"
#include "exitctl/problem.hpp"

namespace exitctl {

struct StoppingRule {
    enum class Kind { constant, first_hit, min_of };
    Kind kind = Kind::constant;
    double time = 0.0;                  // constant
    Domain subdomain;                   // first_hit
    std::vector<StoppingRule> children; // min_of
    std::string id;                     // report label
};

StoppingRule constant_rule(double s);
StoppingRule first_hit_rule(Domain subdomain);
StoppingRule min_of_rule(std::vector<StoppingRule> children);

/// True when the rule has fired at or before mesh index k given the current
/// state.  Exit clipping (theta <= tau) is the caller's job.
bool rule_fires(const StoppingRule& rule, const TimeMesh& mesh, int k, int start_index,
                std::span<const double> x);

/// Half-open basis cell: (t', x') belongs iff t' in (t - r, t] and
/// |x' - x| < r (Euclidean).  Covers subtract predecessors positionally:
/// in a cell list, a point is owned by the FIRST cell whose base contains
/// it, which makes listed cells pairwise disjoint by construction.
struct HalfOpenCell {
    double t = 0.0;
    std::vector<double> x;
    double radius = 0.0;

    bool base_contains(double tq, std::span<const double> xq) const {
        if (!(tq > t - radius && tq <= t)) return false;
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double dx = xq[j] - x[j];
            s += dx * dx;
        }
        return s < radius * radius;
    }
};

/// Index of the owning cell (first base match), or -1 when uncovered.
int owning_cell(std::span<const HalfOpenCell> cells, double tq, std::span<const double> xq);

}  // namespace exitctl
