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

// Exit-time control problems: open domain G, horizon T, coefficients
// b/sigma/f as expressions of (t, x, u), and a nested family of compact
// control boxes U(1) ⊆ U(2) ⊆ ... each carrying a finite mesh for solvers.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "exitctl/expr.hpp"

namespace exitctl::ini {
class Reader;
struct File;
}  // namespace exitctl::ini

namespace exitctl {

struct ControlLevel {
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<int> mesh_counts;  // >= 1 per axis
};

/// Nested control boxes U(1) ⊆ U(2) ⊆ ...  Methods here take a 0-based
/// index into `levels`; the option structs of the solver and estimators
/// speak 1-based and convert at their boundary.  When m == 0 every method
/// short-circuits, so control-free problems never index `levels`.
struct ControlSpace {
    int m = 0;
    std::vector<ControlLevel> levels;

    int level_count() const { return static_cast<int>(levels.size()); }

    /// Mesh node i on one axis: lo + i*(hi-lo)/(count-1); a single-node
    /// axis sits at the midpoint.
    double axis_point(int level, int axis, int i) const;

    /// Number of mesh points of a level (1 when m == 0).
    long long mesh_size(int level) const;

    /// Decodes a flat mesh index (axis 0 fastest) into a control vector.
    /// The flat order defines the deterministic tie-break used by solvers.
    void mesh_point(int level, long long flat, std::span<double> out) const;

    /// Projects u onto the level box, coordinatewise.
    void clamp(int level, std::span<double> u) const;

    bool level_contains(int level, std::span<const double> u) const;
};

enum class DomainKind { box, ball, halfspace, expression };

/// Open set G, one of four shapes. `expression` means G = {x : phi(x) > 0}
/// with a caller-declared Lipschitz constant for phi so that
/// max(0, phi(x)) / phi_lipschitz lower-bounds the distance to G^c.
struct Domain {
    DomainKind kind = DomainKind::box;
    int d = 0;
    std::vector<double> box_lo, box_hi;  // box
    std::vector<double> center;          // ball
    double radius = 0.0;                 // ball
    std::vector<double> normal;          // halfspace: G = {x : normal·x < offset}
    double offset = 0.0;                 // halfspace
    expr::Expression phi;                // expression
    double phi_lipschitz = 0.0;          // expression

    /// Strict membership test (G is open).
    bool contains(std::span<const double> x) const;

    /// Lower bound on the Euclidean distance from x to G^c; exact for
    /// box/ball/halfspace, max(0,phi)/phi_lipschitz for expression
    /// domains.  1-Lipschitz in x, and 0 outside G.
    double dist_lb(std::span<const double> x) const;
};

struct CoefficientSet {
    int d = 0;
    int m = 0;
    std::vector<expr::Expression> b;      // d entries
    std::vector<expr::Expression> sigma;  // d*d entries, row-major
    expr::Expression f;                   // nonnegative running reward

    const expr::Expression& sigma_at(int i, int j) const {
        return sigma[static_cast<std::size_t>(i) * static_cast<std::size_t>(d) +
                     static_cast<std::size_t>(j)];
    }
};

struct ProblemSpec {
    std::string name;  // report metadata only
    double horizon = 0.0;
    Domain domain;
    CoefficientSet coefficients;
    ControlSpace control_space;
    double sample_envelope = 10.0;  // validation samples satisfy |x_j| <= this

    int dim_x() const { return domain.d; }
    int dim_u() const { return control_space.m; }
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

struct LipschitzEstimate {
    double k_lip = 0.0;
    double k_growth = 0.0;
};

/// Structural checks: dimension agreement, nonempty open domain, nested
/// control levels, f >= 0 and finite b/sigma on deterministic samples.
/// Never throws on a bad spec; problems come back as report entries.
ValidationReport validate(const ProblemSpec& spec);

/// Sampled Lipschitz and linear-growth constants of (b, sigma) over
/// u ∈ U(1..level).  Lower levels' samples are included so the estimate
/// is monotone in `level` by construction.  Deterministic given seed.
/// Throws Error naming the expression on non-finite evaluation.
LipschitzEstimate estimate_lipschitz(const ProblemSpec& spec, int level,
                                     int n_samples, std::uint64_t seed);

/// Canonical plain-text rendering; equal specs produce equal text.
std::string canonical_text(const ProblemSpec& spec);

/// FNV-1a 64 of canonical_text; stamped into solver outputs and reports
/// so grids are never evaluated against the wrong problem.
std::uint64_t problem_hash(const ProblemSpec& spec);

/// Loads the [horizon]/[domain]/[coefficients]/[control_space] sections.
/// Unknown keys are hard errors.
ProblemSpec parse_problem(const ini::File& file);
ProblemSpec load_problem(const std::string& path);

}  // namespace exitctl
