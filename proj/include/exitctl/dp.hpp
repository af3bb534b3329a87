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

// Value function on a space-time grid by explicit backward recursion: one
// step of the optimality principle with the horizon shortened by dt,
// discretized with a monotone upwind stencil (drift one-sided by sign,
// diffusion central, nonnegative weights summing to one).  Data are zero at
// the horizon and outside G.

#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "exitctl/mesh.hpp"
#include "exitctl/policy.hpp"
#include "exitctl/problem.hpp"

namespace exitctl {

struct SpaceGrid {
    int d = 0;
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<int> n;    // nodes per axis, >= 2
    std::vector<double> dx;
    std::vector<std::uint8_t> inside;  // node-in-G mask, axis 0 fastest
    bool truncated = false;            // bounding box clipped an unbounded G

    long long node_count() const;
    double coord(int axis, int i) const {
        return lo[static_cast<std::size_t>(axis)] +
               dx[static_cast<std::size_t>(axis)] * static_cast<double>(i);
    }
    void node(long long flat, std::span<double> out) const;
};

/// Axis-aligned bounding box of G with `counts` nodes per axis; unbounded
/// domains are clipped to [-envelope, envelope]^d and flagged truncated.
SpaceGrid make_space_grid(const Domain& domain, std::span<const int> counts,
                          double envelope);

struct ValueGrid {
    SpaceGrid space;
    TimeMesh mesh;   // full solve mesh; values kept at stored_k slices only
    Domain domain;   // for the hard zero outside G in evaluate()
    std::vector<int> stored_k;          // ascending; first is 0, last is n_steps
    std::vector<double> values;         // slice-major, node within slice
    std::vector<std::int32_t> argmax;   // flat control-mesh index per (slice, node)
    int control_level = 1;              // 1-based
    std::uint64_t spec_hash = 0;
    double cfl_max = 0.0;               // max of dt*(sum a/dx^2 + |b|/dx) seen

    int slice_count() const { return static_cast<int>(stored_k.size()); }
    double stored_time(int s) const { return mesh.time(stored_k[static_cast<std::size_t>(s)]); }
    double value(int s, long long node) const {
        return values[static_cast<std::size_t>(s) * static_cast<std::size_t>(space.node_count()) +
                      static_cast<std::size_t>(node)];
    }
};

struct SolveOptions {
    int control_level = 1;      // 1-based
    int store_stride = 0;       // 0: derived from max_stored_slices
    int max_stored_slices = 2001;
    int workers = 1;
};

/// Backward sweep k = n_steps-1 .. 0.  Inside nodes take the max over the
/// level's control mesh of f*dt plus the stencil average of the next
/// slice; outside nodes stay 0.  Throws CflError naming the worst offender
/// when any (node, control) violates dt*(sum_j a_j/dx_j^2 + |b_j|/dx_j) <= 1,
/// and rejects coefficient sets whose sigma*sigma^T has off-diagonal mass.
ValueGrid solve(const ProblemSpec& spec, const SpaceGrid& grid, const TimeMesh& mesh,
                const SolveOptions& opts);

/// Steps per unit time needed for the CFL bound, from coefficient scans
/// over all nodes and mesh controls at a few times; safety < 1 tightens.
int auto_steps(const ProblemSpec& spec, const SpaceGrid& grid, int control_level,
               double safety);

/// Multilinear in space between the two bracketing stored slices, linear
/// in t.  Hard 0 whenever x is outside G (not merely outside the box), 0
/// at t = T; clamps tiny negatives.
double evaluate(const ValueGrid& grid, double t, std::span<const double> x);

/// The solver's argmax controls as a nearest-node lookup-table feedback
/// policy.  Ties were broken toward the lowest control-mesh index during
/// the solve.
ControlPolicy extract_policy(const ValueGrid& grid, const ProblemSpec& spec);

/// CSV export, header: t,x1..xd,v — one row per (stored slice, node).
void write_value_grid_csv(const ValueGrid& grid, std::ostream& os);

/// Compact binary round-trip format (magic, dims, doubles, row-major).
void write_value_grid_binary(const ValueGrid& grid, const std::string& path);
ValueGrid read_value_grid_binary(const std::string& path);

}  // namespace exitctl
