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

// Counter-based random numbers (Philox4x32-10, Salmon et al., SC'11).
//
// Every draw is a pure function of (seed, stream, step, purpose, block), so
// simulations are reproducible under any parallel schedule and a path can
// consume a variable number of draws (e.g. bridge-crossing uniforms) without
// desynchronizing its neighbours.

#pragma once

#include <array>
#include <cstdint>

namespace exitctl::rng {

/// Independent sub-streams multiplexed on one (seed, stream) pair.
enum class Purpose : std::uint32_t {
    gaussian = 0,      // Brownian increments
    bridge = 1,        // crossing-test uniforms, one block per face
    policy_coeffs = 2, // random feedback-policy coefficients
    derive = 3,        // seed derivation for nested estimators
    sampling = 4,      // Lipschitz / validation sampling
    perturb = 5,       // certificate perturbation tests
};

using Block = std::array<std::uint32_t, 4>;

/// Raw Philox4x32-10 block: counter (c0..c3), key (k0,k1).
Block philox4x32(const Block& counter, std::uint32_t k0, std::uint32_t k1);

/// One 128-bit block of the stream addressed by the tuple below.
Block block(std::uint64_t seed, std::uint64_t stream, std::uint32_t step,
            Purpose purpose, std::uint32_t block_index);

/// Two iid N(0,1) values from one block (Box-Muller).
std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t stream,
                                  std::uint32_t step, Purpose purpose,
                                  std::uint32_t block_index);

/// One uniform in [0,1) from the first 64 bits of a block.
double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint32_t step,
                 Purpose purpose, std::uint32_t block_index);

/// Deterministic 64-bit child seed (used for nested Monte Carlo and
/// per-row seeds in reports).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint32_t step = 0);

/// Fills `out[0..n)` with N(0,1) draws for one (stream, step) address.
/// Draw j comes from block j/2, lane j%2; layout is part of the
/// reproducibility contract.
void fill_normals(std::uint64_t seed, std::uint64_t stream, std::uint32_t step,
                  Purpose purpose, double* out, int n);

}  // namespace exitctl::rng
