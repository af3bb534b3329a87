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

#include "exitctl/rng.hpp"

#include <cmath>

namespace exitctl::rng {

namespace {

constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline std::uint32_t mulhi32(std::uint32_t a, std::uint32_t b, std::uint32_t* lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    *lo = static_cast<std::uint32_t>(p);
    return static_cast<std::uint32_t>(p >> 32);
}

inline void round_once(Block& c, std::uint32_t& k0, std::uint32_t& k1) {
    std::uint32_t lo0, lo1;
    const std::uint32_t hi0 = mulhi32(kPhiloxM4x32A, c[0], &lo0);
    const std::uint32_t hi1 = mulhi32(kPhiloxM4x32B, c[2], &lo1);
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
    k0 += kPhiloxW32A;
    k1 += kPhiloxW32B;
}

// (0,1]: strictly positive so log() in Box-Muller is finite.
inline double to_unit_positive(std::uint64_t x) {
    return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

inline double to_unit(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

inline std::uint64_t join64(std::uint32_t lo, std::uint32_t hi) {
    return static_cast<std::uint64_t>(lo) | (static_cast<std::uint64_t>(hi) << 32);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

Block philox4x32(const Block& counter, std::uint32_t k0, std::uint32_t k1) {
    Block c = counter;
    for (int r = 0; r < 10; ++r) round_once(c, k0, k1);
    return c;
}

Block block(std::uint64_t seed, std::uint64_t stream, std::uint32_t step,
            Purpose purpose, std::uint32_t block_index) {
    const Block counter = {
        static_cast<std::uint32_t>(stream),
        static_cast<std::uint32_t>(stream >> 32),
        step,
        (static_cast<std::uint32_t>(purpose) << 24) | (block_index & 0x00FFFFFFu),
    };
    return philox4x32(counter, static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32));
}

std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t stream,
                                  std::uint32_t step, Purpose purpose,
                                  std::uint32_t block_index) {
    const Block b = block(seed, stream, step, purpose, block_index);
    const double u1 = to_unit_positive(join64(b[0], b[1]));
    const double u2 = to_unit(join64(b[2], b[3]));
    const double r = std::sqrt(-2.0 * std::log(u1));
    return {r * std::cos(kTwoPi * u2), r * std::sin(kTwoPi * u2)};
}

double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint32_t step,
                 Purpose purpose, std::uint32_t block_index) {
    const Block b = block(seed, stream, step, purpose, block_index);
    return to_unit(join64(b[0], b[1]));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint32_t step) {
    const Block b = block(seed, stream, step, Purpose::derive, 0);
    return join64(b[0], b[1]) ^ (join64(b[2], b[3]) * 0x9E3779B97F4A7C15ull);
}

void fill_normals(std::uint64_t seed, std::uint64_t stream, std::uint32_t step,
                  Purpose purpose, double* out, int n) {
    for (int j = 0; j < n; j += 2) {
        const auto z = normal_pair(seed, stream, step, purpose,
                                   static_cast<std::uint32_t>(j / 2));
        out[j] = z[0];
        if (j + 1 < n) out[j + 1] = z[1];
    }
}

}  // namespace exitctl::rng
