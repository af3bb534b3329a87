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

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "doctest.h"
#include "exitctl/rng.hpp"

using namespace exitctl;

TEST_SUITE("rng") {

TEST_CASE("philox known-answer vector") {
    // Reference vector from the Random123 distribution (philox4x32-10,
    // all-ones counter and key).
    rng::Block ctr{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu};
    rng::Block out = rng::philox4x32(ctr, 0xffffffffu, 0xffffffffu);
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);

    rng::Block zero{0u, 0u, 0u, 0u};
    rng::Block out0 = rng::philox4x32(zero, 0u, 0u);
    CHECK(out0[0] == 0x6627e8d5u);
    CHECK(out0[1] == 0xe169c58du);
    CHECK(out0[2] == 0xbc57ac4cu);
    CHECK(out0[3] == 0x9b00dbd8u);
}

TEST_CASE("blocks are pure functions of their address") {
    rng::Block a = rng::block(42, 7, 3, rng::Purpose::gaussian, 11);
    rng::Block b = rng::block(42, 7, 3, rng::Purpose::gaussian, 11);
    CHECK(a == b);

    // Any coordinate change moves the block.
    CHECK(rng::block(43, 7, 3, rng::Purpose::gaussian, 11) != a);
    CHECK(rng::block(42, 8, 3, rng::Purpose::gaussian, 11) != a);
    CHECK(rng::block(42, 7, 4, rng::Purpose::gaussian, 11) != a);
    CHECK(rng::block(42, 7, 3, rng::Purpose::bridge, 11) != a);
    CHECK(rng::block(42, 7, 3, rng::Purpose::gaussian, 12) != a);
}

TEST_CASE("normal pairs have standard moments") {
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0, sum3 = 0.0;
    for (int i = 0; i < n; i += 2) {
        auto z = rng::normal_pair(1234, 0, 0, rng::Purpose::gaussian,
                                  static_cast<std::uint32_t>(i / 2));
        for (double v : z) {
            sum += v;
            sum2 += v * v;
            sum3 += v * v * v;
        }
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    const double skew = sum3 / n;
    // 5 sigma bands for n = 2e5 iid N(0,1) draws.
    CHECK(std::abs(mean) < 5.0 / std::sqrt(double(n)));
    CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / double(n)));
    CHECK(std::abs(skew) < 5.0 * std::sqrt(15.0 / double(n)));
}

TEST_CASE("uniforms live in [0,1) and look uniform") {
    const int n = 100000;
    double sum = 0.0;
    int low = 0;
    for (int i = 0; i < n; ++i) {
        double u = rng::uniform01(99, 5, 0, rng::Purpose::sampling,
                                  static_cast<std::uint32_t>(i));
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        if (u < 0.5) ++low;
    }
    CHECK(std::abs(sum / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(double(low) / n - 0.5) < 5.0 * 0.5 / std::sqrt(double(n)));
}

TEST_CASE("fill_normals matches the pair layout") {
    double out[7];
    rng::fill_normals(7, 3, 2, rng::Purpose::gaussian, out, 7);
    for (int j = 0; j < 7; ++j) {
        auto z = rng::normal_pair(7, 3, 2, rng::Purpose::gaussian,
                                  static_cast<std::uint32_t>(j / 2));
        CHECK(out[j] == z[j % 2]);
    }
}

TEST_CASE("derived seeds are distinct across streams and steps") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 64; ++s)
        for (std::uint32_t k = 0; k < 4; ++k)
            seen.insert(rng::derive_seed(2024, s, k));
    CHECK(seen.size() == 64 * 4);
    CHECK(rng::derive_seed(2024, 1) == rng::derive_seed(2024, 1, 0));
    CHECK(rng::derive_seed(2024, 1) != rng::derive_seed(2025, 1));
}

TEST_CASE("purposes index disjoint substreams") {
    // First uniforms of each purpose at the same address must differ.
    std::set<std::uint64_t> bits;
    for (auto p : {rng::Purpose::gaussian, rng::Purpose::bridge, rng::Purpose::policy_coeffs,
                   rng::Purpose::derive, rng::Purpose::sampling, rng::Purpose::perturb}) {
        double u = rng::uniform01(5, 0, 0, p, 0);
        std::uint64_t raw;
        static_assert(sizeof raw == sizeof u);
        __builtin_memcpy(&raw, &u, sizeof raw);
        bits.insert(raw);
    }
    CHECK(bits.size() == 6);
}

}  // TEST_SUITE
