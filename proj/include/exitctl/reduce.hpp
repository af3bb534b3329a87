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

// Schedule-independent reductions.  Per-item results are first materialized
// into a vector (parallel, disjoint writes), then reduced here in a fixed
// order, so estimates are bit-identical for any worker count.

#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace exitctl {

/// Fixed-shape pairwise summation; deterministic and accurate to
/// O(log n) rounding.
inline double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n <= 8) {
        double s = 0.0;
        for (double c : v) s += c;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct MeanStderr {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Mean as anchor + pairwise-sum(deviations)/n with anchor = v[0]: when all
/// entries are equal the deviations are exactly zero, so the mean equals
/// the common value bitwise and the standard error is exactly 0.
inline MeanStderr anchored_mean_stderr(std::span<const double> v) {
    MeanStderr out;
    const std::size_t n = v.size();
    if (n == 0) return out;
    const double anchor = v[0];
    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) dev[i] = v[i] - anchor;
    out.mean = anchor + pairwise_sum(dev) / static_cast<double>(n);
    if (n < 2) return out;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = v[i] - out.mean;
        dev[i] = d * d;
    }
    const double var = pairwise_sum(dev) / static_cast<double>(n - 1);
    out.std_error = std::sqrt(var / static_cast<double>(n));
    return out;
}

}  // namespace exitctl
