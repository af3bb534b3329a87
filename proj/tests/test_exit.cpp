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
#include <string>
#include <vector>

#include "builders.hpp"
#include "doctest.h"
#include "exitctl/exit_time.hpp"
#include "exitctl/paths.hpp"
#include "exitctl/policy.hpp"
#include "exitctl/stopping.hpp"

using namespace exitctl;

namespace {

Domain interval(double lo, double hi) {
    Domain g;
    g.kind = DomainKind::box;
    g.d = 1;
    g.box_lo = {lo};
    g.box_hi = {hi};
    return g;
}

/// Hand-built path with prescribed states; noise identity is irrelevant.
SamplePath fixed_path(const TimeMesh& mesh, std::vector<double> states, int start_index = 0) {
    SamplePath p;
    p.mesh = mesh;
    p.d = 1;
    p.m = 0;
    p.start_index = start_index;
    p.start_x = {states[static_cast<std::size_t>(start_index)]};
    p.states = std::move(states);
    p.seed = 1;
    p.path_index = 0;
    return p;
}

}  // namespace

TEST_SUITE("exit") {

TEST_CASE("distance to the complement for the basic shapes") {
    auto g = interval(-1.0, 1.0);
    std::vector<double> x{0.0};
    CHECK(distance_to_complement(x, g) == 1.0);
    x[0] = 0.75;
    CHECK(distance_to_complement(x, g) == 0.25);

    Domain ball;
    ball.kind = DomainKind::ball;
    ball.d = 2;
    ball.center = {0.0, 0.0};
    ball.radius = 1.0;
    std::vector<double> y{0.6, 0.0};
    CHECK(distance_to_complement(y, ball) == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("distance is 1-Lipschitz along simulated paths") {
    auto spec = testsupport::reference_problem();
    TimeMesh mesh{0.0, 1.0, 64};
    auto g = interval(-1.0, 1.0);
    for (std::uint64_t p = 0; p < 50; ++p) {
        auto bp = sample_brownian(mesh, 1, 2025, p);
        auto path = simulate(spec, 0, 0.0, std::vector<double>{0.0}, make_zero_policy(spec), bp);
        for (int k = 0; k + 1 <= mesh.n_steps; ++k) {
            const double d0 = distance_to_complement(path.state(k), g);
            const double d1 = distance_to_complement(path.state(k + 1), g);
            const double step = std::abs(path.state(k + 1)[0] - path.state(k)[0]);
            CHECK(std::abs(d1 - d0) <= step + 1e-12);
        }
    }
}

TEST_CASE("exit_time on hand-built paths") {
    TimeMesh mesh{0.0, 1.0, 10};
    auto g = interval(-1.0, 1.0);

    // Constant path at the center never exits.
    auto stay = fixed_path(mesh, std::vector<double>(11, 0.0));
    auto r = exit_time(stay, g, 0);
    CHECK(!r.exited);
    CHECK(r.tau_index == 10);
    CHECK(r.tau == 1.0);

    // Start outside: tau is the start time itself.
    auto outside = fixed_path(mesh, std::vector<double>(11, 2.0), 3);
    r = exit_time(outside, g, 3);
    CHECK(r.exited);
    CHECK(r.tau_index == 3);
    CHECK(r.tau == doctest::Approx(0.3).epsilon(1e-15));

    // Linear ramp k/10 against G = (-inf, 0.55): boundary is crossed
    // between k=5 and k=6, detected at the first grid point outside.
    Domain half;
    half.kind = DomainKind::halfspace;
    half.d = 1;
    half.normal = {1.0};
    half.offset = 0.55;
    std::vector<double> ramp(11);
    for (int k = 0; k <= 10; ++k) ramp[static_cast<std::size_t>(k)] = k / 10.0;
    auto lin = fixed_path(mesh, std::move(ramp));
    r = exit_time(lin, g, 0);  // also exits the interval at 1.0 only at k=10
    CHECK(r.tau_index == 10);
    r = exit_time(lin, half, 0);
    CHECK(r.exited);
    CHECK(r.tau_index == 6);
    CHECK(r.tau == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("bridge crossing probability endpoints") {
    auto g = interval(-1.0, 1.0);
    std::vector<double> scratch1, scratch2;

    // Touching the boundary: crossing is certain.
    std::vector<double> a{1.0}, b{0.5};
    CHECK(bridge_crossing_probability(g, a, b, 100.0, scratch1, scratch2) == 1.0);

    // Deep inside with tiny variance: probability is numerically zero.
    std::vector<double> c{0.0}, e{0.01};
    const double inv_var = 1.0 / (1.0 * 1e-4);
    CHECK(bridge_crossing_probability(g, c, e, inv_var, scratch1, scratch2) < 1e-300);

    // One-face hand value: G = (0, inf), step from 0.3 to 0.4, sigma^2 dt = 0.04:
    // p = exp(-2 * 0.3 * 0.4 / 0.04).
    Domain pos;
    pos.kind = DomainKind::halfspace;
    pos.d = 1;
    pos.normal = {-1.0};
    pos.offset = 0.0;
    std::vector<double> u{0.3}, v{0.4};
    const double expected = std::exp(-2.0 * 0.3 * 0.4 / 0.04);
    CHECK(bridge_crossing_probability(pos, u, v, 25.0, scratch1, scratch2) ==
          doctest::Approx(expected).epsilon(1e-12));

    CHECK_THROWS_AS(
        [&] {
            Domain ball;
            ball.kind = DomainKind::ball;
            ball.d = 1;
            ball.center = {0.0};
            ball.radius = 1.0;
            std::vector<double> p{0.0}, q{0.1};
            return bridge_crossing_probability(ball, p, q, 1.0, scratch1, scratch2);
        }(),
        Error);
}

TEST_CASE("bridge correction only shortens exit times and shrinks with dt") {
    // E[tau ^ T] under the correction must sit below the uncorrected value,
    // and the gap must shrink as the mesh refines.
    auto spec = testsupport::reference_problem();
    spec.horizon = 1.0;
    auto g = interval(-1.0, 1.0);
    auto policy = make_zero_policy(spec);
    std::vector<double> x0{0.5};

    double gap_coarse = 0.0, gap_fine = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
        const int n_steps = pass == 0 ? 16 : 256;
        TimeMesh mesh{0.0, 1.0, n_steps};
        const int n_paths = 4000;
        double sum_plain = 0.0, sum_bridge = 0.0;
        for (int p = 0; p < n_paths; ++p) {
            auto bp = sample_brownian(mesh, 1, 555, static_cast<std::uint64_t>(p));
            auto path = simulate(spec, 0, 0.0, x0, policy, bp);
            auto plain = exit_time(path, g, 0);
            auto corr = exit_time_bridge_corrected(path, g, 1.0, 0);
            CHECK(corr.tau_index <= plain.tau_index);
            sum_plain += plain.tau;
            sum_bridge += corr.tau;
        }
        const double gap = (sum_plain - sum_bridge) / n_paths;
        CHECK(gap >= 0.0);
        (pass == 0 ? gap_coarse : gap_fine) = gap;
    }
    CHECK(gap_fine < gap_coarse);
    CHECK(gap_coarse > 0.001);  // the correction must actually do something
}

TEST_CASE("bridge-corrected mean exit time approaches the continuous value") {
    // Start at 0 in (-1,1) with unit noise and T = 1: E[tau ^ 1] has a
    // classical eigenfunction series; truncate far past convergence.
    double oracle = 0.0;
    for (int k = 0; k < 200; ++k) {
        const double lam = (2 * k + 1) * (2 * k + 1) * M_PI * M_PI / 8.0;
        const double coef = 4.0 / M_PI * (k % 2 == 0 ? 1.0 : -1.0) / (2 * k + 1);
        // E[tau ^ T] = E tau - E[(tau - T)^+]; integrate the survival tail:
        // P(tau > s) = coef-series of exp(-lam s).
        oracle += coef * (1.0 - std::exp(-lam * 1.0)) / lam;
    }

    auto spec = testsupport::reference_problem();
    spec.horizon = 1.0;
    auto g = interval(-1.0, 1.0);
    auto policy = make_zero_policy(spec);
    std::vector<double> x0{0.0};
    TimeMesh mesh{0.0, 1.0, 512};
    const int n_paths = 20000;
    double sum = 0.0, sum2 = 0.0;
    for (int p = 0; p < n_paths; ++p) {
        auto bp = sample_brownian(mesh, 1, 808, static_cast<std::uint64_t>(p));
        auto path = simulate(spec, 0, 0.0, x0, policy, bp);
        auto corr = exit_time_bridge_corrected(path, g, 1.0, 0);
        sum += corr.tau;
        sum2 += corr.tau * corr.tau;
    }
    const double mean = sum / n_paths;
    const double se = std::sqrt((sum2 / n_paths - mean * mean) / n_paths);
    CHECK(std::abs(mean - oracle) < 3.0 * se + 0.01);
}

TEST_CASE("realize_stopping clips rules at the exit") {
    TimeMesh mesh{0.0, 1.0, 10};
    auto g = interval(-1.0, 1.0);
    std::vector<double> ramp(11);
    for (int k = 0; k <= 10; ++k) ramp[static_cast<std::size_t>(k)] = 0.15 * k;
    auto path = fixed_path(mesh, std::move(ramp));  // exits at k=7 (1.05 > 1)

    CHECK(realize_stopping(constant_rule(0.0), path, g) == 0);
    CHECK(realize_stopping(constant_rule(0.31), path, g) == 3);
    CHECK(realize_stopping(constant_rule(2.0), path, g) == 7);  // clipped at tau
    Domain inner = interval(-0.5, 0.5);
    CHECK(realize_stopping(first_hit_rule(inner), path, g) == 4);  // 0.6 > 0.5
    CHECK(realize_stopping(min_of_rule({constant_rule(0.2), first_hit_rule(inner)}),
                           path, g) == 2);
}

TEST_CASE("semicontinuity certificate on hand-built paths") {
    TimeMesh mesh{0.0, 1.0, 10};
    auto g = interval(-1.0, 1.0);

    // Constant path at the center: certificate over the whole horizon is
    // the full distance 1.
    auto stay = fixed_path(mesh, std::vector<double>(11, 0.0));
    CHECK(semicontinuity_certificate(stay, 1.0, g) == 1.0);

    // Path whose closest approach is 0.3.
    std::vector<double> wobble{0.0, 0.4, 0.7, 0.2, -0.5, 0.0, 0.3, 0.1, 0.0, 0.0, 0.0};
    auto w = fixed_path(mesh, std::move(wobble));
    CHECK(semicontinuity_certificate(w, 1.0, g) == doctest::Approx(0.3).epsilon(1e-15));

    // Precondition violation: the path exits before a.
    std::vector<double> out{0.0, 0.5, 1.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    auto bad = fixed_path(mesh, std::move(out));
    CHECK_THROWS_WITH_AS(semicontinuity_certificate(bad, 0.9, g),
                         doctest::Contains("exits before"), Error);
}

TEST_CASE("certificate survives adversarial perturbations below delta/2") {
    auto spec = testsupport::reference_problem();
    spec.horizon = 1.0;
    TimeMesh mesh{0.0, 1.0, 50};
    auto g = interval(-1.0, 1.0);
    auto policy = make_zero_policy(spec);
    std::vector<double> x0{0.0};
    const double a = 0.5;

    int tested = 0;
    for (std::uint64_t p = 0; tested < 40 && p < 4000; ++p) {
        auto bp = sample_brownian(mesh, 1, 31337, p);
        auto path = simulate(spec, 0, 0.0, x0, policy, bp);
        auto r = exit_time(path, g, 0);
        if (r.exited && r.tau <= a) continue;  // precondition filter
        ++tested;
        const double delta = semicontinuity_certificate(path, a, g);
        REQUIRE(delta > 0.0);

        for (int trial = 0; trial < 200; ++trial) {
            SamplePath pert = path;
            for (int k = 0; k <= mesh.n_steps; ++k) {
                const double u = rng::uniform01(p, static_cast<std::uint64_t>(trial),
                                                static_cast<std::uint32_t>(k),
                                                rng::Purpose::perturb, 0);
                pert.states[static_cast<std::size_t>(k)] +=
                    (2.0 * u - 1.0) * 0.499 * delta;
            }
            auto rp = exit_time(pert, g, 0);
            const bool still_in_past_a = !rp.exited || rp.tau > a;
            CHECK(still_in_past_a);
        }
    }
    CHECK(tested == 40);
}

TEST_CASE("half-open cells: membership and first-match ownership") {
    HalfOpenCell c;
    c.t = 1.0;
    c.x = {0.0};
    c.radius = 0.5;
    std::vector<double> at{0.0};
    CHECK(c.base_contains(1.0, at));       // right endpoint included
    CHECK(c.base_contains(0.6, at));       // just inside the window
    CHECK(!c.base_contains(0.5, at));      // left endpoint excluded
    CHECK(!c.base_contains(1.0001, at));   // future excluded
    std::vector<double> far{0.5};
    CHECK(!c.base_contains(1.0, far));     // open ball in space

    HalfOpenCell c2 = c;
    c2.x = {0.25};
    std::vector<HalfOpenCell> cells{c, c2};
    std::vector<double> q{0.2};
    CHECK(owning_cell(cells, 1.0, q) == 0);        // both match; first wins
    std::vector<double> q2{0.6};
    CHECK(owning_cell(cells, 1.0, q2) == 1);       // only the shifted cell
    std::vector<double> q3{2.0};
    CHECK(owning_cell(cells, 1.0, q3) == -1);      // uncovered
    CHECK(owning_cell(cells, 0.4, q) == -1);       // too early
}

}  // TEST_SUITE
