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
#include <string>
#include <vector>

#include "doctest.h"
#include "exitctl/errors.hpp"
#include "exitctl/expr.hpp"
#include "exitctl/rng.hpp"

using namespace exitctl;

namespace {

double ev(const std::string& text, double t, std::vector<double> x,
          std::vector<double> u = {}) {
    auto e = expr::parse(text, static_cast<int>(x.size()), static_cast<int>(u.size()));
    return expr::eval(e, t, x, u);
}

}  // namespace

TEST_SUITE("expr") {

TEST_CASE("parse builds the expected tree for 1 - x1^2") {
    auto e = expr::parse("1 - x1^2", 1, 0);
    REQUIRE(!e.nodes.empty());
    const auto& root = e.nodes.back();
    CHECK(root.kind == expr::NodeKind::sub);
    const auto& lhs = e.nodes[root.lhs];
    const auto& rhs = e.nodes[root.rhs];
    CHECK(lhs.kind == expr::NodeKind::constant);
    CHECK(lhs.value == 1.0);
    CHECK(rhs.kind == expr::NodeKind::pow);
    CHECK(e.nodes[rhs.lhs].kind == expr::NodeKind::var_x);
    CHECK(e.nodes[rhs.lhs].index == 0);
    CHECK(e.nodes[rhs.rhs].kind == expr::NodeKind::constant);
    CHECK(e.nodes[rhs.rhs].value == 2.0);

    // Children precede parents, root is last.
    for (std::size_t i = 0; i < e.nodes.size(); ++i) {
        if (e.nodes[i].lhs >= 0) CHECK(e.nodes[i].lhs < static_cast<int>(i));
        if (e.nodes[i].rhs >= 0) CHECK(e.nodes[i].rhs < static_cast<int>(i));
    }
}

TEST_CASE("binary calls and the time variable parse") {
    auto e = expr::parse("min(u1, 0) * sin(t)", 1, 1);
    CHECK(e.uses_t());
    CHECK(e.uses_u());
    std::vector<double> x{0.3}, u{-2.0};
    CHECK(expr::eval(e, 1.0, x, u) == doctest::Approx(-2.0 * std::sin(1.0)));
}

TEST_CASE("out-of-range variables are rejected at parse time") {
    CHECK_THROWS_AS(expr::parse("x2", 1, 0), ExprError);
    CHECK_THROWS_AS(expr::parse("u1", 1, 0), ExprError);
    CHECK_THROWS_AS(expr::parse("x0", 1, 0), ExprError);
    CHECK_THROWS_AS(expr::parse("frob(x1)", 1, 0), ExprError);
    CHECK_THROWS_AS(expr::parse("1 +", 1, 0), ExprError);
    CHECK_THROWS_AS(expr::parse("min(x1)", 1, 0), ExprError);
    try {
        expr::parse("1 + x2*3", 1, 0);
        FAIL("expected ExprError");
    } catch (const ExprError& err) {
        CHECK(err.byte_offset == 4);
    }
}

TEST_CASE("evaluation matches hand values") {
    CHECK(ev("1 - x1^2", 0.0, {0.5}) == 0.75);
    CHECK(ev("sign(x1)", 0.0, {0.0}) == 0.0);
    CHECK(ev("sign(x1)", 0.0, {-3.0}) == -1.0);
    CHECK(ev("sign(x1)", 0.0, {2.0}) == 1.0);
    CHECK(ev("0^0", 0.0, {0.0}) == 1.0);
    CHECK(ev("2^-1", 0.0, {0.0}) == 0.5);
    CHECK(ev("-x1^2", 0.0, {3.0}) == -9.0);   // unary minus binds looser than ^
    CHECK(ev("2^3^2", 0.0, {0.0}) == 512.0);  // right-associative
    CHECK(ev("max(min(t, 2), -1)", 5.0, {0.0}) == 2.0);
    CHECK(ev("abs(0 - 4) + tanh(0)", 0.0, {0.0}) == 4.0);
}

TEST_CASE("domain errors raise located ExprError") {
    CHECK_THROWS_AS(ev("1 / x1", 0.0, {0.0}), ExprError);
    CHECK_THROWS_AS(ev("log(x1)", 0.0, {0.0}), ExprError);
    CHECK_THROWS_AS(ev("log(0 - t)", 1.0, {0.0}), ExprError);
    CHECK_THROWS_AS(ev("sqrt(0 - 1)", 0.0, {0.0}), ExprError);
    CHECK_THROWS_AS(ev("(0-2)^0.5", 0.0, {0.0}), ExprError);
    try {
        ev("1 + 1/x1", 0.0, {0.0});
        FAIL("expected ExprError");
    } catch (const ExprError& err) {
        CHECK(err.byte_offset >= 4);  // points into the division
    }
}

TEST_CASE("precedence: a + b*c groups multiplicatively") {
    auto flat = expr::parse("t + x1*x2", 2, 0);
    auto grouped = expr::parse("t + (x1*x2)", 2, 0);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> x{
            rng::uniform01(11, 0, 0, rng::Purpose::sampling, 2 * i) * 4 - 2,
            rng::uniform01(11, 0, 0, rng::Purpose::sampling, 2 * i + 1) * 4 - 2};
        double t = 0.1 * i;
        CHECK(expr::eval(flat, t, x, {}) == expr::eval(grouped, t, x, {}));
    }
}

TEST_CASE("print round-trips through parse with identical values") {
    const char* cases[] = {"1 - x1^2", "min(u1, 0) * sin(t)", "-x1^2 + 2*t",
                           "tanh(x1) / (1 + abs(u1))", "max(x1, 0 - x1) ^ 2"};
    for (const char* s : cases) {
        auto e = expr::parse(s, 1, 1);
        auto r = expr::parse(expr::print(e), 1, 1);
        for (int i = 0; i < 25; ++i) {
            std::vector<double> x{2.0 * rng::uniform01(3, 9, 0, rng::Purpose::sampling, i) - 1.0};
            std::vector<double> u{2.0 * rng::uniform01(3, 10, 0, rng::Purpose::sampling, i) - 1.0};
            double t = 0.13 * i;
            CHECK(expr::eval(e, t, x, u) == expr::eval(r, t, x, u));
        }
    }
}

TEST_CASE("evaluation is pure: repeats are bitwise identical") {
    auto e = expr::parse("sin(x1)*exp(0 - x2^2) + max(t, x1) / (2 + cos(u1))", 2, 1);
    std::vector<double> x{0.7, -0.4}, u{1.3};
    const double first = expr::eval(e, 0.9, x, u);
    for (int i = 0; i < 100; ++i) CHECK(expr::eval(e, 0.9, x, u) == first);
}

TEST_CASE("fuzz: random token soup either parses or raises a located error") {
    static const char* kTokens[] = {"1",   "2.5", "0.001", "t",   "x1",  "x2",  "u1",
                                    "+",   "-",   "*",     "/",   "^",   "(",   ")",
                                    ",",   "min", "max",   "exp", "log", "sin", "cos",
                                    "abs", "qqq", "x9",    "^^",  ".",   "1e3", ""};
    const int kAlphabet = sizeof kTokens / sizeof kTokens[0];
    int parsed = 0, rejected = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const int len = 1 + static_cast<int>(
            11 * rng::uniform01(trial + 1, 0, 0, rng::Purpose::sampling, 0));
        std::string text;
        for (int k = 0; k < len; ++k) {
            double u = rng::uniform01(trial + 1, 1, 0, rng::Purpose::sampling, k);
            text += kTokens[static_cast<int>(u * kAlphabet) % kAlphabet];
            text += ' ';
        }
        try {
            auto e = expr::parse(text, 2, 1);
            CHECK(!e.nodes.empty());
            ++parsed;
        } catch (const ExprError& err) {
            CHECK(err.byte_offset <= text.size());
            ++rejected;
        }
        // Anything else (segfault, std::bad_alloc, logic_error) fails the test.
    }
    CHECK(parsed > 20);
    CHECK(rejected > 500);
}

TEST_CASE("fuzz: evaluating random well-formed expressions never escapes the API") {
    // Grammar-directed generator.  Every evaluation must end in a double or
    // an ExprError; overflow to inf is IEEE behavior and acceptable.
    struct Gen {
        std::uint64_t seed;
        std::uint32_t ctr = 0;
        double u() { return rng::uniform01(seed, 77, 0, rng::Purpose::sampling, ctr++); }
        std::string atom() {
            double p = u();
            if (p < 0.3) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.3f", u() * 8 - 4);
                std::string s(buf);
                if (!s.empty() && s[0] == '-') return "(0 - " + s.substr(1) + ")";
                return s;
            }
            if (p < 0.5) return "t";
            if (p < 0.75) return "x1";
            return "x2";
        }
        std::string gen(int depth) {
            if (depth <= 0) return atom();
            double p = u();
            if (p < 0.18) return "(" + gen(depth - 1) + " + " + gen(depth - 1) + ")";
            if (p < 0.36) return "(" + gen(depth - 1) + " - " + gen(depth - 1) + ")";
            if (p < 0.5) return "(" + gen(depth - 1) + " * " + gen(depth - 1) + ")";
            if (p < 0.6) return "(" + gen(depth - 1) + " / " + gen(depth - 1) + ")";
            if (p < 0.68) return "(" + gen(depth - 1) + " ^ " + gen(depth - 1) + ")";
            if (p < 0.74) return "(-" + gen(depth - 1) + ")";
            const char* fn[] = {"abs", "exp", "log", "sin", "cos", "sqrt", "sign", "tanh"};
            if (p < 0.92) return std::string(fn[static_cast<int>(u() * 8) & 7]) + "(" +
                                 gen(depth - 1) + ")";
            if (p < 0.96) return "min(" + gen(depth - 1) + ", " + gen(depth - 1) + ")";
            return "max(" + gen(depth - 1) + ", " + gen(depth - 1) + ")";
        }
    };

    int ok = 0, raised = 0;
    for (int trial = 0; trial < 400; ++trial) {
        Gen g{static_cast<std::uint64_t>(trial + 1)};
        const std::string text = g.gen(4);
        auto e = expr::parse(text, 2, 0);  // generator emits only valid syntax
        std::vector<double> x{g.u() * 6 - 3, g.u() * 6 - 3};
        try {
            volatile double v = expr::eval(e, g.u() * 2, x, {});
            (void)v;
            ++ok;
        } catch (const ExprError&) {
            ++raised;
        }
    }
    // Both branches must actually be exercised.
    CHECK(ok > 50);
    CHECK(raised > 10);
}

}  // TEST_SUITE
