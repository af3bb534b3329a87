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

#include <string>

#include "doctest.h"
#include "exitctl/errors.hpp"
#include "exitctl/ini.hpp"

using namespace exitctl;

TEST_SUITE("ini") {

TEST_CASE("parses sections, comments, quotes and vectors") {
    const std::string text =
        "# leading comment\n"
        "[alpha]\n"
        "a = 1.5\n"
        "name = \"1 - x1^2\"\n"
        "flag = true\n"
        "; another comment\n"
        "[beta]\n"
        "list = 1, 2.5, -3\n"
        "count = 42\n"
        "big = 18446744073709551615\n";
    auto f = ini::parse(text, "mem");
    REQUIRE(f.sections.size() == 2);
    CHECK(f.find("alpha") != nullptr);
    CHECK(f.find("gamma") == nullptr);

    ini::Reader r(f);
    CHECK(r.get_double("alpha", "a") == 1.5);
    CHECK(r.get_string("alpha", "name") == "1 - x1^2");  // quotes stripped
    CHECK(r.get_bool_or("alpha", "flag", false) == true);
    CHECK(r.get_bool_or("alpha", "missing", true) == true);
    auto v = r.get_vector("beta", "list");
    REQUIRE(v.size() == 3);
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 2.5);
    CHECK(v[2] == -3.0);
    CHECK(r.get_int("beta", "count") == 42);
    CHECK(r.get_uint64("beta", "big") == 18446744073709551615ull);
    CHECK_NOTHROW(r.finish());
}

TEST_CASE("malformed input raises located errors") {
    CHECK_THROWS_AS(ini::parse("[a]\nkey_without_value\n", "m"), ConfigError);
    CHECK_THROWS_AS(ini::parse("key = 1\n", "m"), ConfigError);  // entry before section
    CHECK_THROWS_AS(ini::parse("[a]\nk = 1\nk = 2\n", "m"), ConfigError);
    CHECK_THROWS_AS(ini::parse("[a]\n[a]\n", "m"), ConfigError);
    CHECK_THROWS_AS(ini::parse("[unclosed\n", "m"), ConfigError);
    try {
        ini::parse("[a]\nx = 1\nbroken\n", "cfg.ini");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        // Message carries origin and 1-based line number.
        CHECK(std::string(e.what()).find("cfg.ini:3") != std::string::npos);
    }
}

TEST_CASE("typed getters validate their input") {
    auto f = ini::parse("[s]\na = notanumber\nb = 1.5\nc = -4\n", "m");
    ini::Reader r(f);
    CHECK_THROWS_AS(r.get_double("s", "a"), ConfigError);
    CHECK_THROWS_AS(r.get_int("s", "b"), ConfigError);
    CHECK_THROWS_AS(r.get_uint64("s", "c"), ConfigError);
    CHECK_THROWS_AS(r.get_double("s", "nope"), ConfigError);
    CHECK_THROWS_AS(r.get_double("nosection", "a"), ConfigError);
    CHECK(r.get_double_or("s", "nope", 7.0) == 7.0);
    CHECK(r.get_int_or("s", "nope", -3) == -3);
    CHECK(r.get_string_or("s", "nope", "dflt") == "dflt");
}

TEST_CASE("finish reports unconsumed keys and sections") {
    auto f = ini::parse("[s]\na = 1\nb = 2\n[extra]\nc = 3\n", "m");
    ini::Reader r(f);
    CHECK(r.get_double("s", "a") == 1.0);
    try {
        r.finish();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("b") != std::string::npos);
        CHECK(msg.find("extra") != std::string::npos);
    }

    // Consuming everything, or touching a section, silences finish().
    ini::Reader r2(f);
    r2.get_double("s", "a");
    r2.get_double("s", "b");
    r2.get_double("extra", "c");
    CHECK_NOTHROW(r2.finish());
}

TEST_CASE("keys_with_prefix preserves file order and consumes nothing") {
    auto f = ini::parse("[cs]\nlevel_1_lo = -1\nlevel_2_lo = -1\nlevel_1_hi = 1\nm = 1\n", "m");
    ini::Reader r(f);
    auto keys = r.keys_with_prefix("cs", "level_");
    REQUIRE(keys.size() == 3);
    CHECK(keys[0] == "level_1_lo");
    CHECK(keys[1] == "level_2_lo");
    CHECK(keys[2] == "level_1_hi");
    CHECK(r.keys_with_prefix("cs", "zzz").empty());
    CHECK(r.keys_with_prefix("none", "a").empty());
}

}  // TEST_SUITE
