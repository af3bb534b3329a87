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

#include "exitctl/ini.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "exitctl/errors.hpp"

namespace exitctl::ini {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_';
        if (!ok) return false;
    }
    return true;
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
    std::ostringstream os;
    os << origin << ":" << line << ": " << msg;
    throw ConfigError(os.str());
}

}  // namespace

const Section* File::find(const std::string& name) const {
    for (const Section& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

File parse(const std::string& text, const std::string& origin) {
    File file;
    file.origin = origin;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(origin, lineno, "unterminated section header");
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (!valid_name(name)) fail(origin, lineno, "invalid section name '" + name + "'");
            if (file.find(name)) fail(origin, lineno, "duplicate section [" + name + "]");
            file.sections.push_back({name, lineno, {}});
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(origin, lineno, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!valid_name(key)) fail(origin, lineno, "invalid key '" + key + "'");
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (file.sections.empty()) fail(origin, lineno, "key '" + key + "' outside any section");
        Section& sec = file.sections.back();
        for (const Entry& e : sec.entries)
            if (e.key == key)
                fail(origin, lineno,
                     "duplicate key '" + key + "' in [" + sec.name + "] (first at line " +
                         std::to_string(e.line) + ")");
        sec.entries.push_back({key, value, lineno});
    }
    return file;
}

File load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

Reader::Reader(const File& file) : file_(file) {
    consumed_.resize(file.sections.size());
    section_touched_.resize(file.sections.size(), false);
    for (std::size_t i = 0; i < file.sections.size(); ++i)
        consumed_[i].resize(file.sections[i].entries.size(), false);
}

bool Reader::has_section(const std::string& section) const {
    return file_.find(section) != nullptr;
}

bool Reader::has(const std::string& section, const std::string& key) const {
    const Section* s = file_.find(section);
    if (!s) return false;
    for (const Entry& e : s->entries)
        if (e.key == key) return true;
    return false;
}

const Entry* Reader::lookup(const std::string& section, const std::string& key,
                            bool required, bool consume) {
    for (std::size_t i = 0; i < file_.sections.size(); ++i) {
        if (file_.sections[i].name != section) continue;
        if (consume) section_touched_[i] = true;
        const Section& s = file_.sections[i];
        for (std::size_t j = 0; j < s.entries.size(); ++j) {
            if (s.entries[j].key == key) {
                if (consume) consumed_[i][j] = true;
                return &s.entries[j];
            }
        }
        if (required)
            throw ConfigError(file_.origin + ": missing key '" + key + "' in [" + section + "]");
        return nullptr;
    }
    if (required)
        throw ConfigError(file_.origin + ": missing section [" + section + "]");
    return nullptr;
}

std::string Reader::get_string(const std::string& section, const std::string& key) {
    return lookup(section, key, true, true)->value;
}

std::string Reader::get_string_or(const std::string& section, const std::string& key,
                                  const std::string& fallback) {
    const Entry* e = lookup(section, key, false, true);
    return e ? e->value : fallback;
}

namespace {

double parse_double(const Entry& e, const std::string& origin) {
    double v = 0.0;
    const std::string s = trim(e.value);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(origin, e.line, "expected a number for '" + e.key + "', got '" + e.value + "'");
    return v;
}

long long parse_int(const Entry& e, const std::string& origin) {
    long long v = 0;
    const std::string s = trim(e.value);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(origin, e.line, "expected an integer for '" + e.key + "', got '" + e.value + "'");
    return v;
}

}  // namespace

double Reader::get_double(const std::string& section, const std::string& key) {
    return parse_double(*lookup(section, key, true, true), file_.origin);
}

double Reader::get_double_or(const std::string& section, const std::string& key,
                             double fallback) {
    const Entry* e = lookup(section, key, false, true);
    return e ? parse_double(*e, file_.origin) : fallback;
}

long long Reader::get_int(const std::string& section, const std::string& key) {
    return parse_int(*lookup(section, key, true, true), file_.origin);
}

long long Reader::get_int_or(const std::string& section, const std::string& key,
                             long long fallback) {
    const Entry* e = lookup(section, key, false, true);
    return e ? parse_int(*e, file_.origin) : fallback;
}

std::uint64_t Reader::get_uint64(const std::string& section, const std::string& key) {
    const Entry* e = lookup(section, key, true, true);
    std::uint64_t v = 0;
    const std::string s = trim(e->value);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(file_.origin, e->line, "expected an unsigned integer for '" + key + "'");
    return v;
}

bool Reader::get_bool_or(const std::string& section, const std::string& key, bool fallback) {
    const Entry* e = lookup(section, key, false, true);
    if (!e) return fallback;
    const std::string v = trim(e->value);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(file_.origin, e->line, "expected true/false for '" + key + "', got '" + v + "'");
}

std::vector<double> Reader::get_vector(const std::string& section, const std::string& key) {
    const Entry* e = lookup(section, key, true, true);
    std::vector<double> out;
    const std::string& s = e->value;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == ',')) ++i;
        if (i >= s.size()) break;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != ',') ++j;
        double v = 0.0;
        const auto res = std::from_chars(s.data() + i, s.data() + j, v);
        if (res.ec != std::errc() || res.ptr != s.data() + j)
            fail(file_.origin, e->line,
                 "expected numbers for '" + key + "', got '" + s.substr(i, j - i) + "'");
        out.push_back(v);
        i = j;
    }
    if (out.empty()) fail(file_.origin, e->line, "empty vector for '" + key + "'");
    return out;
}

void Reader::touch_section(const std::string& section) {
    for (std::size_t i = 0; i < file_.sections.size(); ++i)
        if (file_.sections[i].name == section) section_touched_[i] = true;
}

std::vector<std::string> Reader::keys_with_prefix(const std::string& section,
                                                  const std::string& prefix) const {
    std::vector<std::string> out;
    const Section* s = file_.find(section);
    if (!s) return out;
    for (const Entry& e : s->entries)
        if (e.key.rfind(prefix, 0) == 0) out.push_back(e.key);
    return out;
}

void Reader::finish() const {
    std::ostringstream problems;
    int count = 0;
    for (std::size_t i = 0; i < file_.sections.size(); ++i) {
        const Section& s = file_.sections[i];
        if (!section_touched_[i]) {
            problems << "\n  " << file_.origin << ":" << s.line << ": unknown section ["
                     << s.name << "]";
            ++count;
            continue;
        }
        for (std::size_t j = 0; j < s.entries.size(); ++j) {
            if (!consumed_[i][j]) {
                problems << "\n  " << file_.origin << ":" << s.entries[j].line
                         << ": unknown key '" << s.entries[j].key << "' in [" << s.name << "]";
                ++count;
            }
        }
    }
    if (count > 0)
        throw ConfigError("unrecognized config entries (" + std::to_string(count) + "):" +
                          problems.str());
}

}  // namespace exitctl::ini
