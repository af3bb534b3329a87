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

// Sectioned key-value config files.
//
//   [section]
//   key = value          # full-line comments start with '#' or ';'
//   expr = "1 - x1^2"    (one pair of surrounding quotes is stripped)
//
// The reader tracks which keys a loader consumed; finish() turns every
// untouched key or section into a hard error, so typos never silently
// fall back to defaults.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace exitctl::ini {

struct Entry {
    std::string key;
    std::string value;
    int line = 0;
};

struct Section {
    std::string name;
    int line = 0;
    std::vector<Entry> entries;
};

struct File {
    std::string origin;  // path, used in diagnostics
    std::vector<Section> sections;

    const Section* find(const std::string& name) const;
};

/// Throws ConfigError ("origin:line: message") on malformed lines,
/// duplicate keys within a section, or duplicate section names.
File parse(const std::string& text, const std::string& origin);

/// Convenience: read + parse. Throws ConfigError if unreadable.
File load(const std::string& path);

class Reader {
  public:
    explicit Reader(const File& file);

    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key);
    std::string get_string_or(const std::string& section, const std::string& key,
                              const std::string& fallback);
    double get_double(const std::string& section, const std::string& key);
    double get_double_or(const std::string& section, const std::string& key,
                         double fallback);
    long long get_int(const std::string& section, const std::string& key);
    long long get_int_or(const std::string& section, const std::string& key,
                         long long fallback);
    std::uint64_t get_uint64(const std::string& section, const std::string& key);
    bool get_bool_or(const std::string& section, const std::string& key, bool fallback);
    /// Whitespace- or comma-separated list of doubles.
    std::vector<double> get_vector(const std::string& section, const std::string& key);

    /// Marks a section as known even if no key was read from it.
    void touch_section(const std::string& section);

    /// Keys of `section` that start with `prefix`, in file order (consumes none).
    std::vector<std::string> keys_with_prefix(const std::string& section,
                                              const std::string& prefix) const;

    /// Throws ConfigError listing every section or key never consumed.
    void finish() const;

    const std::string& origin() const { return file_.origin; }

  private:
    const Entry* lookup(const std::string& section, const std::string& key,
                        bool required, bool consume);

    const File& file_;
    std::vector<std::vector<bool>> consumed_;
    std::vector<bool> section_touched_;
};

}  // namespace exitctl::ini
