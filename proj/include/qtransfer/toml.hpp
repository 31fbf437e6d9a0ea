// Copyright 2026 The qtransfer Authors
//
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

#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace qtransfer::toml {

// Minimal TOML reader covering the documented config schema: [sections],
// bare keys, strings, integers, floats, booleans and flat arrays thereof,
// plus # comments.

struct Value;
using Array = std::vector<Value>;

struct Value {
    std::variant<bool, std::int64_t, double, std::string, Array> v;

    bool is_array() const { return std::holds_alternative<Array>(v); }
    bool is_string() const { return std::holds_alternative<std::string>(v); }

    double as_double() const {
        if (std::holds_alternative<double>(v)) return std::get<double>(v);
        if (std::holds_alternative<std::int64_t>(v))
            return static_cast<double>(std::get<std::int64_t>(v));
        throw std::runtime_error("toml: expected a number");
    }
    std::int64_t as_int() const {
        if (std::holds_alternative<std::int64_t>(v)) return std::get<std::int64_t>(v);
        throw std::runtime_error("toml: expected an integer");
    }
    bool as_bool() const {
        if (std::holds_alternative<bool>(v)) return std::get<bool>(v);
        throw std::runtime_error("toml: expected a boolean");
    }
    const std::string& as_string() const {
        if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
        throw std::runtime_error("toml: expected a string");
    }
    const Array& as_array() const {
        if (std::holds_alternative<Array>(v)) return std::get<Array>(v);
        throw std::runtime_error("toml: expected an array");
    }
};

class Document {
  public:
    using Section = std::map<std::string, Value>;

    bool has(const std::string& section, const std::string& key) const {
        const auto s = sections_.find(section);
        return s != sections_.end() && s->second.count(key) > 0;
    }

    const Value& at(const std::string& section, const std::string& key) const {
        const auto s = sections_.find(section);
        if (s == sections_.end() || !s->second.count(key))
            throw std::runtime_error("toml: missing key [" + section + "] " + key);
        return s->second.at(key);
    }

    std::int64_t get_int(const std::string& s, const std::string& k, std::int64_t dflt) const {
        return has(s, k) ? at(s, k).as_int() : dflt;
    }
    double get_double(const std::string& s, const std::string& k, double dflt) const {
        return has(s, k) ? at(s, k).as_double() : dflt;
    }
    bool get_bool(const std::string& s, const std::string& k, bool dflt) const {
        return has(s, k) ? at(s, k).as_bool() : dflt;
    }
    std::string get_string(const std::string& s, const std::string& k,
                           const std::string& dflt) const {
        return has(s, k) ? at(s, k).as_string() : dflt;
    }
    std::vector<int> get_int_array(const std::string& s, const std::string& k,
                                   std::vector<int> dflt) const {
        if (!has(s, k)) return dflt;
        std::vector<int> out;
        for (const Value& v : at(s, k).as_array()) out.push_back(static_cast<int>(v.as_int()));
        return out;
    }
    std::vector<std::string> get_string_array(const std::string& s, const std::string& k,
                                              std::vector<std::string> dflt) const {
        if (!has(s, k)) return dflt;
        std::vector<std::string> out;
        for (const Value& v : at(s, k).as_array()) out.push_back(v.as_string());
        return out;
    }

    Section& section(const std::string& name) { return sections_[name]; }

  private:
    std::map<std::string, Section> sections_;
};

namespace detail {

inline void skip_ws(const std::string& s, std::size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

inline Value parse_scalar(const std::string& s, std::size_t& i, int line);

inline Value parse_value(const std::string& s, std::size_t& i, int line) {
    skip_ws(s, i);
    if (i >= s.size()) throw std::runtime_error("toml(line " + std::to_string(line) + "): value expected");
    if (s[i] == '[') {
        ++i;
        Array arr;
        skip_ws(s, i);
        if (i < s.size() && s[i] == ']') {
            ++i;
            return Value{arr};
        }
        while (true) {
            arr.push_back(parse_value(s, i, line));
            skip_ws(s, i);
            if (i < s.size() && s[i] == ',') {
                ++i;
                skip_ws(s, i);
                if (i < s.size() && s[i] == ']') {  // trailing comma
                    ++i;
                    break;
                }
                continue;
            }
            if (i < s.size() && s[i] == ']') {
                ++i;
                break;
            }
            throw std::runtime_error("toml(line " + std::to_string(line) + "): malformed array");
        }
        return Value{arr};
    }
    return parse_scalar(s, i, line);
}

inline Value parse_scalar(const std::string& s, std::size_t& i, int line) {
    if (s[i] == '"') {
        std::string out;
        ++i;
        while (i < s.size() && s[i] != '"') {
            if (s[i] == '\\' && i + 1 < s.size()) {
                ++i;
                switch (s[i]) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default:
                        throw std::runtime_error("toml(line " + std::to_string(line) +
                                                 "): bad escape");
                }
                ++i;
            } else {
                out += s[i++];
            }
        }
        if (i >= s.size())
            throw std::runtime_error("toml(line " + std::to_string(line) + "): unterminated string");
        ++i;
        return Value{out};
    }
    std::size_t start = i;
    while (i < s.size() && s[i] != ',' && s[i] != ']' && s[i] != '#' && s[i] != ' ' &&
           s[i] != '\t')
        ++i;
    const std::string tok = s.substr(start, i - start);
    if (tok == "true") return Value{true};
    if (tok == "false") return Value{false};
    if (tok.empty())
        throw std::runtime_error("toml(line " + std::to_string(line) + "): empty value");
    const bool floaty = tok.find_first_of(".eE") != std::string::npos &&
                        tok.find("0x") == std::string::npos;
    try {
        if (floaty) return Value{std::stod(tok)};
        return Value{static_cast<std::int64_t>(std::stoll(tok))};
    } catch (const std::exception&) {
        try {
            return Value{std::stod(tok)};
        } catch (const std::exception&) {
            throw std::runtime_error("toml(line " + std::to_string(line) + "): bad value '" +
                                     tok + "'");
        }
    }
}

/// Strips a trailing comment, respecting quoted strings.
inline std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace detail

inline Document parse(const std::string& text) {
    Document doc;
    std::string current;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos
                                                                     : eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        line = detail::trim(detail::strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("toml(line " + std::to_string(line_no) +
                                         "): malformed section header");
            current = detail::trim(line.substr(1, line.size() - 2));
            doc.section(current);
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("toml(line " + std::to_string(line_no) +
                                     "): expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        if (key.empty())
            throw std::runtime_error("toml(line " + std::to_string(line_no) + "): empty key");
        std::size_t i = 0;
        const std::string rest = detail::trim(line.substr(eq + 1));
        const Value v = detail::parse_value(rest, i, line_no);
        detail::skip_ws(rest, i);
        if (i != rest.size())
            throw std::runtime_error("toml(line " + std::to_string(line_no) +
                                     "): trailing characters after value");
        doc.section(current)[key] = v;
    }
    return doc;
}

}  // namespace qtransfer::toml
