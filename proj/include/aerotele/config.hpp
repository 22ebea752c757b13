#pragma once

#include <cctype>
#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "aerotele/errors.hpp"
#include "aerotele/so3.hpp"

namespace aerotele::config {

/// One `key = value` line. Section names keep their inner text, so
/// `[body floor]` yields section "body floor".
struct Entry {
    std::string section;
    std::string key;
    std::string value;
    std::size_t line = 0;

    std::string field() const { return section.empty() ? key : section + "." + key; }
};

struct Document {
    std::vector<Entry> entries;
    std::vector<std::pair<std::string, std::size_t>> sections;  // in file order, with line

    const Entry* find(std::string_view section, std::string_view key) const {
        const Entry* hit = nullptr;
        for (const Entry& e : entries) {
            if (e.section == section && e.key == key) hit = &e;  // last one wins
        }
        return hit;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::string collapse_spaces(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = true;
            continue;
        }
        if (space && !out.empty()) out.push_back(' ');
        space = false;
        out.push_back(c);
    }
    return out;
}

}  // namespace detail

/// Parses the section/key=value format. `#` and `;` start comments.
inline Document parse(std::string_view text) {
    Document doc;
    std::string section;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

        if (const std::size_t c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(line_no, "", "unterminated section header");
            section = detail::collapse_spaces(line.substr(1, line.size() - 2));
            if (section.empty()) throw ParseError(line_no, "", "empty section name");
            doc.sections.emplace_back(section, line_no);
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(line_no, "", "expected key = value");
        Entry e;
        e.section = section;
        e.key = std::string(detail::trim(line.substr(0, eq)));
        e.value = std::string(detail::trim(line.substr(eq + 1)));
        e.line = line_no;
        if (e.key.empty()) throw ParseError(line_no, "", "empty key");
        if (e.value.empty()) throw ParseError(line_no, e.field(), "empty value");
        doc.entries.push_back(std::move(e));
    }
    return doc;
}

/// Applies `section.key=value` overrides. Overrides get line 0.
inline void apply_override(Document& doc, std::string_view assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ParseError(0, std::string(assignment), "override must be key=value");
    const std::string_view path = detail::trim(assignment.substr(0, eq));
    const std::size_t dot = path.rfind('.');
    if (dot == std::string_view::npos) throw ParseError(0, std::string(path), "override key must be section.key");
    Entry e;
    e.section = std::string(path.substr(0, dot));
    e.key = std::string(path.substr(dot + 1));
    e.value = std::string(detail::trim(assignment.substr(eq + 1)));
    if (e.value.empty()) throw ParseError(0, e.field(), "empty value");
    bool known_section = false;
    for (const auto& [name, line] : doc.sections) known_section = known_section || name == e.section;
    if (!known_section) doc.sections.emplace_back(e.section, 0);
    doc.entries.push_back(std::move(e));
}

inline double to_number(const Entry& e, std::string_view token) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw ParseError(e.line, e.field(), "not a number: '" + std::string(token) + "'");
    }
    return v;
}

/// Whitespace- or comma-separated numbers.
inline std::vector<double> to_numbers(const Entry& e) {
    std::vector<double> out;
    std::string_view s = e.value;
    while (!s.empty()) {
        const std::size_t start = s.find_first_not_of(" \t,");
        if (start == std::string_view::npos) break;
        s.remove_prefix(start);
        const std::size_t end = s.find_first_of(" \t,");
        out.push_back(to_number(e, s.substr(0, end)));
        s = end == std::string_view::npos ? std::string_view{} : s.substr(end);
    }
    return out;
}

inline double to_scalar(const Entry& e) {
    const auto v = to_numbers(e);
    if (v.size() != 1) throw ParseError(e.line, e.field(), "expected one number");
    return v.front();
}

inline Vec3 to_vec3(const Entry& e) {
    const auto v = to_numbers(e);
    if (v.size() != 3) throw ParseError(e.line, e.field(), "expected three numbers");
    return {v[0], v[1], v[2]};
}

template <int N>
Eigen::Matrix<double, N, 1> to_vector(const Entry& e) {
    const auto v = to_numbers(e);
    if (v.size() != static_cast<std::size_t>(N)) {
        throw ParseError(e.line, e.field(), "expected " + std::to_string(N) + " numbers");
    }
    return Eigen::Map<const Eigen::Matrix<double, N, 1>>(v.data());
}

inline bool to_bool(const Entry& e) {
    if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
    if (e.value == "false" || e.value == "no" || e.value == "0") return false;
    throw ParseError(e.line, e.field(), "expected true or false");
}

inline long long to_integer(const Entry& e) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc{} || ptr != e.value.data() + e.value.size()) {
        throw ParseError(e.line, e.field(), "not an integer");
    }
    return v;
}

}  // namespace aerotele::config
