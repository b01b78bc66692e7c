#include "causal/util.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace causal {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::string strip_comment(const std::string& line) {
    std::size_t pos = line.find('#');
    return trim(pos == std::string::npos ? line : line.substr(0, pos));
}

std::string format_double(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool valid_node_name(const std::string& s) {
    if (s.empty()) return false;
    unsigned char c0 = static_cast<unsigned char>(s[0]);
    if (!(std::isalpha(c0) || s[0] == '_')) return false;
    for (char ch : s.substr(1)) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (!(std::isalnum(c) || ch == '_' || ch == '.' || ch == '@' || ch == '-')) return false;
    }
    return true;
}

double parse_double(const std::string& s, const std::string& context) {
    const std::string t = trim(s);
    if (t.empty()) throw std::runtime_error(context + ": empty number");
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) throw std::runtime_error(context + ": bad number '" + t + "'");
    return v;
}

long parse_long(const std::string& s, const std::string& context) {
    const std::string t = trim(s);
    if (t.empty()) throw std::runtime_error(context + ": empty integer");
    char* end = nullptr;
    long v = std::strtol(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size()) throw std::runtime_error(context + ": bad integer '" + t + "'");
    return v;
}

} // namespace causal
