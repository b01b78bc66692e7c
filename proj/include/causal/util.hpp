#ifndef CAUSAL_UTIL_HPP
#define CAUSAL_UTIL_HPP

#include <string>
#include <vector>

namespace causal {

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);
// strips a trailing '#' comment, then trims
std::string strip_comment(const std::string& line);
// shortest decimal string that parses back to exactly the same double
std::string format_double(double v);
bool valid_node_name(const std::string& s);
double parse_double(const std::string& s, const std::string& context);
long parse_long(const std::string& s, const std::string& context);

} // namespace causal

#endif // CAUSAL_UTIL_HPP
