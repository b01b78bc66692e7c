#include "causal/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "causal/util.hpp"

namespace causal {

namespace {

std::vector<std::string> split_top_level(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == sep && depth == 0) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> name_list(const std::string& value) {
    std::vector<std::string> out;
    for (const auto& part : split(value, ',')) {
        std::string name = trim(part);
        if (!name.empty()) out.push_back(name);
    }
    return out;
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw std::invalid_argument("config key '" + key + "' expects true or false, got '" + value + "'");
}

std::pair<double, double> parse_contrast(const std::string& token) {
    auto parts = split(token, '-');
    if (parts.size() != 2)
        throw std::invalid_argument("contrast '" + token + "' must look like t-t_ref, e.g. 1-0");
    return {parse_double(trim(parts[0]), "contrast level"), parse_double(trim(parts[1]), "contrast level")};
}

} // namespace

std::string hash_text(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig cfg;
    cfg.raw = text;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = strip_comment(line);
        if (s.empty()) continue;
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value, got '" + s + "'");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        auto ctx = [&](const char* what) { return std::string(what) + " (config key '" + key + "')"; };

        if (key == "data") {
            cfg.data = value;
        } else if (key == "schema") {
            cfg.schema = value;
        } else if (key == "graph") {
            cfg.graph = value;
        } else if (key == "constraints") {
            cfg.constraints = value;
        } else if (key == "scm") {
            cfg.scm = value;
        } else if (key == "out") {
            cfg.out = value;
        } else if (key == "seed") {
            long v = parse_long(value, ctx("seed"));
            if (v < 0) throw std::invalid_argument("config key 'seed' must be nonnegative");
            cfg.seed = static_cast<std::uint64_t>(v);
        } else if (key == "discovery.test") {
            if (value != "fisher_z" && value != "chi2" && value != "knn_cmi")
                throw std::invalid_argument("config key 'discovery.test' must be fisher_z, chi2 or knn_cmi");
            cfg.discovery_test = value;
        } else if (key == "discovery.alpha") {
            cfg.discovery_alpha = parse_double(value, ctx("alpha"));
            if (cfg.discovery_alpha <= 0.0 || cfg.discovery_alpha >= 1.0)
                throw std::invalid_argument("config key 'discovery.alpha' must lie in (0, 1)");
        } else if (key == "discovery.runs") {
            cfg.discovery_runs = static_cast<int>(parse_long(value, ctx("runs")));
            if (cfg.discovery_runs < 1)
                throw std::invalid_argument("config key 'discovery.runs' must be positive");
        } else if (key == "discovery.threshold") {
            cfg.discovery_threshold = parse_double(value, ctx("threshold"));
            if (cfg.discovery_threshold < 0.0 || cfg.discovery_threshold > 1.0)
                throw std::invalid_argument("config key 'discovery.threshold' must lie in [0, 1]");
        } else if (key == "discovery.max_cond_size") {
            cfg.discovery_max_cond_size = static_cast<int>(parse_long(value, ctx("max_cond_size")));
            if (cfg.discovery_max_cond_size < 0)
                throw std::invalid_argument("config key 'discovery.max_cond_size' must be nonnegative");
        } else if (key == "discovery.knn_k") {
            cfg.discovery_knn_k = static_cast<int>(parse_long(value, ctx("knn_k")));
            if (cfg.discovery_knn_k < 3)
                throw std::invalid_argument("config key 'discovery.knn_k' must be at least 3");
        } else if (key == "discovery.knn_permutations") {
            cfg.discovery_knn_permutations = static_cast<int>(parse_long(value, ctx("knn_permutations")));
            if (cfg.discovery_knn_permutations < 1)
                throw std::invalid_argument("config key 'discovery.knn_permutations' must be positive");
        } else if (key == "estimand.treatment") {
            cfg.treatment = value;
        } else if (key == "estimand.outcome") {
            cfg.outcome = value;
        } else if (key == "estimand.contrasts") {
            cfg.contrasts.clear();
            for (const auto& tok : name_list(value)) cfg.contrasts.push_back(parse_contrast(tok));
        } else if (key == "estimand.adjustment") {
            if (value == "auto")
                cfg.adjustment = std::nullopt;
            else
                cfg.adjustment = name_list(value);
        } else if (key == "estimand.precision") {
            if (value == "auto")
                cfg.precision = std::nullopt;
            else
                cfg.precision = name_list(value);
        } else if (key == "sl.learners") {
            cfg.learners.clear();
            for (const auto& tok : split_top_level(value, ',')) {
                std::string t = trim(tok);
                if (!t.empty()) cfg.learners.push_back(parse_learner(t));
            }
            if (cfg.learners.empty())
                throw std::invalid_argument("config key 'sl.learners' lists no learners");
        } else if (key == "sl.folds") {
            cfg.folds = static_cast<int>(parse_long(value, ctx("folds")));
            if (cfg.folds < 2) throw std::invalid_argument("config key 'sl.folds' must be at least 2");
        } else if (key == "sensitivity.multipliers") {
            cfg.multipliers.clear();
            for (const auto& tok : name_list(value))
                cfg.multipliers.push_back(parse_double(tok, ctx("multiplier")));
            if (cfg.multipliers.empty())
                throw std::invalid_argument("config key 'sensitivity.multipliers' lists no values");
        } else if (key == "sensitivity.drop_all") {
            cfg.sensitivity_drop_all = parse_bool(value, key);
        } else if (key == "censor.graph_parents") {
            if (value != "same" && value != "none")
                throw std::invalid_argument("config key 'censor.graph_parents' must be same or none");
            cfg.censor_graph_parents = value;
        } else if (key == "benchmark.sizes") {
            cfg.benchmark_sizes.clear();
            for (const auto& tok : name_list(value)) {
                long n = parse_long(tok, ctx("benchmark size"));
                if (n < 10) throw std::invalid_argument("config key 'benchmark.sizes' needs sizes >= 10");
                cfg.benchmark_sizes.push_back(n);
            }
        } else if (key == "benchmark.reps") {
            cfg.benchmark_reps = static_cast<int>(parse_long(value, ctx("reps")));
            if (cfg.benchmark_reps < 1)
                throw std::invalid_argument("config key 'benchmark.reps' must be positive");
        } else if (key == "benchmark.tests") {
            cfg.benchmark_tests = name_list(value);
            for (const auto& t : cfg.benchmark_tests)
                if (t != "fisher_z" && t != "chi2" && t != "knn_cmi")
                    throw std::invalid_argument("config key 'benchmark.tests' allows fisher_z, chi2, knn_cmi");
        } else {
            throw std::invalid_argument("unknown config key '" + key + "' on line " +
                                        std::to_string(lineno));
        }
    }
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

} // namespace causal
