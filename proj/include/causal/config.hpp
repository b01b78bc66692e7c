#ifndef CAUSAL_CONFIG_HPP
#define CAUSAL_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "causal/super_learner.hpp"

namespace causal {

// flat key = value file with dotted section prefixes
struct PipelineConfig {
    std::string data;
    std::string schema;
    std::string graph;
    std::string constraints;
    std::string scm;
    std::string out = "out";
    std::uint64_t seed = 1;

    std::string discovery_test = "fisher_z";
    double discovery_alpha = 0.01;
    int discovery_runs = 50;
    double discovery_threshold = 0.5;
    int discovery_max_cond_size = 3;
    int discovery_knn_k = 5;
    int discovery_knn_permutations = 200;

    std::string treatment;
    std::string outcome;
    std::vector<std::pair<double, double>> contrasts;
    std::optional<std::vector<std::string>> adjustment; // nullopt = derive from graph
    std::optional<std::vector<std::string>> precision;  // nullopt = derive from graph

    std::vector<LearnerSpec> learners;
    int folds = 10;

    std::vector<double> multipliers{0.0, 0.5, 1.0, 1.5, 2.0, 2.5};
    bool sensitivity_drop_all = false;

    std::string censor_graph_parents = "same"; // same | none

    std::vector<long> benchmark_sizes{100, 500, 2000};
    int benchmark_reps = 3;
    std::vector<std::string> benchmark_tests{"fisher_z"};

    std::string raw; // original text, hashed into run.log
};

PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::string& path);

std::string hash_text(const std::string& text); // 64-bit FNV-1a, hex

} // namespace causal

#endif // CAUSAL_CONFIG_HPP
