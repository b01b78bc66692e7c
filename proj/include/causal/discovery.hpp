#ifndef CAUSAL_DISCOVERY_HPP
#define CAUSAL_DISCOVERY_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "causal/ci_tests.hpp"
#include "causal/dataset.hpp"
#include "causal/graph.hpp"
#include "causal/scm.hpp"

namespace causal {

struct DiscoveryConstraints {
    std::set<std::pair<std::string, std::string>> forbidden; // ordered: never orient first -> second
    std::set<std::pair<std::string, std::string>> absent;    // unordered, stored sorted
    std::map<std::string, int> tiers;                        // edges never point to a lower tier

    bool direction_allowed(const std::string& from, const std::string& to) const;
    bool adjacency_allowed(const std::string& a, const std::string& b) const;
};

DiscoveryConstraints parse_constraints(const std::string& text);
DiscoveryConstraints load_constraints(const std::string& path);

using CiTestFn =
    std::function<CITestResult(const std::string&, const std::string&, const std::vector<std::string>&)>;

struct SkeletonResult {
    std::vector<std::string> nodes;
    std::set<std::pair<int, int>> edges; // undirected, indices with first < second
    // recorded only for pairs removed by a test, not by constraints
    std::map<std::pair<int, int>, std::vector<int>> sepsets;

    bool adjacent(int a, int b) const { return edges.count({std::min(a, b), std::max(a, b)}) > 0; }
};

SkeletonResult pc_skeleton(const std::vector<std::string>& vars, const CiTestFn& test, double alpha,
                           const DiscoveryConstraints& constraints, int max_cond_size);

struct Cpdag {
    std::vector<std::string> nodes;
    std::set<std::pair<int, int>> directed;
    std::set<std::pair<int, int>> undirected; // first < second
    std::vector<std::string> conflicts;       // human-readable flags

    bool has_directed(int a, int b) const { return directed.count({a, b}) > 0; }
    bool has_undirected(int a, int b) const { return undirected.count({std::min(a, b), std::max(a, b)}) > 0; }
    bool adjacent(int a, int b) const { return has_undirected(a, b) || has_directed(a, b) || has_directed(b, a); }
};

Cpdag pc_orient(const SkeletonResult& skeleton, const DiscoveryConstraints& constraints);

struct PcOptions {
    double alpha = 0.01;
    int max_cond_size = 3;
    DiscoveryConstraints constraints;
};

Cpdag pc(const std::vector<std::string>& vars, const CiTestFn& test, const PcOptions& opt);

// maps a CI test name onto a dataset-bound callable
CiTestFn make_ci_test(const std::string& name, const Dataset& ds, const KnnCmiOptions& knn_opt = {});

struct ConfidenceMatrix {
    std::vector<std::string> names;
    Eigen::MatrixXd m; // m(i, j) = confidence in edge i -> j
};

struct BootstrapOptions {
    std::string test = "fisher_z";
    double alpha = 0.01;
    int runs = 50;
    std::uint64_t seed = 0;
    int max_cond_size = 3;
    DiscoveryConstraints constraints;
    KnnCmiOptions knn;
};

ConfidenceMatrix bootstrap_confidences(const Dataset& ds, const BootstrapOptions& opt);

// strict threshold; ties are excluded
CausalGraph threshold_graph(const ConfidenceMatrix& conf, double threshold);

// structural Hamming distance over directed graphs, reversal costs 1
int shd(const CausalGraph& g1, const CausalGraph& g2);

// undirected CPDAG edges are scored with their best-case orientation
int shd_cpdag_best(const Cpdag& cpdag, const CausalGraph& dag);

struct BenchmarkRow {
    std::string test;
    Eigen::Index n;
    int rep;
    int shd;
    double runtime_s;
};

struct BenchmarkOptions {
    std::vector<Eigen::Index> sample_sizes;
    int reps = 3;
    std::vector<std::string> tests;
    double alpha = 0.01;
    std::uint64_t seed = 0;
    int max_cond_size = 3;
    KnnCmiOptions knn;
};

std::vector<BenchmarkRow> benchmark_discovery(const ScmSpec& scm, const BenchmarkOptions& opt);

} // namespace causal

#endif // CAUSAL_DISCOVERY_HPP
