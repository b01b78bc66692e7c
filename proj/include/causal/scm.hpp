#ifndef CAUSAL_SCM_HPP
#define CAUSAL_SCM_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "causal/dataset.hpp"
#include "causal/graph.hpp"

namespace causal {

enum class MechanismKind { Linear, Polynomial, Logistic, Threshold, Table, Constant };

struct PolyTerm {
    std::string parent;
    int power;
    double coef;
};

struct Mechanism {
    MechanismKind kind = MechanismKind::Linear;
    std::vector<std::pair<std::string, double>> coefficients; // linear / logistic / threshold
    double intercept = 0.0;
    std::vector<PolyTerm> terms;    // polynomial
    std::vector<double> cutpoints;  // threshold, strictly increasing
    std::map<std::vector<int>, std::vector<double>> table; // parent combo -> level probabilities
    double constant = 0.0;          // constant (intervened) nodes
};

struct NoiseSpec {
    enum Kind { Gaussian, Uniform, None } kind = None;
    double a = 0.0; // gaussian sd, or uniform lower bound
    double b = 0.0; // uniform upper bound
};

struct ScmNode {
    std::string name;
    std::vector<std::string> parents; // order fixes table combo order
    Mechanism mech;
    NoiseSpec noise;
    ColumnType forced_type; // set for Constant nodes to keep the original type
};

struct ScmSpec {
    std::vector<ScmNode> nodes;

    const ScmNode& node(const std::string& name) const;
    bool has_node(const std::string& name) const;
};

void validate_scm(const ScmSpec& scm);
ColumnType scm_column_type(const ScmNode& node);
CausalGraph scm_graph(const ScmSpec& scm);

// Draws N rows. Per-node exogenous streams are derived from (seed, node
// position), so interventions leave other nodes' draws untouched.
Dataset sample_scm(const ScmSpec& scm, Eigen::Index n, std::uint64_t seed);

ScmSpec intervene(const ScmSpec& scm, const std::map<std::string, double>& assignments);

struct TrueEffect {
    double effect;
    double mc_se;
};

// E[Y | do(T=t)] - E[Y | do(T=t_ref)] by Monte Carlo with common random numbers
TrueEffect true_effect(const ScmSpec& scm, const std::string& treatment, double t, double t_ref,
                       const std::string& outcome, Eigen::Index n_mc, std::uint64_t seed);

ScmSpec parse_scm(const std::string& text);
ScmSpec load_scm(const std::string& path);

} // namespace causal

#endif // CAUSAL_SCM_HPP
