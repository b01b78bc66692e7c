#ifndef CAUSAL_TEST_SUPPORT_HPP
#define CAUSAL_TEST_SUPPORT_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "causal/graph.hpp"
#include "causal/scm.hpp"
#include "causal/stats.hpp"

namespace support {

// ---- random structures ----

causal::CausalGraph random_dag(causal::Rng& rng, int n_nodes, double edge_prob);
causal::CausalGraph random_admg(causal::Rng& rng, int n_nodes, double edge_prob, double bi_prob);

// Linear-Gaussian SEM on a DAG: x_j = sum_i b(i,j) x_i + eps_j.
struct LinGauss {
    causal::CausalGraph g;
    std::vector<std::string> names; // node order used by b
    Eigen::MatrixXd b;
    Eigen::VectorXd noise_var;

    Eigen::MatrixXd sigma() const;
    causal::ScmSpec to_scm() const;
};

LinGauss random_lingauss(causal::Rng& rng, int n_nodes, double edge_prob);

// ---- analytic oracles ----

double oracle_partial_corr(const Eigen::MatrixXd& sigma, int x, int y, const std::vector<int>& z);

// Path-enumeration m-separation over the canonical hidden-fork DAG.
bool oracle_d_separated(const causal::CausalGraph& g, const std::vector<std::string>& xs,
                        const std::vector<std::string>& ys, const std::vector<std::string>& zs);

bool oracle_backdoor_valid(const causal::CausalGraph& g, const std::string& t, const std::string& y,
                           const std::vector<std::string>& z);

// All minimum-size valid adjustment sets, searched over every subset of
// non-descendants of t (exponential; keep graphs small).
std::vector<std::vector<std::string>> oracle_min_backdoor_sets(const causal::CausalGraph& g,
                                                               const std::string& t,
                                                               const std::string& y);

// Golden-section maximizer of the Bernoulli log-likelihood of the logistic
// fluctuation submodel.
double oracle_fluctuation_eps(const Eigen::VectorXd& y, const Eigen::VectorXd& q0,
                              const Eigen::VectorXd& h);

// ---- process helpers ----

struct CliResult {
    int exit_code;
    std::string output; // stdout+stderr interleaved
};

std::string cli_path(); // $CAUSAL_CLI, throws when unset
CliResult run_cli(const std::vector<std::string>& args);

std::string slurp(const std::filesystem::path& path);
void spit(const std::filesystem::path& path, const std::string& text);

struct TempDir {
    std::filesystem::path path;
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    std::filesystem::path file(const std::string& name) const { return path / name; }
};

} // namespace support

#endif // CAUSAL_TEST_SUPPORT_HPP
