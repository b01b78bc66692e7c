#ifndef CAUSAL_CI_TESTS_HPP
#define CAUSAL_CI_TESTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "causal/dataset.hpp"

namespace causal {

struct CITestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    Eigen::Index n_effective = 0;
    std::string test_name;
    int cond_size = 0;
    std::string note; // degenerate-input flags, e.g. skipped strata
};

// partial-correlation z test via residualization on [1, Z]
CITestResult fisher_z(const Dataset& ds, const std::string& a, const std::string& b,
                      const std::vector<std::string>& z);

// stratified chi-squared; strata with a zero row or column margin are
// skipped and the degrees of freedom adjusted
CITestResult chi2_ci(const Dataset& ds, const std::string& a, const std::string& b,
                     const std::vector<std::string>& z);

struct KnnCmiOptions {
    int k = 5;
    int k_perm = 5;
    int n_perm = 200;
    std::uint64_t seed = 0;
};

// KSG-style conditional mutual information with a local-permutation null
CITestResult knn_cmi(const Dataset& ds, const std::string& a, const std::string& b,
                     const std::vector<std::string>& z, const KnnCmiOptions& opt = {});

struct DirectionResult {
    enum Verdict { AToB, BToA, Inconclusive } verdict = Inconclusive;
    double score_ab; // residual dependence when regressing B on A
    double score_ba;
};

// residual-independence asymmetry with a k-NN smoother, k = ceil(sqrt(N))
DirectionResult direction_score(const Dataset& ds, const std::string& a, const std::string& b,
                                double tau = 0.02);

} // namespace causal

#endif // CAUSAL_CI_TESTS_HPP
