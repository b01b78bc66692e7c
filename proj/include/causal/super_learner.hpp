#ifndef CAUSAL_SUPER_LEARNER_HPP
#define CAUSAL_SUPER_LEARNER_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causal/dataset.hpp"

namespace causal {

enum class SlTask { Regression, Propensity };

struct LearnerSpec {
    std::string name; // intercept_only | linear_ridge | logistic_ridge | knn | boosted_stumps
    double lambda = 1e-3;
    int k = 10;
    int rounds = 50;
    int depth = 2;
    double learning_rate = 0.1;
};

LearnerSpec parse_learner(const std::string& text); // e.g. "linear_ridge(0.01)", "knn(15)"

struct SuperLearnerSpec {
    std::vector<LearnerSpec> learners;
    int k_folds = 10;
    SlTask task = SlTask::Regression;
    std::uint64_t seed = 0;
};

class Learner {
  public:
    virtual ~Learner() = default;
    // rows of X to predictions: one column for regression, one per level for
    // propensity (rows on the simplex)
    virtual Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const = 0;
};

// numeric design matrix: discrete-but-ordered columns pass through, unordered
// categorical columns are one-hot expanded
struct FeatureCodec {
    std::vector<std::string> cols;
    std::vector<ColumnType> types;

    int width() const;
    Eigen::MatrixXd encode(const Dataset& ds) const;
    Eigen::MatrixXd encode_with(const Dataset& ds,
                                const std::vector<std::pair<std::string, double>>& overrides) const;
};

FeatureCodec make_codec(const Dataset& ds, const std::vector<std::string>& features);

struct FittedSuperLearner {
    SlTask task = SlTask::Regression;
    int levels = 1; // prediction columns
    std::string target;
    FeatureCodec codec;
    std::vector<LearnerSpec> specs;
    std::vector<std::shared_ptr<const Learner>> fits;
    Eigen::VectorXd weights;
    double cv_loss = 0.0; // meta-objective at the chosen weights

    Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd predict_ds(const Dataset& ds) const;
    Eigen::MatrixXd predict_with(const Dataset& ds,
                                 const std::vector<std::pair<std::string, double>>& overrides) const;
};

FittedSuperLearner sl_fit(const Dataset& ds, const std::string& target,
                          const std::vector<std::string>& features, const SuperLearnerSpec& spec);

} // namespace causal

#endif // CAUSAL_SUPER_LEARNER_HPP
