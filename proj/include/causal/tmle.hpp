#ifndef CAUSAL_TMLE_HPP
#define CAUSAL_TMLE_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causal/dataset.hpp"
#include "causal/identification.hpp"
#include "causal/super_learner.hpp"

namespace causal {

std::vector<double> plug_in_ate(const FittedSuperLearner& q, const Dataset& ds, const EstimandSpec& spec);

struct PropensityFit {
    Eigen::MatrixXd g; // N x levels, clipped to [0.025, 0.975] and row-renormalized
    int levels = 0;
    double raw_min = 0.0;
    double raw_max = 0.0;
    long clipped = 0;
    Eigen::VectorXd weights; // empty when the confounder set is empty
};

PropensityFit fit_propensity(const Dataset& ds, const std::string& treatment,
                             const std::vector<std::string>& confounders, SuperLearnerSpec sl);

struct CleverCovariates {
    Eigen::VectorXd h;     // observed-treatment covariate
    Eigen::VectorXd h_t;   // counterfactual T = t: 1/G(t)
    Eigen::VectorXd h_ref; // counterfactual T = t': -1/G(t')
};

CleverCovariates clever_covariates(const Eigen::VectorXd& t_values, const Eigen::MatrixXd& g,
                                   double level_t, double level_ref);

struct FluctuationFit {
    double epsilon = 0.0;
    bool converged = true;
};

// single-parameter logistic fluctuation with logit(q0) as a fixed offset
FluctuationFit tmle_fluctuate(const Eigen::VectorXd& y, const Eigen::VectorXd& q0,
                              const Eigen::VectorXd& h);

struct ContrastResult {
    double t = 0.0;
    double t_ref = 0.0;
    double psi_naive = 0.0;   // group-mean difference, analysis scale
    double psi_initial = 0.0; // plug-in before targeting
    double psi_targeted = 0.0;
    double epsilon = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double p_value = 1.0;
    double if_mean = 0.0;
    bool fluct_converged = true;
    bool rescaled = false; // original-scale fields meaningful when set
    double psi_original = 0.0;
    double ci_lo_original = 0.0;
    double ci_hi_original = 0.0;
};

struct TargetedResult {
    EstimandSpec estimand;
    std::vector<ContrastResult> contrasts;
    double propensity_raw_min = 0.0;
    double propensity_raw_max = 0.0;
    long propensity_clipped = 0;
    bool outcome_rescaled = false;
    RescaleBounds outcome_bounds{0.0, 1.0};
    std::string censor_column; // empty when no censoring indicator was used
    std::vector<std::string> notes;
    std::vector<std::string> learner_names;
    Eigen::VectorXd outcome_weights;
    Eigen::VectorXd propensity_weights;
};

// full targeting pass: outcome Super Learner, propensities, per-contrast
// fluctuation, influence-function inference. A binary column named
// Q_<outcome> (from make_censoring) is picked up automatically and set to 1
// in counterfactual predictions.
TargetedResult tmle_estimate(const Dataset& ds, const EstimandSpec& spec, const SuperLearnerSpec& sl);

} // namespace causal

#endif // CAUSAL_TMLE_HPP
