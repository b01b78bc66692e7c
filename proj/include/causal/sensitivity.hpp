#ifndef CAUSAL_SENSITIVITY_HPP
#define CAUSAL_SENSITIVITY_HPP

#include <optional>
#include <string>
#include <vector>

#include "causal/dataset.hpp"
#include "causal/tmle.hpp"

namespace causal {

struct SensitivityOptions {
    std::vector<double> multipliers{0.0, 0.5, 1.0, 1.5, 2.0, 2.5};
    bool drop_all = false; // also drop precision variables in the unadjusted run
};

struct SensitivityRow {
    double multiplier;
    double lower; // psi - m * delta_unit
    double upper; // psi + m * delta_unit
    double ci_lo; // lower - 1.96 * se
    double ci_hi; // upper + 1.96 * se
};

struct SensitivityCurve {
    double t = 0.0;
    double t_ref = 0.0;
    double psi = 0.0; // adjusted targeted estimate
    double se = 0.0;
    double psi_unadjusted = 0.0;
    double delta_unit = 0.0;
    std::vector<SensitivityRow> rows;
    // smallest m whose shifted CI includes 0: 0 when the baseline CI already
    // does, absent when no amount of shift can reach 0 (delta_unit = 0)
    std::optional<double> crossing;
};

std::vector<SensitivityCurve> sensitivity_analysis(const Dataset& ds, const EstimandSpec& spec,
                                                   const SuperLearnerSpec& sl,
                                                   const SensitivityOptions& opt = {});

// builds curves from two finished runs (adjusted and unadjusted)
std::vector<SensitivityCurve> sensitivity_from_results(const TargetedResult& adjusted,
                                                       const TargetedResult& unadjusted,
                                                       const std::vector<double>& multipliers);

} // namespace causal

#endif // CAUSAL_SENSITIVITY_HPP
