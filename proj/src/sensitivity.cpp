#include "causal/sensitivity.hpp"

#include <cmath>
#include <stdexcept>

namespace causal {

std::vector<SensitivityCurve> sensitivity_from_results(const TargetedResult& adjusted,
                                                       const TargetedResult& unadjusted,
                                                       const std::vector<double>& multipliers) {
    if (multipliers.empty()) throw std::invalid_argument("sensitivity needs at least one multiplier");
    for (double m : multipliers)
        if (m < 0.0 || !std::isfinite(m))
            throw std::invalid_argument("sensitivity multipliers must be finite and nonnegative");
    if (adjusted.contrasts.size() != unadjusted.contrasts.size())
        throw std::invalid_argument("adjusted and unadjusted runs cover different contrasts");

    std::vector<SensitivityCurve> curves;
    for (size_t c = 0; c < adjusted.contrasts.size(); ++c) {
        const auto& a = adjusted.contrasts[c];
        const auto& u = unadjusted.contrasts[c];
        if (a.t != u.t || a.t_ref != u.t_ref)
            throw std::invalid_argument("adjusted and unadjusted runs cover different contrasts");
        SensitivityCurve curve;
        curve.t = a.t;
        curve.t_ref = a.t_ref;
        curve.psi = a.psi_targeted;
        curve.se = a.se;
        curve.psi_unadjusted = u.psi_targeted;
        curve.delta_unit = std::abs(a.psi_targeted - u.psi_targeted);
        for (double m : multipliers) {
            SensitivityRow row;
            row.multiplier = m;
            row.lower = curve.psi - m * curve.delta_unit;
            row.upper = curve.psi + m * curve.delta_unit;
            row.ci_lo = row.lower - 1.96 * curve.se;
            row.ci_hi = row.upper + 1.96 * curve.se;
            curve.rows.push_back(row);
        }
        double margin = std::abs(curve.psi) - 1.96 * curve.se;
        if (margin <= 0.0)
            curve.crossing = 0.0;
        else if (curve.delta_unit > 0.0)
            curve.crossing = margin / curve.delta_unit;
        else
            curve.crossing = std::nullopt;
        curves.push_back(std::move(curve));
    }
    return curves;
}

std::vector<SensitivityCurve> sensitivity_analysis(const Dataset& ds, const EstimandSpec& spec,
                                                   const SuperLearnerSpec& sl,
                                                   const SensitivityOptions& opt) {
    TargetedResult adjusted = tmle_estimate(ds, spec, sl);
    EstimandSpec bare = spec;
    bare.adjustment.clear();
    if (opt.drop_all) bare.precision.clear();
    TargetedResult unadjusted = tmle_estimate(ds, bare, sl);
    return sensitivity_from_results(adjusted, unadjusted, opt.multipliers);
}

} // namespace causal
