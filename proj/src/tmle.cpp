#include "causal/tmle.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "causal/stats.hpp"
#include "causal/util.hpp"

namespace causal {

namespace {

constexpr double kClipLo = 0.025;
constexpr double kClipHi = 0.975;
constexpr double kLogitClamp = 1e-4;

double sigmoid(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    double e = std::exp(eta);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

Eigen::VectorXd clamp01(const Eigen::VectorXd& q) {
    return q.cwiseMax(kLogitClamp).cwiseMin(1.0 - kLogitClamp);
}

// rescales a clipped row to sum 1 while keeping every entry inside the clip
// bounds; entries that would leave the box get pinned there
void renormalize_row(Eigen::Ref<Eigen::RowVectorXd> row) {
    Eigen::Index k = row.size();
    std::vector<int> pinned(k, 0);
    for (int pass = 0; pass <= k; ++pass) {
        double pinned_sum = 0.0, free_sum = 0.0;
        int free_count = 0;
        for (Eigen::Index j = 0; j < k; ++j) {
            if (pinned[j]) {
                pinned_sum += row[j];
            } else {
                free_sum += row[j];
                ++free_count;
            }
        }
        if (free_count == 0) break;
        double factor = (1.0 - pinned_sum) / free_sum;
        bool violated = false;
        for (Eigen::Index j = 0; j < k; ++j) {
            if (pinned[j]) continue;
            double v = row[j] * factor;
            if (v < kClipLo - 1e-15) {
                row[j] = kClipLo;
                pinned[j] = 1;
                violated = true;
            } else if (v > kClipHi + 1e-15) {
                row[j] = kClipHi;
                pinned[j] = 1;
                violated = true;
            }
        }
        if (!violated) {
            for (Eigen::Index j = 0; j < k; ++j)
                if (!pinned[j]) row[j] *= factor;
            break;
        }
    }
    if (std::abs(row.sum() - 1.0) > 1e-9)
        throw std::logic_error("propensity renormalization failed to reach a simplex row");
}

int level_index(double level, int levels, const std::string& what) {
    double r = std::round(level);
    if (std::abs(level - r) > 1e-9 || r < 0 || r >= levels)
        throw std::invalid_argument(what + " level " + format_double(level) +
                                    " is not one of the treatment levels 0.." + std::to_string(levels - 1));
    return static_cast<int>(r);
}

double group_mean(const Eigen::VectorXd& y, const Eigen::VectorXd& t, double level, long& count) {
    double s = 0.0;
    count = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (t[i] == level) {
            s += y[i];
            ++count;
        }
    }
    return count > 0 ? s / static_cast<double>(count) : 0.0;
}

} // namespace

std::vector<double> plug_in_ate(const FittedSuperLearner& q, const Dataset& ds, const EstimandSpec& spec) {
    std::vector<double> out;
    for (const auto& [t, t_ref] : spec.contrasts) {
        Eigen::VectorXd qt = q.predict_with(ds, {{spec.treatment, t}}).col(0);
        Eigen::VectorXd qr = q.predict_with(ds, {{spec.treatment, t_ref}}).col(0);
        out.push_back((qt - qr).mean());
    }
    return out;
}

PropensityFit fit_propensity(const Dataset& ds, const std::string& treatment,
                             const std::vector<std::string>& confounders, SuperLearnerSpec sl) {
    if (!ds.type_of(treatment).discrete())
        throw std::invalid_argument("treatment '" + treatment + "' must be discrete");
    PropensityFit fit;
    fit.levels = ds.level_count(treatment);
    if (fit.levels < 2) throw std::invalid_argument("treatment '" + treatment + "' has a single level");
    if (fit.levels * kClipLo > 1.0)
        throw std::invalid_argument("treatment has too many levels for the clipping bounds");

    Eigen::VectorXd t = ds.column(treatment);
    Eigen::Index n = ds.n_rows();
    std::vector<long> counts(fit.levels, 0);
    for (Eigen::Index i = 0; i < n; ++i) ++counts[static_cast<int>(t[i])];
    for (int lev = 0; lev < fit.levels; ++lev)
        if (counts[lev] < 2)
            throw std::runtime_error("treatment level " + std::to_string(lev) + " has " +
                                     std::to_string(counts[lev]) + " observations; need at least 2");

    if (confounders.empty()) {
        Eigen::RowVectorXd freq(fit.levels);
        for (int lev = 0; lev < fit.levels; ++lev)
            freq[lev] = static_cast<double>(counts[lev]) / static_cast<double>(n);
        fit.g = freq.replicate(n, 1);
    } else {
        sl.task = SlTask::Propensity;
        FittedSuperLearner f = sl_fit(ds, treatment, confounders, sl);
        fit.g = f.predict_ds(ds);
        fit.weights = f.weights;
    }

    fit.raw_min = fit.g.minCoeff();
    fit.raw_max = fit.g.maxCoeff();
    fit.clipped = (fit.g.array() < kClipLo).count() + (fit.g.array() > kClipHi).count();
    fit.g = fit.g.cwiseMax(kClipLo).cwiseMin(kClipHi);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(fit.g.row(i).sum() - 1.0) > 1e-12) {
            Eigen::RowVectorXd row = fit.g.row(i);
            renormalize_row(row);
            fit.g.row(i) = row;
        }
    }
    return fit;
}

CleverCovariates clever_covariates(const Eigen::VectorXd& t_values, const Eigen::MatrixXd& g,
                                   double level_t, double level_ref) {
    int it = level_index(level_t, static_cast<int>(g.cols()), "contrast");
    int iref = level_index(level_ref, static_cast<int>(g.cols()), "contrast");
    if (g.minCoeff() <= 0.0) throw std::logic_error("propensity matrix contains a zero; clip it first");
    Eigen::Index n = t_values.size();
    CleverCovariates cc;
    cc.h.resize(n);
    cc.h_t = g.col(it).cwiseInverse();
    cc.h_ref = -g.col(iref).cwiseInverse();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (t_values[i] == level_t)
            cc.h[i] = cc.h_t[i];
        else if (t_values[i] == level_ref)
            cc.h[i] = cc.h_ref[i];
        else
            cc.h[i] = 0.0;
    }
    return cc;
}

FluctuationFit tmle_fluctuate(const Eigen::VectorXd& y, const Eigen::VectorXd& q0,
                              const Eigen::VectorXd& h) {
    Eigen::VectorXd offset = clamp01(q0).unaryExpr([](double p) { return logit(p); });
    FluctuationFit fit;
    double eps = 0.0;
    for (int it = 0; it < 100; ++it) {
        double score = 0.0, deriv = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            double mu = sigmoid(offset[i] + eps * h[i]);
            score += h[i] * (y[i] - mu);
            deriv -= h[i] * h[i] * mu * (1.0 - mu);
        }
        if (std::abs(score) < 1e-10) {
            fit.epsilon = eps;
            fit.converged = true;
            return fit;
        }
        if (std::abs(deriv) < 1e-300 || !std::isfinite(eps)) break;
        eps -= score / deriv;
        if (std::abs(eps) > 50.0) break;
    }
    fit.epsilon = 0.0;
    fit.converged = false;
    return fit;
}

TargetedResult tmle_estimate(const Dataset& ds, const EstimandSpec& spec, const SuperLearnerSpec& sl) {
    validate_estimand(spec);
    ds.column_index(spec.treatment);
    ds.column_index(spec.outcome);
    for (const auto& c : spec.adjustment) ds.column_index(c);
    for (const auto& r : spec.precision) ds.column_index(r);

    TargetedResult res;
    res.estimand = spec;

    std::string censor = "Q_" + spec.outcome;
    if (ds.has_column(censor)) {
        if (ds.type_of(censor).kind != ColumnKind::Binary)
            throw std::invalid_argument("censoring column '" + censor + "' must be binary");
        for (const auto& c : spec.adjustment)
            if (c == censor) throw std::invalid_argument("censoring column cannot be adjusted for");
        for (const auto& r : spec.precision)
            if (r == censor) throw std::invalid_argument("censoring column cannot be a precision variable");
        res.censor_column = censor;
    }

    std::vector<std::string> used{spec.treatment, spec.outcome};
    used.insert(used.end(), spec.adjustment.begin(), spec.adjustment.end());
    used.insert(used.end(), spec.precision.begin(), spec.precision.end());
    if (!res.censor_column.empty()) used.push_back(res.censor_column);
    for (const auto& c : used)
        if (ds.missing_count(c) > 0)
            throw std::invalid_argument("column '" + c + "' has missing cells; run make_censoring first");

    const auto& ttype = ds.type_of(spec.treatment);
    if (!ttype.discrete())
        throw std::invalid_argument("treatment '" + spec.treatment + "' must be discrete");
    const auto& ytype = ds.type_of(spec.outcome);
    if (ytype.kind != ColumnKind::Binary && ytype.kind != ColumnKind::Continuous)
        throw std::invalid_argument("outcome '" + spec.outcome + "' must be binary or continuous");

    Dataset work = ds;
    if (ytype.kind == ColumnKind::Continuous) {
        auto known = ds.rescaled.find(spec.outcome);
        if (known == ds.rescaled.end()) {
            work = rescale_column(ds, spec.outcome);
            res.outcome_bounds = work.rescaled.at(spec.outcome);
        } else {
            res.outcome_bounds = known->second;
        }
        res.outcome_rescaled = true;
    } else {
        res.notes.push_back("binary outcome: Bernoulli working model, effects are risk differences");
    }

    std::vector<std::string> q_features{spec.treatment};
    q_features.insert(q_features.end(), spec.adjustment.begin(), spec.adjustment.end());
    q_features.insert(q_features.end(), spec.precision.begin(), spec.precision.end());
    if (!res.censor_column.empty()) q_features.push_back(res.censor_column);

    SuperLearnerSpec qs = sl;
    qs.task = SlTask::Regression;
    qs.seed = mix_seed(sl.seed, 1);
    FittedSuperLearner q = sl_fit(work, spec.outcome, q_features, qs);
    res.outcome_weights = q.weights;
    for (const auto& l : sl.learners) res.learner_names.push_back(l.name);

    SuperLearnerSpec ps = sl;
    ps.seed = mix_seed(sl.seed, 2);
    PropensityFit prop = fit_propensity(work, spec.treatment, spec.adjustment, ps);
    res.propensity_raw_min = prop.raw_min;
    res.propensity_raw_max = prop.raw_max;
    res.propensity_clipped = prop.clipped;
    res.propensity_weights = prop.weights;

    Eigen::VectorXd y = work.column(spec.outcome);
    Eigen::VectorXd t = work.column(spec.treatment);
    Eigen::Index n = work.n_rows();
    Eigen::VectorXd q0_obs = q.predict_ds(work).col(0);

    std::vector<std::pair<std::string, double>> base_override;
    if (!res.censor_column.empty()) base_override.emplace_back(res.censor_column, 1.0);

    for (const auto& [lt, lref] : spec.contrasts) {
        level_index(lt, prop.levels, "contrast");
        level_index(lref, prop.levels, "contrast");
        ContrastResult cr;
        cr.t = lt;
        cr.t_ref = lref;

        long n_t = 0, n_ref = 0;
        double m_t = group_mean(y, t, lt, n_t);
        double m_ref = group_mean(y, t, lref, n_ref);
        if (n_t == 0 || n_ref == 0)
            throw std::runtime_error("contrast " + format_double(lt) + "-" + format_double(lref) +
                                     " has an empty treatment arm");
        cr.psi_naive = m_t - m_ref;

        auto ov_t = base_override;
        ov_t.emplace_back(spec.treatment, lt);
        auto ov_ref = base_override;
        ov_ref.emplace_back(spec.treatment, lref);
        Eigen::VectorXd q0_t = q.predict_with(work, ov_t).col(0);
        Eigen::VectorXd q0_ref = q.predict_with(work, ov_ref).col(0);
        cr.psi_initial = (q0_t - q0_ref).mean();

        CleverCovariates cc = clever_covariates(t, prop.g, lt, lref);
        FluctuationFit fl = tmle_fluctuate(y, q0_obs, cc.h);
        cr.epsilon = fl.epsilon;
        cr.fluct_converged = fl.converged;
        if (!fl.converged)
            res.notes.push_back("fluctuation for contrast " + format_double(lt) + "-" +
                                format_double(lref) + " did not converge; epsilon fell back to 0");

        auto update = [&](const Eigen::VectorXd& q0v, const Eigen::VectorXd& hv) {
            Eigen::VectorXd out(n);
            Eigen::VectorXd cl = clamp01(q0v);
            for (Eigen::Index i = 0; i < n; ++i) out[i] = sigmoid(logit(cl[i]) + fl.epsilon * hv[i]);
            return out;
        };
        Eigen::VectorXd qs_obs = update(q0_obs, cc.h);
        Eigen::VectorXd qs_t = update(q0_t, cc.h_t);
        Eigen::VectorXd qs_ref = update(q0_ref, cc.h_ref);

        cr.psi_targeted = (qs_t - qs_ref).mean();
        Eigen::VectorXd inf(n);
        for (Eigen::Index i = 0; i < n; ++i)
            inf[i] = cc.h[i] * (y[i] - qs_obs[i]) + (qs_t[i] - qs_ref[i]) - cr.psi_targeted;
        cr.if_mean = inf.mean();
        cr.se = std::sqrt(variance(inf) / static_cast<double>(n));
        cr.ci_lo = cr.psi_targeted - 1.96 * cr.se;
        cr.ci_hi = cr.psi_targeted + 1.96 * cr.se;
        if (cr.se > 0.0)
            cr.p_value = 2.0 * (1.0 - normal_cdf(std::abs(cr.psi_targeted) / cr.se));
        else
            cr.p_value = cr.psi_targeted == 0.0 ? 1.0 : 0.0;

        if (res.outcome_rescaled) {
            cr.rescaled = true;
            cr.psi_original = unscale_effect(res.outcome_bounds, cr.psi_targeted);
            cr.ci_lo_original = unscale_effect(res.outcome_bounds, cr.ci_lo);
            cr.ci_hi_original = unscale_effect(res.outcome_bounds, cr.ci_hi);
        }
        res.contrasts.push_back(cr);
    }
    return res;
}

} // namespace causal
