#include "causal/super_learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "causal/stats.hpp"
#include "causal/util.hpp"

namespace causal {

namespace {

double sigmoid(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    double e = std::exp(eta);
    return e / (1.0 + e);
}

Eigen::MatrixXd augment(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd a(x.rows(), x.cols() + 1);
    a.col(0).setOnes();
    a.rightCols(x.cols()) = x;
    return a;
}

struct Standardizer {
    Eigen::RowVectorXd mu;
    Eigen::RowVectorXd sd;

    void fit(const Eigen::MatrixXd& x) {
        mu = x.colwise().mean();
        sd.resize(x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            double v = (x.col(j).array() - mu[j]).square().mean();
            sd[j] = std::sqrt(v) < 1e-12 ? 1.0 : std::sqrt(v);
        }
    }
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
        return ((x.rowwise() - mu).array().rowwise() / sd.array()).matrix();
    }
};

void rows_to_simplex(Eigen::MatrixXd& p) {
    p = p.cwiseMax(1e-9);
    for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
}

class InterceptOnly : public Learner {
  public:
    InterceptOnly(const Eigen::MatrixXd& y, SlTask task) {
        m_value = y.colwise().mean();
        if (task == SlTask::Propensity) {
            Eigen::MatrixXd v = m_value;
            rows_to_simplex(v);
            m_value = v;
        }
    }
    Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const override {
        return m_value.replicate(x.rows(), 1);
    }

  private:
    Eigen::MatrixXd m_value; // 1 x levels
};

class LinearRidge : public Learner {
  public:
    LinearRidge(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lambda, SlTask task)
        : m_task(task) {
        m_std.fit(x);
        Eigen::MatrixXd a = augment(m_std.apply(x));
        Eigen::MatrixXd ata = a.transpose() * a;
        for (Eigen::Index j = 1; j < ata.rows(); ++j) ata(j, j) += lambda;
        m_beta = ata.ldlt().solve(a.transpose() * y);
    }
    Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const override {
        Eigen::MatrixXd p = augment(m_std.apply(x)) * m_beta;
        if (m_task == SlTask::Propensity) rows_to_simplex(p);
        return p;
    }

  private:
    SlTask m_task;
    Standardizer m_std;
    Eigen::MatrixXd m_beta;
};

Eigen::VectorXd irls_logistic(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double lambda) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(a.cols());
    for (int it = 0; it < 100; ++it) {
        Eigen::VectorXd eta = a * beta;
        Eigen::VectorXd mu = eta.unaryExpr([](double e) {
            return std::min(1.0 - 1e-9, std::max(1e-9, sigmoid(e)));
        });
        Eigen::VectorXd w = (mu.array() * (1.0 - mu.array())).cwiseMax(1e-6);
        Eigen::VectorXd z = eta.array() + (y.array() - mu.array()) / w.array();
        Eigen::MatrixXd awa = a.transpose() * w.asDiagonal() * a;
        for (Eigen::Index j = 1; j < awa.rows(); ++j) awa(j, j) += lambda;
        Eigen::VectorXd next = awa.ldlt().solve(a.transpose() * (w.asDiagonal() * z));
        double step = (next - beta).cwiseAbs().maxCoeff();
        beta = next;
        if (step < 1e-8) break;
    }
    return beta;
}

class LogisticRidge : public Learner {
  public:
    LogisticRidge(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lambda, SlTask task)
        : m_task(task) {
        m_std.fit(x);
        Eigen::MatrixXd a = augment(m_std.apply(x));
        m_beta.resize(a.cols(), y.cols());
        for (Eigen::Index c = 0; c < y.cols(); ++c) m_beta.col(c) = irls_logistic(a, y.col(c), lambda);
    }
    Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const override {
        Eigen::MatrixXd p = (augment(m_std.apply(x)) * m_beta).unaryExpr([](double e) { return sigmoid(e); });
        if (m_task == SlTask::Propensity) rows_to_simplex(p);
        return p;
    }

  private:
    SlTask m_task;
    Standardizer m_std;
    Eigen::MatrixXd m_beta;
};

class Knn : public Learner {
  public:
    Knn(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int k, SlTask task) : m_task(task), m_y(y) {
        m_std.fit(x);
        m_x = m_std.apply(x);
        m_k = std::max(1, std::min<int>(k, static_cast<int>(x.rows())));
    }
    Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const override {
        Eigen::MatrixXd xs = m_std.apply(x);
        Eigen::MatrixXd p(x.rows(), m_y.cols());
        std::vector<std::pair<double, int>> order(m_x.rows());
        for (Eigen::Index i = 0; i < xs.rows(); ++i) {
            for (Eigen::Index j = 0; j < m_x.rows(); ++j)
                order[j] = {(m_x.row(j) - xs.row(i)).squaredNorm(), static_cast<int>(j)};
            std::partial_sort(order.begin(), order.begin() + m_k, order.end());
            Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(m_y.cols());
            for (int r = 0; r < m_k; ++r) acc += m_y.row(order[r].second);
            p.row(i) = acc / m_k;
        }
        if (m_task == SlTask::Propensity) rows_to_simplex(p);
        return p;
    }

  private:
    SlTask m_task;
    Standardizer m_std;
    Eigen::MatrixXd m_x;
    Eigen::MatrixXd m_y;
    int m_k;
};

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict_row(const Eigen::MatrixXd& x, Eigen::Index i) const {
        int cur = 0;
        while (nodes[cur].feature >= 0)
            cur = x(i, nodes[cur].feature) <= nodes[cur].threshold ? nodes[cur].left : nodes[cur].right;
        return nodes[cur].value;
    }
};

constexpr int kMinLeaf = 3;
constexpr int kMaxThresholds = 32;

int grow_tree(Tree& tree, const Eigen::MatrixXd& x, const Eigen::VectorXd& r,
              std::vector<int>& rows, int depth, int max_depth) {
    int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    double sum = 0.0;
    for (int i : rows) sum += r[i];
    tree.nodes[id].value = sum / static_cast<double>(rows.size());

    if (depth >= max_depth || static_cast<int>(rows.size()) < 2 * kMinLeaf) return id;

    int best_feature = -1;
    double best_threshold = 0.0, best_gain = 1e-12;
    int n = static_cast<int>(rows.size());
    std::vector<std::pair<double, double>> vals(n); // (feature value, residual)
    for (int f = 0; f < x.cols(); ++f) {
        for (int i = 0; i < n; ++i) vals[i] = {x(rows[i], f), r[rows[i]]};
        std::sort(vals.begin(), vals.end());
        std::vector<int> cuts; // split after position cut (1-based count on the left)
        for (int i = 0; i + 1 < n; ++i)
            if (vals[i].first < vals[i + 1].first && i + 1 >= kMinLeaf && n - i - 1 >= kMinLeaf)
                cuts.push_back(i + 1);
        if (cuts.empty()) continue;
        if (static_cast<int>(cuts.size()) > kMaxThresholds) {
            std::vector<int> picked;
            for (int j = 0; j < kMaxThresholds; ++j)
                picked.push_back(cuts[static_cast<size_t>(j) * (cuts.size() - 1) / (kMaxThresholds - 1)]);
            picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
            cuts = std::move(picked);
        }
        std::vector<double> prefix(n + 1, 0.0);
        for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + vals[i].second;
        double total = prefix[n];
        for (int c : cuts) {
            double ls = prefix[c], rs = total - ls;
            double gain = ls * ls / c + rs * rs / (n - c) - total * total / n;
            if (gain > best_gain) {
                best_gain = gain;
                best_feature = f;
                best_threshold = 0.5 * (vals[c - 1].first + vals[c].first);
            }
        }
    }
    if (best_feature < 0) return id;

    std::vector<int> left, right;
    for (int i : rows)
        (x(i, best_feature) <= best_threshold ? left : right).push_back(i);
    if (static_cast<int>(left.size()) < kMinLeaf || static_cast<int>(right.size()) < kMinLeaf) return id;
    tree.nodes[id].feature = best_feature;
    tree.nodes[id].threshold = best_threshold;
    int l = grow_tree(tree, x, r, left, depth + 1, max_depth);
    int rr = grow_tree(tree, x, r, right, depth + 1, max_depth);
    tree.nodes[id].left = l;
    tree.nodes[id].right = rr;
    return id;
}

class BoostedStumps : public Learner {
  public:
    BoostedStumps(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int rounds, int depth, double lr,
                  SlTask task)
        : m_task(task), m_lr(lr) {
        int n = static_cast<int>(x.rows());
        m_base = y.colwise().mean();
        m_trees.resize(y.cols());
        Eigen::MatrixXd f = m_base.replicate(n, 1);
        std::vector<int> all(n);
        std::iota(all.begin(), all.end(), 0);
        for (int round = 0; round < rounds; ++round) {
            for (Eigen::Index c = 0; c < y.cols(); ++c) {
                Eigen::VectorXd resid = y.col(c) - f.col(c);
                Tree t;
                std::vector<int> rows = all;
                grow_tree(t, x, resid, rows, 0, depth);
                for (int i = 0; i < n; ++i) f(i, c) += m_lr * t.predict_row(x, i);
                m_trees[c].push_back(std::move(t));
            }
        }
    }
    Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const override {
        Eigen::MatrixXd p = m_base.replicate(x.rows(), 1);
        for (size_t c = 0; c < m_trees.size(); ++c)
            for (const auto& t : m_trees[c])
                for (Eigen::Index i = 0; i < x.rows(); ++i) p(i, static_cast<Eigen::Index>(c)) += m_lr * t.predict_row(x, i);
        if (m_task == SlTask::Propensity) rows_to_simplex(p);
        return p;
    }

  private:
    SlTask m_task;
    double m_lr;
    Eigen::RowVectorXd m_base;
    std::vector<std::vector<Tree>> m_trees; // per output column
};

std::shared_ptr<const Learner> fit_learner(const LearnerSpec& spec, const Eigen::MatrixXd& x,
                                           const Eigen::MatrixXd& y, SlTask task) {
    if (spec.name == "intercept_only") return std::make_shared<InterceptOnly>(y, task);
    if (spec.name == "linear_ridge") return std::make_shared<LinearRidge>(x, y, spec.lambda, task);
    if (spec.name == "logistic_ridge") return std::make_shared<LogisticRidge>(x, y, spec.lambda, task);
    if (spec.name == "knn") return std::make_shared<Knn>(x, y, spec.k, task);
    if (spec.name == "boosted_stumps")
        return std::make_shared<BoostedStumps>(x, y, spec.rounds, spec.depth, spec.learning_rate, task);
    throw std::invalid_argument("unknown learner '" + spec.name + "'");
}

Eigen::MatrixXd one_hot(const Eigen::VectorXd& v, int levels) {
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(v.size(), levels);
    for (Eigen::Index i = 0; i < v.size(); ++i) y(i, static_cast<Eigen::Index>(v[i])) = 1.0;
    return y;
}

std::vector<int> make_folds(Eigen::Index n, int k, SlTask task, const Eigen::VectorXd& target,
                            int levels, Rng& rng) {
    std::vector<int> fold(n, 0);
    if (task == SlTask::Propensity) {
        for (int lev = 0; lev < levels; ++lev) {
            std::vector<Eigen::Index> idx;
            for (Eigen::Index i = 0; i < n; ++i)
                if (static_cast<int>(target[i]) == lev) idx.push_back(i);
            if (idx.size() < 2)
                throw std::runtime_error("treatment level " + std::to_string(lev) + " has " +
                                         std::to_string(idx.size()) +
                                         " observations; stratified folds need at least 2");
            rng.shuffle(idx);
            for (size_t i = 0; i < idx.size(); ++i) fold[idx[i]] = static_cast<int>(i % k);
        }
    } else {
        std::vector<Eigen::Index> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        for (Eigen::Index i = 0; i < n; ++i) fold[idx[i]] = static_cast<int>(i % k);
    }
    return fold;
}

Eigen::VectorXd meta_regression(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double& loss) {
    Eigen::Index n = z.rows(), m = z.cols();
    Eigen::VectorXd w = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    double lip = 2.0 * (z.transpose() * z).norm() / static_cast<double>(n);
    if (lip > 1e-300) {
        double eta = 1.0 / lip;
        for (int it = 0; it < 50000; ++it) {
            Eigen::VectorXd grad = 2.0 / static_cast<double>(n) * (z.transpose() * (z * w - y));
            Eigen::VectorXd next = project_to_simplex(w - eta * grad);
            double step = (next - w).cwiseAbs().maxCoeff();
            w = next;
            if (step < 1e-8) break;
        }
    }
    loss = (z * w - y).squaredNorm() / static_cast<double>(n);
    return w;
}

Eigen::VectorXd meta_log_loss(const Eigen::MatrixXd& m_obs, double& loss) {
    Eigen::Index n = m_obs.rows(), m = m_obs.cols();
    auto f = [&](const Eigen::VectorXd& w) {
        return -(m_obs * w).array().max(1e-300).log().mean();
    };
    Eigen::VectorXd w = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    double fw = f(w);
    double eta = 1.0;
    for (int it = 0; it < 20000; ++it) {
        Eigen::VectorXd p = (m_obs * w).cwiseMax(1e-300);
        Eigen::VectorXd grad = -(m_obs.transpose() * p.cwiseInverse()) / static_cast<double>(n);
        Eigen::VectorXd next;
        double fn = 0.0;
        while (true) {
            next = project_to_simplex(w - eta * grad);
            fn = f(next);
            double quad = grad.dot(next - w) + (next - w).squaredNorm() / (2.0 * eta);
            if (fn <= fw + quad + 1e-12 || eta < 1e-12) break;
            eta *= 0.5;
        }
        double step = (next - w).cwiseAbs().maxCoeff();
        w = next;
        fw = fn;
        if (step < 1e-8) break;
        eta = std::min(eta * 1.5, 1e3);
    }
    loss = fw;
    return w;
}

} // namespace

LearnerSpec parse_learner(const std::string& text) {
    std::string s = trim(text);
    LearnerSpec spec;
    auto open = s.find('(');
    std::vector<std::string> args;
    if (open == std::string::npos) {
        spec.name = s;
    } else {
        if (s.back() != ')') throw std::invalid_argument("malformed learner '" + text + "'");
        spec.name = trim(s.substr(0, open));
        std::string inner = s.substr(open + 1, s.size() - open - 2);
        if (!trim(inner).empty())
            for (const auto& a : split(inner, ',')) args.push_back(trim(a));
    }
    auto want = [&](size_t lo, size_t hi) {
        if (args.size() < lo || args.size() > hi)
            throw std::invalid_argument("learner '" + spec.name + "' got " + std::to_string(args.size()) +
                                        " arguments");
    };
    if (spec.name == "intercept_only") {
        want(0, 0);
    } else if (spec.name == "linear_ridge" || spec.name == "logistic_ridge") {
        want(0, 1);
        if (args.size() == 1) spec.lambda = parse_double(args[0], "ridge lambda");
        if (spec.lambda < 0) throw std::invalid_argument("ridge lambda must be nonnegative");
    } else if (spec.name == "knn") {
        want(0, 1);
        if (args.size() == 1) spec.k = static_cast<int>(parse_long(args[0], "knn k"));
        if (spec.k < 1) throw std::invalid_argument("knn k must be positive");
    } else if (spec.name == "boosted_stumps") {
        want(0, 3);
        if (args.size() >= 1) spec.rounds = static_cast<int>(parse_long(args[0], "boosting rounds"));
        if (args.size() >= 2) spec.depth = static_cast<int>(parse_long(args[1], "tree depth"));
        if (args.size() >= 3) spec.learning_rate = parse_double(args[2], "learning rate");
        if (spec.rounds < 1 || spec.depth < 1 || spec.learning_rate <= 0)
            throw std::invalid_argument("boosted_stumps needs positive rounds, depth and learning rate");
    } else {
        throw std::invalid_argument("unknown learner '" + spec.name + "'");
    }
    return spec;
}

int FeatureCodec::width() const {
    int w = 0;
    for (const auto& t : types) w += t.kind == ColumnKind::Categorical ? t.levels : 1;
    return w;
}

Eigen::MatrixXd FeatureCodec::encode(const Dataset& ds) const { return encode_with(ds, {}); }

Eigen::MatrixXd FeatureCodec::encode_with(
    const Dataset& ds, const std::vector<std::pair<std::string, double>>& overrides) const {
    Eigen::MatrixXd x(ds.n_rows(), width());
    int at = 0;
    for (size_t c = 0; c < cols.size(); ++c) {
        Eigen::VectorXd v = ds.column(cols[c]);
        for (const auto& [name, value] : overrides)
            if (name == cols[c]) v.setConstant(value);
        if (types[c].kind == ColumnKind::Categorical) {
            x.middleCols(at, types[c].levels) = one_hot(v, types[c].levels);
            at += types[c].levels;
        } else {
            x.col(at++) = v;
        }
    }
    return x;
}

FeatureCodec make_codec(const Dataset& ds, const std::vector<std::string>& features) {
    FeatureCodec codec;
    std::set<std::string> seen;
    for (const auto& f : features) {
        if (!seen.insert(f).second) throw std::invalid_argument("duplicate feature '" + f + "'");
        codec.cols.push_back(f);
        codec.types.push_back(ds.type_of(f));
    }
    return codec;
}

Eigen::MatrixXd FittedSuperLearner::predict(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(x.rows(), levels);
    for (size_t l = 0; l < fits.size(); ++l)
        if (weights[static_cast<Eigen::Index>(l)] > 0.0) p += weights[static_cast<Eigen::Index>(l)] * fits[l]->predict(x);
    if (task == SlTask::Regression) p = p.cwiseMax(0.0).cwiseMin(1.0);
    return p;
}

Eigen::MatrixXd FittedSuperLearner::predict_ds(const Dataset& ds) const { return predict(codec.encode(ds)); }

Eigen::MatrixXd FittedSuperLearner::predict_with(
    const Dataset& ds, const std::vector<std::pair<std::string, double>>& overrides) const {
    return predict(codec.encode_with(ds, overrides));
}

FittedSuperLearner sl_fit(const Dataset& ds, const std::string& target,
                          const std::vector<std::string>& features, const SuperLearnerSpec& spec) {
    if (spec.learners.empty()) throw std::invalid_argument("super learner needs at least one learner");
    Eigen::Index n = ds.n_rows();
    if (spec.k_folds < 2 || spec.k_folds > n)
        throw std::invalid_argument("k_folds must lie in [2, " + std::to_string(n) + "], got " +
                                    std::to_string(spec.k_folds));
    if (ds.missing_count(target) > 0)
        throw std::invalid_argument("target column '" + target + "' has missing cells");
    for (const auto& f : features) {
        if (f == target) throw std::invalid_argument("target '" + target + "' cannot be a feature");
        if (ds.missing_count(f) > 0)
            throw std::invalid_argument("feature column '" + f + "' has missing cells");
    }

    FittedSuperLearner out;
    out.task = spec.task;
    out.target = target;
    out.codec = make_codec(ds, features);
    out.specs = spec.learners;

    Eigen::VectorXd tv = ds.column(target);
    Eigen::MatrixXd y;
    if (spec.task == SlTask::Propensity) {
        if (!ds.type_of(target).discrete())
            throw std::invalid_argument("propensity target '" + target + "' must be discrete");
        out.levels = ds.level_count(target);
        if (out.levels < 2) throw std::invalid_argument("propensity target has a single level");
        y = one_hot(tv, out.levels);
    } else {
        if (tv.minCoeff() < -1e-9 || tv.maxCoeff() > 1.0 + 1e-9)
            throw std::invalid_argument("regression target '" + target +
                                        "' must lie in [0,1]; rescale the outcome first");
        out.levels = 1;
        y = tv;
    }

    Eigen::MatrixXd x = out.codec.encode(ds);
    int nl = static_cast<int>(spec.learners.size());

    Rng rng(mix_seed(spec.seed, 0));
    std::vector<int> fold = make_folds(n, spec.k_folds, spec.task, tv, out.levels, rng);

    // held-out predictions per learner
    std::vector<Eigen::MatrixXd> cv(nl, Eigen::MatrixXd::Zero(n, out.levels));
    for (int f = 0; f < spec.k_folds; ++f) {
        std::vector<Eigen::Index> tr, va;
        for (Eigen::Index i = 0; i < n; ++i) (fold[i] == f ? va : tr).push_back(i);
        if (va.empty()) continue;
        Eigen::MatrixXd xtr(tr.size(), x.cols()), ytr(tr.size(), y.cols());
        Eigen::MatrixXd xva(va.size(), x.cols());
        for (size_t i = 0; i < tr.size(); ++i) {
            xtr.row(i) = x.row(tr[i]);
            ytr.row(i) = y.row(tr[i]);
        }
        for (size_t i = 0; i < va.size(); ++i) xva.row(i) = x.row(va[i]);
        for (int l = 0; l < nl; ++l) {
            Eigen::MatrixXd pv = fit_learner(spec.learners[l], xtr, ytr, spec.task)->predict(xva);
            for (size_t i = 0; i < va.size(); ++i) cv[l].row(va[i]) = pv.row(i);
        }
    }

    if (nl == 1) {
        out.weights = Eigen::VectorXd::Ones(1);
        if (spec.task == SlTask::Regression) {
            out.cv_loss = (cv[0].col(0) - tv).squaredNorm() / static_cast<double>(n);
        } else {
            double s = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
                s -= std::log(std::max(cv[0](i, static_cast<Eigen::Index>(tv[i])), 1e-300));
            out.cv_loss = s / static_cast<double>(n);
        }
    } else if (spec.task == SlTask::Regression) {
        Eigen::MatrixXd z(n, nl);
        for (int l = 0; l < nl; ++l) z.col(l) = cv[l].col(0);
        out.weights = meta_regression(z, tv, out.cv_loss);
    } else {
        Eigen::MatrixXd m_obs(n, nl); // held-out probability of the observed level
        for (int l = 0; l < nl; ++l)
            for (Eigen::Index i = 0; i < n; ++i)
                m_obs(i, l) = std::max(cv[l](i, static_cast<Eigen::Index>(tv[i])), 1e-12);
        out.weights = meta_log_loss(m_obs, out.cv_loss);
    }

    for (int l = 0; l < nl; ++l) out.fits.push_back(fit_learner(spec.learners[l], x, y, spec.task));
    return out;
}

} // namespace causal
