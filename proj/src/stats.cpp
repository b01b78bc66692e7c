#include "causal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace causal {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr int kGammaMaxIter = 500;
constexpr double kGammaEps = 1e-15;
constexpr double kTiny = 1e-300;

// lower incomplete gamma by series, valid for x < a + 1
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < kGammaMaxIter; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kGammaEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// upper incomplete gamma by Lentz continued fraction, valid for x >= a + 1
double gamma_q_cf(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kGammaMaxIter; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kGammaEps) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
}

double Rng::uniform01() {
    return static_cast<double>(m_eng() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) {
    return a + (b - a) * uniform01();
}

double Rng::normal() {
    // discard the second Box-Muller value to keep consumption fixed
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::normal(double mean, double sd) {
    return mean + sd * normal();
}

int Rng::bernoulli(double p) {
    return uniform01() < p ? 1 : 0;
}

int Rng::categorical(const std::vector<double>& probs) {
    double total = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw std::invalid_argument("categorical: negative weight");
        total += p;
    }
    if (total <= 0.0) throw std::invalid_argument("categorical: zero total weight");
    double u = uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("below: n must be positive");
    // rejection sampling avoids modulo bias
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = m_eng();
    while (x >= limit) x = m_eng();
    return x % n;
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double gamma_p(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_p: domain");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_q: domain");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi2_sf(double stat, double df) {
    if (df <= 0.0) throw std::invalid_argument("chi2_sf: df must be positive");
    if (stat <= 0.0) return 1.0;
    return gamma_q(df / 2.0, stat / 2.0);
}

double digamma(double x) {
    if (x <= 0.0) throw std::invalid_argument("digamma: x must be positive");
    double result = 0.0;
    // shift to x >= 12 where the asymptotic series converges fast
    while (x < 12.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    double inv = 1.0 / x;
    double inv2 = inv * inv;
    result += std::log(x) - 0.5 * inv
        - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))));
    return result;
}

double distance_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const Eigen::Index n = x.size();
    if (n != y.size() || n < 2) throw std::invalid_argument("distance_correlation: size mismatch");
    Eigen::MatrixXd a(n, n), b(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            a(i, j) = std::fabs(x(i) - x(j));
            b(i, j) = std::fabs(y(i) - y(j));
        }
    }
    auto center = [n](Eigen::MatrixXd& m) {
        Eigen::VectorXd row = m.rowwise().mean();
        Eigen::VectorXd col = m.colwise().mean();
        double grand = m.mean();
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) m(i, j) += grand - row(i) - col(j);
    };
    center(a);
    center(b);
    double dcov2 = (a.array() * b.array()).mean();
    double dvarx = (a.array() * a.array()).mean();
    double dvary = (b.array() * b.array()).mean();
    if (dvarx <= 0.0 || dvary <= 0.0) return 0.0;
    double r2 = dcov2 / std::sqrt(dvarx * dvary);
    return r2 > 0.0 ? std::sqrt(r2) : 0.0;
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0;
    double theta = 0.0;
    int rho = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        css += u[i];
        double t = (css - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) {
            rho = static_cast<int>(i + 1);
            theta = t;
        }
    }
    (void)rho;
    Eigen::VectorXd w = (v.array() - theta).max(0.0);
    double s = w.sum();
    if (s > 0.0) w /= s;
    return w;
}

double mean(const Eigen::VectorXd& v) {
    return v.size() == 0 ? 0.0 : v.mean();
}

double variance(const Eigen::VectorXd& v) {
    if (v.size() == 0) return 0.0;
    double m = v.mean();
    return (v.array() - m).square().mean();
}

} // namespace causal
