#ifndef CAUSAL_STATS_HPP
#define CAUSAL_STATS_HPP

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace causal {

// Stream derivation keeps per-node / per-run generators independent of each
// other while staying reproducible from a single user-facing seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Thin wrapper around mt19937_64 with hand-rolled transforms so draw
// sequences are identical across standard library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : m_eng(seed) {}

    // uniform on [0, 1) with 53 random bits
    double uniform01();
    double uniform(double a, double b);
    // Box-Muller without caching: consumes two uniforms per draw
    double normal();
    double normal(double mean, double sd);
    int bernoulli(double p);
    // index draw from an unnormalized nonnegative weight vector
    int categorical(const std::vector<double>& probs);
    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n);

    template <typename T> void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 m_eng;
};

double normal_cdf(double x);

// regularized incomplete gamma P(a, x) and Q(a, x) = 1 - P(a, x)
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// survival function of the chi-squared distribution
double chi2_sf(double stat, double df);

double digamma(double x);

// distance correlation between two samples (biased V-statistic form)
double distance_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Euclidean projection onto the probability simplex
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

double mean(const Eigen::VectorXd& v);
double variance(const Eigen::VectorXd& v); // population (1/N) form

} // namespace causal

#endif // CAUSAL_STATS_HPP
