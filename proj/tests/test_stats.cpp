#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "causal/stats.hpp"
#include "causal/util.hpp"

using namespace causal;

TEST_CASE("chi2_sf matches reference values") {
    // reference values from an independent implementation, 15+ digits
    CHECK(chi2_sf(3.84, 1) == doctest::Approx(0.050043521248705189).epsilon(1e-12));
    CHECK(chi2_sf(5.99, 2) == doctest::Approx(0.050036627086586287).epsilon(1e-12));
    CHECK(chi2_sf(10.0, 4) == doctest::Approx(0.040427681994512792).epsilon(1e-12));
    CHECK(chi2_sf(0.5, 3) == doctest::Approx(0.9188914116546758).epsilon(1e-12));
    CHECK(chi2_sf(25.0, 10) == doctest::Approx(0.0053455054871340687).epsilon(1e-12));
    CHECK(chi2_sf(1e-8, 1) == doctest::Approx(0.99992021154405264).epsilon(1e-12));
    CHECK(chi2_sf(200.0, 2) == doctest::Approx(3.7200759760208177e-44).epsilon(1e-10));
    CHECK(chi2_sf(0.0, 5) == 1.0);
}

TEST_CASE("digamma matches reference values") {
    CHECK(digamma(1.0) == doctest::Approx(-0.57721566490153287).epsilon(1e-12));
    CHECK(digamma(2.0) == doctest::Approx(0.42278433509846713).epsilon(1e-12));
    CHECK(digamma(3.0) == doctest::Approx(0.92278433509846713).epsilon(1e-12));
    CHECK(digamma(5.0) == doctest::Approx(1.5061176684318003).epsilon(1e-12));
    CHECK(digamma(7.0) == doctest::Approx(1.872784335098467).epsilon(1e-12));
    CHECK(digamma(0.5) == doctest::Approx(-1.9635100260214235).epsilon(1e-12));
    CHECK(digamma(10.5) == doctest::Approx(2.3030010342976865).epsilon(1e-12));
    CHECK(digamma(0.001) == doctest::Approx(-1000.5755719318103).epsilon(1e-12));
    CHECK(digamma(100.0) == doctest::Approx(4.6001618527380881).epsilon(1e-12));
    // recurrence psi(x+1) = psi(x) + 1/x
    CHECK(digamma(4.3) == doctest::Approx(digamma(3.3) + 1.0 / 3.3).epsilon(1e-12));
}

TEST_CASE("normal_cdf matches reference values") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(normal_cdf(1.0) == doctest::Approx(0.84134474606854293).epsilon(1e-12));
    CHECK(normal_cdf(-1.0) == doctest::Approx(0.15865525393145707).epsilon(1e-12));
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
    CHECK(normal_cdf(2.5758293035489004) == doctest::Approx(0.995).epsilon(1e-12));
    CHECK(normal_cdf(-4.0) == doctest::Approx(3.1671241833119863e-05).epsilon(1e-10));
    CHECK(normal_cdf(1.0) + normal_cdf(-1.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("gamma_p and gamma_q are complementary and monotone") {
    for (double a : {0.5, 1.0, 2.5, 10.0})
        for (double x : {0.01, 0.5, 1.0, 5.0, 30.0}) {
            CHECK(gamma_p(a, x) + gamma_q(a, x) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(gamma_p(a, x) >= 0.0);
            CHECK(gamma_p(a, x) <= 1.0);
        }
    CHECK(gamma_p(1.0, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    CHECK(gamma_p(2.0, 0.3) < gamma_p(2.0, 0.9));
}

TEST_CASE("rng draws are deterministic per seed and stream-separated") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 10; ++i) {
        double u = a.uniform01();
        CHECK(u == b.uniform01());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    CHECK(a.uniform01() != c.uniform01());
    CHECK(mix_seed(7, 0) != mix_seed(7, 1));
    CHECK(mix_seed(7, 1) != mix_seed(8, 1));
    CHECK(mix_seed(7, 1) == mix_seed(7, 1));
}

TEST_CASE("rng transforms have the right moments") {
    Rng rng(2024);
    const int n = 200000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));

    int ones = 0;
    for (int i = 0; i < n; ++i) ones += rng.bernoulli(0.3);
    CHECK(static_cast<double>(ones) / n == doctest::Approx(0.3).epsilon(0.02));

    std::vector<double> w = {1.0, 3.0, 0.0, 6.0};
    std::vector<int> counts(4, 0);
    for (int i = 0; i < n; ++i) counts[static_cast<size_t>(rng.categorical(w))]++;
    CHECK(counts[2] == 0);
    CHECK(static_cast<double>(counts[3]) / n == doctest::Approx(0.6).epsilon(0.02));
}

TEST_CASE("project_to_simplex") {
    Eigen::VectorXd v(3);
    v << 0.2, 0.3, 0.5;
    Eigen::VectorXd p = project_to_simplex(v);
    CHECK((p - v).norm() == doctest::Approx(0.0).epsilon(1e-12));

    v << 10.0, 0.0, -5.0;
    p = project_to_simplex(v);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.minCoeff() >= 0.0);
    CHECK(p[0] == doctest::Approx(1.0));

    v << 0.6, 0.6, 0.6;
    p = project_to_simplex(v);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("distance correlation separates dependence from independence") {
    Rng rng(5);
    const int n = 400;
    Eigen::VectorXd x(n), y_dep(n), y_ind(n);
    for (int i = 0; i < n; ++i) {
        x[i] = rng.normal();
        y_dep[i] = x[i] * x[i]; // nonlinear, zero linear correlation
        y_ind[i] = rng.normal();
    }
    CHECK(distance_correlation(x, y_dep) > 0.3);
    CHECK(distance_correlation(x, y_ind) < 0.15);
    CHECK(distance_correlation(x, x) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("mean and variance use the population form") {
    Eigen::VectorXd v(4);
    v << 1.0, 2.0, 3.0, 6.0;
    CHECK(mean(v) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(variance(v) == doctest::Approx(3.5).epsilon(1e-12)); // ((2^2)+(1^2)+(0)+(3^2))/4
}

TEST_CASE("format_double round-trips exactly") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -0.0, 2e308 / 2e8}) {
        std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("string utilities") {
    CHECK(trim("  a b  ") == "a b");
    CHECK(split("a,b,,c", ',') == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(strip_comment("x = 1 # note") == "x = 1");
    CHECK(strip_comment("# all comment") == "");
    CHECK(valid_node_name("Q_age"));
    CHECK(valid_node_name("X1"));
    CHECK_FALSE(valid_node_name("bad name"));
    CHECK_FALSE(valid_node_name(""));
    CHECK(parse_double("2.5e-3", "t") == doctest::Approx(0.0025));
    CHECK_THROWS(parse_double("abc", "t"));
    CHECK(parse_long("42", "t") == 42);
    CHECK_THROWS(parse_long("4.2", "t"));
}
