#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "causal/scm.hpp"
#include "causal/stats.hpp"

using namespace causal;

namespace {

const char* kScm = "C = linear(intercept:0) + gaussian(1.0)\n"
                   "T = logistic(C:1.0, intercept:0)\n"
                   "M = threshold(T:2.0, cut:0.5, cut:1.5)\n"
                   "Y = linear(T:1.2, C:1.0, intercept:0.5) + gaussian(1.0)\n";

} // namespace

TEST_CASE("scm parsing and structure") {
    ScmSpec scm = parse_scm(kScm);
    REQUIRE(scm.nodes.size() == 4);
    CHECK(scm.node("T").parents == std::vector<std::string>{"C"});
    CHECK(scm.node("Y").parents == std::vector<std::string>{"T", "C"});
    CHECK(scm.node("Y").mech.intercept == doctest::Approx(0.5));
    CHECK(scm.node("M").mech.cutpoints == std::vector<double>{0.5, 1.5});

    CHECK(scm_column_type(scm.node("C")).kind == ColumnKind::Continuous);
    CHECK(scm_column_type(scm.node("T")).kind == ColumnKind::Binary);
    CHECK(scm_column_type(scm.node("M")).kind == ColumnKind::Ordinal);
    CHECK(scm_column_type(scm.node("M")).levels == 3);

    CausalGraph g = scm_graph(scm);
    CHECK(g.has_directed("C", "T"));
    CHECK(g.has_directed("T", "Y"));
    CHECK(g.has_directed("C", "Y"));
    CHECK(g.has_directed("T", "M"));
    CHECK(g.num_directed() == 4);
}

TEST_CASE("scm parse errors") {
    CHECK_THROWS(parse_scm("X = sorcery(Y:1)\n"));
    CHECK_THROWS(parse_scm("X linear(intercept:0)\n"));
    CHECK_THROWS(parse_scm("X = linear(intercept:abc)\n"));
    CHECK_THROWS(parse_scm("X = linear(intercept:0) + gaussian(1) + gaussian(1)\n"));
    CHECK_THROWS(parse_scm("X = linear(intercept:0) + uniform(1)\n")); // arity
}

TEST_CASE("scm validation") {
    CHECK_THROWS(validate_scm(parse_scm("A = linear(B:1)\nB = linear(A:1)\n"))); // cycle
    CHECK_THROWS(validate_scm(parse_scm("A = linear(Ghost:1)\n")));              // unknown parent
    // table rows must cover every parent combination
    CHECK_THROWS(validate_scm(parse_scm("B = logistic(intercept:0)\n"
                                        "X = table(B, r0:0.5/0.5)\n")));
    CHECK_NOTHROW(validate_scm(parse_scm("B = logistic(intercept:0)\n"
                                         "X = table(B, r0:0.5/0.5, r1:0.9/0.1)\n")));
    CHECK_NOTHROW(validate_scm(parse_scm(kScm)));
}

TEST_CASE("sampling is deterministic and type-correct") {
    ScmSpec scm = parse_scm(kScm);
    Dataset a = sample_scm(scm, 500, 11);
    Dataset b = sample_scm(scm, 500, 11);
    Dataset c = sample_scm(scm, 500, 12);
    CHECK((a.values.array() == b.values.array()).all());
    CHECK_FALSE((a.values.array() == c.values.array()).all());
    CHECK(a.names == std::vector<std::string>{"C", "T", "M", "Y"});
    CHECK(a.type_of("T").kind == ColumnKind::Binary);
    CHECK(a.type_of("M").kind == ColumnKind::Ordinal);

    int tcol = a.column_index("T");
    for (Eigen::Index i = 0; i < a.n_rows(); ++i) {
        double t = a.values(i, tcol);
        CHECK((t == 0.0 || t == 1.0));
        double m = a.values(i, a.column_index("M"));
        CHECK((m == 0.0 || m == 1.0 || m == 2.0));
    }
}

TEST_CASE("mechanisms compute what they claim") {
    // no noise anywhere: Y is an exact function of its parents
    ScmSpec det = parse_scm("X = linear(intercept:2)\n"
                            "Y = polynomial(X:1.5, X^2:0.25, intercept:-1)\n");
    Dataset d = sample_scm(det, 3, 1);
    CHECK(d.values(0, 0) == doctest::Approx(2.0));
    CHECK(d.values(0, 1) == doctest::Approx(-1.0 + 1.5 * 2.0 + 0.25 * 4.0));

    // threshold counts cutpoints below the score
    ScmSpec th = parse_scm("X = linear(intercept:0.7)\n"
                           "Z = threshold(X:1.0, cut:0.25, cut:0.5, cut:2.0)\n");
    Dataset dt = sample_scm(th, 1, 1);
    CHECK(dt.values(0, 1) == 2.0); // 0.7 clears cuts at 0.25 and 0.5

    // uniform noise stays inside its bounds
    ScmSpec un = parse_scm("U = linear(intercept:10) + uniform(-0.5, 0.5)\n");
    Dataset du = sample_scm(un, 2000, 3);
    CHECK(du.values.col(0).minCoeff() >= 9.5);
    CHECK(du.values.col(0).maxCoeff() <= 10.5);
    CHECK(du.values.col(0).mean() == doctest::Approx(10.0).epsilon(0.01));

    // logistic rate matches its intercept-only probability
    ScmSpec lg = parse_scm("B = logistic(intercept:1.0)\n");
    Dataset db = sample_scm(lg, 20000, 4);
    CHECK(db.values.col(0).mean() == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(0.03));

    // table rows are looked up by parent level
    ScmSpec tb = parse_scm("B = logistic(intercept:-20)\n" // B is 0 essentially always
                           "X = table(B, r0:0/1, r1:1/0)\n");
    Dataset dtb = sample_scm(tb, 200, 5);
    CHECK(dtb.values.col(1).mean() == doctest::Approx(1.0));
}

TEST_CASE("interventions only touch descendants") {
    ScmSpec scm = parse_scm(kScm);
    ScmSpec cut = intervene(scm, {{"T", 1.0}});
    CHECK(cut.node("T").mech.kind == MechanismKind::Constant);
    CHECK(cut.node("T").parents.empty());
    // the forced column keeps its observational type
    Dataset d = sample_scm(cut, 50, 9);
    CHECK(d.type_of("T").kind == ColumnKind::Binary);
    CHECK(d.values.col(d.column_index("T")).minCoeff() == 1.0);

    // common random numbers: non-descendants of T are untouched
    Dataset obs = sample_scm(scm, 200, 9);
    CHECK((d.values.col(d.column_index("C")).head(50).array() ==
           obs.values.col(obs.column_index("C")).head(50).array())
              .all());

    CHECK_THROWS(intervene(scm, {{"Ghost", 1.0}}));
    CHECK_THROWS(sample_scm(intervene(scm, {{"T", 7.0}}), 10, 1)); // off the binary grid
}

TEST_CASE("true_effect recovers linear path coefficients exactly") {
    ScmSpec scm = parse_scm(kScm);
    // additive noise cancels under common random numbers; direct effect T->Y is 1.2
    TrueEffect te = true_effect(scm, "T", 1.0, 0.0, "Y", 5000, 21);
    CHECK(te.effect == doctest::Approx(1.2).epsilon(1e-9));
    CHECK(te.mc_se <= 1e-9);

    // mediated chain: effect multiplies along T -> M -> Y
    ScmSpec chain = parse_scm("T = logistic(intercept:0)\n"
                              "M = linear(T:0.5) + gaussian(1)\n"
                              "Y = linear(M:2.0) + gaussian(1)\n");
    TrueEffect tc = true_effect(chain, "T", 1.0, 0.0, "M", 5000, 21);
    CHECK(tc.effect == doctest::Approx(0.5).epsilon(1e-9));
    TrueEffect ty = true_effect(chain, "T", 1.0, 0.0, "Y", 5000, 21);
    CHECK(ty.effect == doctest::Approx(1.0).epsilon(1e-9));
}
