#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "causal/dataset.hpp"

using namespace causal;

namespace {

const char* kCsv = "age,smokes,dose,bp\n"
                   "52,1,2,120.5\n"
                   "61,0,0,135.2\n"
                   "47,1,1,\n"
                   "NA,0,2,118.0\n"
                   "58,1,1,141.7\n";

} // namespace

TEST_CASE("type inference from data") {
    Dataset ds = parse_csv(kCsv);
    CHECK(ds.n_rows() == 5);
    CHECK(ds.n_cols() == 4);
    CHECK(ds.type_of("smokes").kind == ColumnKind::Binary);
    CHECK(ds.level_count("smokes") == 2);
    CHECK(ds.type_of("dose").kind == ColumnKind::Ordinal);
    CHECK(ds.level_count("dose") == 3);
    CHECK(ds.type_of("bp").kind == ColumnKind::Continuous);
    // few distinct non-negative integers read as ordinal, not continuous
    CHECK(ds.type_of("age").kind == ColumnKind::Ordinal);
}

TEST_CASE("schema overrides inference") {
    Schema schema = parse_schema("age = continuous\ndose = categorical(3)\n# comment\n");
    Dataset ds = parse_csv(kCsv, schema);
    CHECK(ds.type_of("age").kind == ColumnKind::Continuous);
    CHECK(ds.type_of("dose").kind == ColumnKind::Categorical);
    CHECK(ds.level_count("dose") == 3);

    CHECK_THROWS_WITH_AS(parse_csv(kCsv, parse_schema("nope = binary\n")),
                         doctest::Contains("unknown column"), std::runtime_error);
    CHECK_THROWS(parse_schema("x = categorical(1)\n"));
    CHECK_THROWS(parse_schema("x = fancy\n"));
    CHECK_THROWS(parse_schema("just a name\n"));
}

TEST_CASE("missing cells populate the observed mask") {
    Dataset ds = parse_csv(kCsv);
    CHECK(ds.missing_count("bp") == 1);
    CHECK(ds.missing_count("age") == 1);
    CHECK(ds.missing_count("smokes") == 0);
    CHECK(ds.any_missing());
    CHECK_FALSE(ds.observed(2, ds.column_index("bp")));
    CHECK(std::isnan(ds.values(2, ds.column_index("bp"))));
}

TEST_CASE("csv validation errors") {
    CHECK_THROWS(parse_csv(""));
    CHECK_THROWS(parse_csv("a,b\n1\n"));          // ragged row
    CHECK_THROWS(parse_csv("a\nfoo\n"));          // non-numeric cell
    CHECK_THROWS(parse_csv("a,a\n1,2\n"));        // duplicate column
    CHECK_THROWS(parse_csv("a\n1.5\n", parse_schema("a = binary\n"))); // off the level grid
    CHECK_THROWS(parse_csv("a\n3\n", parse_schema("a = categorical(2)\n")));
}

TEST_CASE("write and re-read preserves values and gaps") {
    Dataset ds = parse_csv(kCsv, parse_schema("age = continuous\n"));
    Dataset back = parse_csv(write_csv(ds), parse_schema("age = continuous\n"));
    CHECK(back.names == ds.names);
    for (Eigen::Index i = 0; i < ds.n_rows(); ++i)
        for (Eigen::Index j = 0; j < ds.n_cols(); ++j) {
            CHECK(back.observed(i, j) == ds.observed(i, j));
            if (ds.observed(i, j)) CHECK(back.values(i, j) == ds.values(i, j));
        }
}

TEST_CASE("rescale and unscale") {
    Dataset ds = parse_csv("y\n2\n6\n4\n", parse_schema("y = continuous\n"));
    Dataset r = rescale_column(ds, "y");
    int j = r.column_index("y");
    CHECK(r.values(0, j) == doctest::Approx(0.0));
    CHECK(r.values(1, j) == doctest::Approx(1.0));
    CHECK(r.values(2, j) == doctest::Approx(0.5));
    REQUIRE(r.rescaled.count("y") == 1);
    CHECK(r.rescaled.at("y").lo == doctest::Approx(2.0));
    CHECK(r.rescaled.at("y").hi == doctest::Approx(6.0));
    // a [0,1] effect stretches back by the range
    CHECK(unscale_effect(r.rescaled.at("y"), 0.5) == doctest::Approx(2.0));
    CHECK(unscale_effect({0.0, 1.0}, 0.37) == doctest::Approx(0.37));
}

TEST_CASE("make_censoring appends an indicator and imputes") {
    Dataset ds = parse_csv(kCsv, parse_schema("age = continuous\n"));

    Dataset c = make_censoring(ds, "bp");
    REQUIRE(c.has_column("Q_bp"));
    CHECK(c.type_of("Q_bp").kind == ColumnKind::Binary);
    CHECK(c.missing_count("bp") == 0);
    int q = c.column_index("Q_bp");
    CHECK(c.values(2, q) == 0.0);
    CHECK(c.values(0, q) == 1.0);
    double mean_obs = (120.5 + 135.2 + 118.0 + 141.7) / 4.0;
    CHECK(c.values(2, c.column_index("bp")) == doctest::Approx(mean_obs));

    // ordinal imputation stays on the level grid
    Dataset ord = parse_csv("d\n0\n2\n2\nNA\n", parse_schema("d = ordinal(3)\n"));
    Dataset co = make_censoring(ord, "d");
    double fill = co.values(3, co.column_index("d"));
    CHECK(fill == std::round(fill));
    CHECK(fill == doctest::Approx(1.0)); // round(4/3)

    // binary imputation takes the mode
    Dataset bin = parse_csv("b\n1\n1\n0\nNA\n");
    Dataset cb = make_censoring(bin, "b");
    CHECK(cb.values(3, cb.column_index("b")) == 1.0);

    CHECK_THROWS(make_censoring(ds, "smokes"));   // nothing missing
    CHECK_THROWS(make_censoring(c, "bp"));        // Q_bp already exists
}

TEST_CASE("take_rows subsets in order") {
    Dataset ds = parse_csv(kCsv);
    Dataset sub = take_rows(ds, {4, 0, 0});
    CHECK(sub.n_rows() == 3);
    CHECK(sub.values(0, ds.column_index("bp")) == doctest::Approx(141.7));
    CHECK(sub.values(1, ds.column_index("bp")) == doctest::Approx(120.5));
    CHECK(sub.values(2, ds.column_index("bp")) == doctest::Approx(120.5));
}
