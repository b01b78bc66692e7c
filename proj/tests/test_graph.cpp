#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "causal/graph.hpp"
#include "support.hpp"

using namespace causal;

namespace {

CausalGraph fig_graph() {
    // T <- C -> Y with a plausibility-0.7 confounding arc and a mediator M
    return parse_graph("node T\nnode Y\nnode C\nnode M\n"
                       "C -> T\nC -> Y\nC <-> Y 0.7\nT -> M\nM -> Y\n");
}

} // namespace

TEST_CASE("graph construction and queries") {
    CausalGraph g = fig_graph();
    CHECK(g.num_nodes() == 4);
    CHECK(g.has_directed("C", "T"));
    CHECK_FALSE(g.has_directed("T", "C"));
    CHECK(g.has_bidirected("C", "Y"));
    CHECK(g.has_bidirected("Y", "C"));
    CHECK(g.bidirected_plausibility("C", "Y") == doctest::Approx(0.7));
    CHECK(g.parents("Y") == std::vector<std::string>{"C", "M"});
    CHECK(g.children("C") == std::vector<std::string>{"T", "Y"});
    CHECK(g.ancestors("Y") == std::vector<std::string>{"T", "C", "M"});
    CHECK(g.descendants("T") == std::vector<std::string>{"Y", "M"});
    CHECK(g.num_directed() == 4);
}

TEST_CASE("graph validation") {
    CausalGraph g;
    g.add_node("A");
    g.add_node("B");
    CHECK_THROWS(g.add_node("A"));
    CHECK_THROWS(g.add_directed("A", "A"));
    CHECK_THROWS(g.add_directed("A", "Zed"));
    CHECK_THROWS(g.add_bidirected("A", "B", 0.0));
    CHECK_THROWS(g.add_bidirected("A", "B", 1.2));
    g.add_bidirected("A", "B", 1.0);
    CHECK_THROWS(g.add_bidirected("B", "A", 0.5)); // duplicate arc
    g.add_directed("A", "B");
    CHECK_THROWS(g.add_directed("A", "B"));
}

TEST_CASE("parse and serialize round-trip") {
    CausalGraph g = fig_graph();
    CausalGraph h = parse_graph(serialize_graph(g));
    CHECK(g == h);
    CHECK(serialize_graph(g) == serialize_graph(h));

    CHECK_THROWS(parse_graph("node A\nnode B\nA -> B 0.9\n"));   // directed edges are certain
    CHECK_THROWS(parse_graph("node A\nnode B\nA <-> B\n"));      // bidirected needs plausibility
    CHECK_THROWS(parse_graph("node A\nnode B\nA <-> B 0\n"));
    CHECK_THROWS(parse_graph("edge A B\n"));
    CHECK(parse_graph("node A # trailing\n\n# comment line\n").num_nodes() == 1);
}

TEST_CASE("cycle detection with witness") {
    CausalGraph g = parse_graph("node A\nnode B\nnode C\nA -> B\nB -> C\nC -> A\n");
    CycleCheck c = is_acyclic(g);
    CHECK_FALSE(c.acyclic);
    CHECK(c.cycle.size() >= 3);
    CHECK(is_acyclic(fig_graph()).acyclic);
    CHECK(is_acyclic(fig_graph()).cycle.empty());
}

TEST_CASE("d-separation on the classic motifs") {
    CausalGraph chain = parse_graph("node A\nnode B\nnode C\nA -> B\nB -> C\n");
    CHECK_FALSE(d_separated(chain, {"A"}, {"C"}, {}));
    CHECK(d_separated(chain, {"A"}, {"C"}, {"B"}));

    CausalGraph fork = parse_graph("node A\nnode B\nnode C\nB -> A\nB -> C\n");
    CHECK_FALSE(d_separated(fork, {"A"}, {"C"}, {}));
    CHECK(d_separated(fork, {"A"}, {"C"}, {"B"}));

    CausalGraph collider = parse_graph("node A\nnode B\nnode C\nnode D\nA -> B\nC -> B\nB -> D\n");
    CHECK(d_separated(collider, {"A"}, {"C"}, {}));
    CHECK_FALSE(d_separated(collider, {"A"}, {"C"}, {"B"}));
    CHECK_FALSE(d_separated(collider, {"A"}, {"C"}, {"D"})); // descendant of a collider opens it

    // bidirected edge behaves exactly like a hidden common cause
    CausalGraph conf = parse_graph("node A\nnode B\nA <-> B 0.4\n");
    CHECK_FALSE(d_separated(conf, {"A"}, {"B"}, {}));

    CausalGraph bi_collider = parse_graph("node A\nnode B\nnode C\nA <-> B 0.5\nC <-> B 0.5\n");
    CHECK(d_separated(bi_collider, {"A"}, {"C"}, {}));
    CHECK_FALSE(d_separated(bi_collider, {"A"}, {"C"}, {"B"}));
}

TEST_CASE("d-separation preconditions") {
    CausalGraph g = parse_graph("node A\nnode B\nA -> B\n");
    CHECK_THROWS(d_separated(g, {"A"}, {"A"}, {}));
    CHECK_THROWS(d_separated(g, {"A"}, {"B"}, {"A"}));
    CHECK_THROWS(d_separated(g, {}, {"B"}, {}));
    CausalGraph cyc = parse_graph("node A\nnode B\nA -> B\nB -> A\n");
    CHECK_THROWS(d_separated(cyc, {"A"}, {"B"}, {}));
}

TEST_CASE("d-separation agrees with a path-enumeration oracle on random mixed graphs") {
    causal::Rng rng(91);
    int queries = 0;
    for (int rep = 0; rep < 80; ++rep) {
        int n = 3 + static_cast<int>(rng.below(4)); // 3..6 nodes
        CausalGraph g = support::random_admg(rng, n, 0.35, 0.2);
        auto names = g.nodes();
        for (int q = 0; q < 12; ++q) {
            std::vector<std::string> pool = names;
            rng.shuffle(pool);
            std::string x = pool[0], y = pool[1];
            std::vector<std::string> z;
            for (size_t i = 2; i < pool.size(); ++i)
                if (rng.uniform01() < 0.4) z.push_back(pool[i]);
            bool got = d_separated(g, {x}, {y}, z);
            bool want = support::oracle_d_separated(g, {x}, {y}, z);
            if (got != want) {
                CAPTURE(serialize_graph(g));
                CAPTURE(x);
                CAPTURE(y);
            }
            REQUIRE(got == want);
            ++queries;
        }
    }
    CHECK(queries == 960);
}

TEST_CASE("unroll replicates slices and drops only on-cycle contemporaneous edges") {
    CausalGraph g = parse_graph("node A\nnode B\nnode C\nA -> B\nB -> A\nA -> C\nA <-> B 0.6\n");
    CausalGraph u = unroll(g, 2);
    CHECK(is_acyclic(u).acyclic);
    CHECK(u.num_nodes() == 9);
    CHECK(u.has_node("A@0"));
    CHECK(u.has_node("C@2"));
    // persistence and lagged structure
    CHECK(u.has_directed("A@0", "A@1"));
    CHECK(u.has_directed("A@1", "B@2"));
    CHECK(u.has_directed("B@0", "A@1"));
    // A->B sits on a cycle: no contemporaneous copy
    CHECK_FALSE(u.has_directed("A@0", "B@0"));
    // A->C is off-cycle: contemporaneous copy kept
    CHECK(u.has_directed("A@1", "C@1"));
    CHECK(u.has_bidirected("A@1", "B@1"));
    CHECK(u.bidirected_plausibility("A@2", "B@2") == doctest::Approx(0.6));
    CHECK_THROWS(unroll(g, 0));
}

TEST_CASE("markov factorization renders in declaration-topological order") {
    CausalGraph g = parse_graph("node X\nnode Z\nnode Y\nX -> Z\nZ -> Y\nX -> Y\n");
    auto f = markov_factorization(g);
    REQUIRE(f.size() == 3);
    CHECK(f[0].child == "X");
    CHECK(f[1].child == "Z");
    CHECK(f[2].child == "Y");
    CHECK(render_factorization(f) == "P(X)·P(Z|X)·P(Y|Z,X)");

    CHECK_THROWS(markov_factorization(fig_graph())); // bidirected edges have no DAG factorization
    CHECK_THROWS(markov_factorization(parse_graph("node A\nnode B\nA -> B\nB -> A\n")));
}

TEST_CASE("latent projection composes arcs through dropped nodes") {
    CausalGraph chain = parse_graph("node A\nnode U\nnode B\nA -> U\nU -> B\n");
    CausalGraph p1 = latent_project(chain, {"A", "B"});
    CHECK(p1.has_directed("A", "B"));
    CHECK(p1.bidirected().empty());

    CausalGraph fork = parse_graph("node A\nnode U\nnode B\nU -> A\nU -> B\n");
    CausalGraph p2 = latent_project(fork, {"A", "B"});
    CHECK(p2.has_bidirected("A", "B"));
    CHECK(p2.bidirected_plausibility("A", "B") == doctest::Approx(1.0));
    CHECK(p2.num_directed() == 0);

    // weights multiply along the generating path
    CausalGraph mixed = parse_graph("node A\nnode U\nnode B\nA <-> U 0.8\nU -> B\n");
    CausalGraph p3 = latent_project(mixed, {"A", "B"});
    CHECK(p3.has_bidirected("A", "B"));
    CHECK(p3.bidirected_plausibility("A", "B") == doctest::Approx(0.8));

    // colliders at the dropped node do not connect
    CausalGraph coll = parse_graph("node A\nnode U\nnode B\nA -> U\nB -> U\n");
    CausalGraph p4 = latent_project(coll, {"A", "B"});
    CHECK(p4.num_directed() == 0);
    CHECK(p4.bidirected().empty());

    // d-separation statements over kept nodes are preserved
    causal::Rng rng(17);
    for (int rep = 0; rep < 40; ++rep) {
        CausalGraph g = support::random_admg(rng, 5, 0.35, 0.15);
        auto names = g.nodes();
        std::vector<std::string> keep = {names[0], names[1], names[2], names[3]};
        CausalGraph proj = latent_project(g, keep);
        for (int q = 0; q < 6; ++q) {
            std::vector<std::string> pool = keep;
            rng.shuffle(pool);
            std::vector<std::string> z;
            for (size_t i = 2; i < pool.size(); ++i)
                if (rng.uniform01() < 0.5) z.push_back(pool[i]);
            bool orig = d_separated(g, {pool[0]}, {pool[1]}, z);
            bool projected = d_separated(proj, {pool[0]}, {pool[1]}, z);
            REQUIRE(orig == projected);
        }
    }
}

TEST_CASE("graph plausibility products") {
    CausalGraph g = parse_graph("node A\nnode B\nnode C\nA -> B\nA <-> B 0.9\nB <-> C 0.4\n");
    PlausibilityRatio r0 = graph_plausibility(g, {});
    CHECK(r0.full == doctest::Approx(0.36).epsilon(1e-15));
    CHECK(r0.subgraph == doctest::Approx(0.36).epsilon(1e-15));
    CHECK(r0.ratio == 1.0);

    PlausibilityRatio r1 = graph_plausibility(g, {{"B", "C"}});
    CHECK(r1.subgraph == doctest::Approx(0.9 * 0.6).epsilon(1e-15));
    CHECK(r1.ratio == doctest::Approx(0.6 / 0.4).epsilon(1e-12));

    PlausibilityRatio r2 = graph_plausibility(g, {{"C", "B"}, {"A", "B"}});
    CHECK(r2.subgraph == doctest::Approx(0.1 * 0.6).epsilon(1e-15));

    CHECK_THROWS(graph_plausibility(g, {{"A", "C"}})); // no such arc
}
