#include <doctest.h>

#include <random>
#include <set>

#include "ivs/graph.hpp"
#include "ivs/lts_spec.hpp"
#include "support/oracles.hpp"

using namespace ivs;

namespace {

// The collision-avoidance transition system, written out by hand so the
// graph tests do not depend on the higher-level builders.
LtsSpec avoidance_lts() {
    LtsSpec s;
    s.states = {"level", "climb", "descend"};
    s.initial = "level";
    s.inputs = {"l1", "l2", "l3", "l4", "l5"};
    s.outputs = {"level", "climb", "descend"};
    s.transitions[{"l1", "level"}] = "level";
    s.transitions[{"l2", "level"}] = "descend";
    s.transitions[{"l3", "level"}] = "climb";
    s.transitions[{"l3", "climb"}] = "climb";
    s.transitions[{"l4", "climb"}] = "level";
    s.transitions[{"l5", "climb"}] = "level";
    s.transitions[{"l2", "descend"}] = "descend";
    s.transitions[{"l4", "descend"}] = "level";
    s.transitions[{"l5", "descend"}] = "level";
    s.output_map = {{"level", "level"}, {"climb", "climb"}, {"descend", "descend"}};
    s.period = Rational(1);
    return s;
}

}  // namespace

TEST_CASE("graphs: loop graph") {
    Graph g = loop_graph({"l1", "l2", "l3", "l4", "l5"});
    CHECK(g.vertices().size() == 1);
    CHECK(g.edges().size() == 5);
    CHECK(paths_of_length(g, 2).size() == 25);  // 5^2 by direct count

    Graph one = loop_graph({"a"});
    CHECK(one.edges().size() == 1);
    for (unsigned n = 0; n <= 4; ++n) CHECK(paths_of_length(one, n).size() == 1);

    CHECK_THROWS_AS(loop_graph({}), Error);

    std::mt19937 rng(3);
    for (int m = 1; m <= 5; ++m) {
        std::vector<Label> labels;
        for (int i = 0; i < m; ++i) labels.push_back("x" + std::to_string(i));
        Graph lg = loop_graph(labels);
        for (unsigned n = 0; n <= 5; ++n) {
            CHECK(paths_of_length(lg, n).size() == oracle::count_paths(lg, n));
        }
    }
}

TEST_CASE("graphs: complete graph") {
    Graph k3 = complete_graph({"level", "climb", "descend"});
    CHECK(k3.vertices().size() == 3);
    CHECK(k3.edges().size() == 9);
    CHECK(paths_of_length(k3, 2).size() == 27);  // 3*3*3

    Graph k1 = complete_graph({"only"});
    CHECK(k1.vertices().size() == 1);
    CHECK(k1.edges().size() == 1);
}

TEST_CASE("graphs: zero-length paths are the vertices") {
    std::mt19937 rng(5);
    for (int i = 0; i < 20; ++i) {
        Graph g = oracle::random_graph(rng);
        auto p0 = paths_of_length(g, 0);
        CHECK(p0.size() == g.vertices().size());
        for (const auto& p : p0) CHECK(p.steps.empty());
    }
}

TEST_CASE("graphs: transition graph of the avoidance system") {
    Graph g = transition_graph(avoidance_lts());
    CHECK(g.vertices().size() == 3);
    CHECK(g.edges().size() == 9);

    auto expect_edge = [&](const std::string& id, const std::string& src,
                           const std::string& tgt) {
        const auto* e = g.find_edge(id);
        REQUIRE(e != nullptr);
        CHECK(e->src == src);
        CHECK(e->tgt == tgt);
    };
    expect_edge("(l1,level)", "level", "level");
    expect_edge("(l2,level)", "level", "descend");
    expect_edge("(l3,level)", "level", "climb");
    expect_edge("(l3,climb)", "climb", "climb");
    expect_edge("(l4,climb)", "climb", "level");
    expect_edge("(l5,climb)", "climb", "level");
    expect_edge("(l2,descend)", "descend", "descend");
    expect_edge("(l4,descend)", "descend", "level");
    expect_edge("(l5,descend)", "descend", "level");

    // each of the 3 edges out of 'level' lands on a state with out-degree 3
    CHECK(paths_of_length(g, 2, std::string("level")).size() == 9);

    // runs of length 3 from the initial state, counted by folding the
    // transition map over all input triples
    const LtsSpec lts = avoidance_lts();
    std::set<std::vector<std::string>> runs;
    for (const auto& a : lts.inputs) {
        for (const auto& b : lts.inputs) {
            for (const auto& c : lts.inputs) {
                std::vector<std::string> run;
                Label s = lts.initial;
                bool ok = true;
                for (const auto& l : {a, b, c}) {
                    auto next = lts.transition(l, s);
                    if (!next) {
                        ok = false;
                        break;
                    }
                    run.push_back("(" + l + "," + s + ")");
                    s = *next;
                }
                if (ok) runs.insert(run);
            }
        }
    }
    CHECK(paths_of_length(g, 3, std::string("level")).size() == runs.size());
}

TEST_CASE("graphs: single state, single label") {
    LtsSpec s;
    s.states = {"s"};
    s.initial = "s";
    s.inputs = {"a"};
    s.outputs = {"o"};
    s.transitions[{"a", "s"}] = "s";
    s.output_map = {{"s", "o"}};
    s.period = Rational(1);
    Graph g = transition_graph(s);
    CHECK(g.vertices().size() == 1);
    CHECK(g.edges().size() == 1);
    CHECK(g.edges()[0].src == g.edges()[0].tgt);
}

TEST_CASE("graphs: sub-paths and gluing") {
    Graph g;
    g.add_vertex("a");
    g.add_vertex("b");
    g.add_vertex("c");
    g.add_vertex("d");
    g.add_edge("e1", "a", "b");
    g.add_edge("e2", "b", "c");
    g.add_edge("e3", "c", "d");

    Path p{"a", {"e1", "e2", "e3"}};
    Path mid = restrict_path(g, p, 1, 1);
    CHECK(mid.start == "b");
    CHECK(mid.steps == std::vector<std::string>{"e2"});

    Path left{"a", {"e1", "e2"}};
    Path right{"c", {"e3"}};
    CHECK(glue_paths(g, left, right) == p);

    Path wrong{"b", {"e2"}};
    CHECK_THROWS_AS(glue_paths(g, left, wrong), GlueError);
}

TEST_CASE("graphs: discrete sections count matches the matrix-power oracle") {
    std::mt19937 rng(17);
    for (int i = 0; i < 50; ++i) {
        Graph g = oracle::random_graph(rng);
        for (unsigned n = 0; n <= 5; ++n) {
            CHECK(sections_as_paths(g, n).size() == oracle::count_paths(g, n));
        }
    }
}

TEST_CASE("graphs: sections round-trip to an equal graph") {
    std::mt19937 rng(23);
    for (int i = 0; i < 50; ++i) {
        Graph g = oracle::random_graph(rng);
        CHECK(graph_from_sections(g) == g);
    }
}

TEST_CASE("graphs: reflexivization adds exactly |V| self-loops") {
    std::mt19937 rng(29);
    for (int i = 0; i < 20; ++i) {
        Graph g = oracle::random_graph(rng);
        ReflexiveGraph r = reflexivize(g);
        CHECK(r.base.edges().size() == g.edges().size() + g.vertices().size());
        for (const auto& v : g.vertices()) {
            const auto* loop = r.base.find_edge(r.ids.at(v));
            REQUIRE(loop != nullptr);
            CHECK(loop->src == v);
            CHECK(loop->tgt == v);
        }
        // forgetting the designated loops leaves the original edges intact
        for (const auto& e : g.edges()) {
            CHECK(r.base.find_edge(e.id) != nullptr);
        }
    }
}
