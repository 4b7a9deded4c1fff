#include <doctest.h>

#include <random>

#include "ivs/log.hpp"
#include "ivs/machine.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace ivs;

namespace {

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

std::vector<Label> state_cells_of(const HybridSection& s) {
    std::vector<Label> out;
    for (const auto& c : s.cells()) {
        out.push_back(*std::get<ConstantFlow>(c.flow).label);
    }
    return out;
}

}  // namespace

TEST_CASE("lts machine: executor folds events through the transition map") {
    Machine m = lts_machine(avoidance_lts());
    HybridSection input = make_lts_input(avoidance_lts(), {"l3", "l3", "l4"}, false);
    CHECK(input.length() == Rational(4));
    HybridSection state = m.run(input, Rational(4));
    CHECK(state_cells_of(state) ==
          std::vector<Label>{"level", "climb", "climb", "level"});
    // transitions at 1, 2, 3; identity boundaries
    CHECK(state.edges().front().identity);
    CHECK(state.edges().back().identity);
    CHECK_FALSE(state.edges()[1].identity);
    CHECK(state.edges()[1].time == Rational(1));
    CHECK(state.edges()[1].tag == std::vector<Label>({"l3", "level"}));

    // input consistency: pushing the state through the input map gives back
    // exactly the consumed input
    CHECK(m.to_input.apply(state).equivalent(input.canonicalize()));
}

TEST_CASE("lts machine: events outside the transition domain are an error") {
    Machine m = lts_machine(avoidance_lts());
    // l4 has no transition from 'level'
    HybridSection input = make_lts_input(avoidance_lts(), {"l4"}, false);
    CHECK_THROWS_AS(m.run(input, Rational(2)), DomainError);
}

TEST_CASE("lts machine: horizon is truncated to whole periods with a warning") {
    std::vector<std::string> warnings;
    set_warning_handler([&](const std::string& w) { warnings.push_back(w); });
    Machine m = lts_machine(avoidance_lts());
    HybridSection input = make_lts_input(avoidance_lts(), {"l1", "l1"}, false);
    HybridSection state = m.run(input, Rational(5, 2));
    set_warning_handler(nullptr);
    CHECK(state.length() == Rational(2));
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("truncated") != std::string::npos);

    // horizon 0 gives the zero-length initial edge
    HybridSection zero = m.run(input, Rational(0));
    CHECK(zero.is_point());
    CHECK(zero.edges()[0].identity);
    CHECK(*zero.edges()[0].source.label == "level");
}

TEST_CASE("lts machine: output map applies the output alphabet pairwise") {
    Machine m = lts_machine(avoidance_lts());
    HybridSection input = make_lts_input(avoidance_lts(), {"l3", "l4"}, true);
    HybridSection state = m.run(input, Rational(2));
    HybridSection out = m.to_output.apply(state);

    // transition on l3 from level: output pair (level, climb) at t=0
    CHECK_FALSE(out.edges().front().identity);
    CHECK(out.edges().front().tag == std::vector<Label>({"level", "climb"}));
    // vertex cells carry the observed maneuver with the phase kept
    CHECK(state_cells_of(out) == std::vector<Label>{"climb", "level"});
    CHECK(*std::get<ConstantFlow>(out.cells()[0].flow).phase0 == Rational(0));
}

TEST_CASE("lts machine: executor output pushed through the output map is a valid run") {
    std::mt19937 rng(101);
    LtsSpec spec = avoidance_lts();
    Machine m = lts_machine(spec);
    for (int trial = 0; trial < 30; ++trial) {
        auto events = gen::random_lts_events(rng, spec, 6);
        HybridSection input = make_lts_input(spec, events, false);
        HybridSection state = m.run(input, input.length());
        HybridSection out = m.to_output.apply(state);
        CHECK(m.output_sheaf->member(out));

        // consecutive output pairs agree with the folded transitions
        Label s = spec.initial;
        std::size_t jumps_seen = 0;
        for (const auto& e : out.edges()) {
            if (e.identity) continue;
            Label expect_from = spec.output_of(s);
            s = *spec.transition(events[jumps_seen], s);
            CHECK(e.tag == std::vector<Label>({expect_from, spec.output_of(s)}));
            ++jumps_seen;
        }
        CHECK(jumps_seen == events.size());
    }
}

TEST_CASE("lts machine: input and output maps commute with restriction and gluing") {
    std::mt19937 rng(103);
    LtsSpec spec = avoidance_lts();
    Machine m = lts_machine(spec);
    for (int trial = 0; trial < 25; ++trial) {
        auto events = gen::random_lts_events(rng, spec, 5);
        HybridSection input = make_lts_input(spec, events, trial % 2 == 0);
        HybridSection state = m.run(input, input.length());

        Rational a = gen::random_cut(rng, state.length());
        Rational b = gen::random_cut(rng, state.length());
        if (b < a) std::swap(a, b);

        for (const auto& morph : {m.to_input, m.to_output}) {
            HybridSection mapped = morph.apply(state);
            CHECK(morph.apply(state.restrict(a, b)).equivalent(mapped.restrict(a, b)));

            HybridSection left = state.restrict(Rational(0), a);
            HybridSection right = state.restrict(a, state.length());
            HybridSection glued_then_mapped =
                morph.apply(HybridSection::glue(left, right));
            HybridSection mapped_then_glued =
                HybridSection::glue(morph.apply(left), morph.apply(right));
            CHECK(glued_then_mapped.equivalent(mapped_then_glued));
        }
    }
}

TEST_CASE("cds machine: zero dynamics hold the state constant") {
    LinearCds cds;
    cds.sys.A = Eigen::MatrixXd::Zero(1, 1);
    cds.sys.B = Eigen::MatrixXd::Zero(1, 1);
    cds.sys.C = Eigen::MatrixXd::Identity(1, 1);
    cds.x0 = Eigen::VectorXd::Constant(1, 3.25);
    Machine m = cds_machine(cds, Rational(1, 4));
    HybridSection input = make_piecewise_input({{1.0, Rational(2)}, {-1.0, Rational(1)}});
    HybridSection state = m.run(input, Rational(3));
    auto end = state.endpoint(Side::Right);
    CHECK((*end.value.state)[0] == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("cds machine: a pure integrator accumulates its input") {
    LinearCds cds;
    cds.sys.A = Eigen::MatrixXd::Zero(1, 1);
    cds.sys.B = Eigen::MatrixXd::Identity(1, 1);
    cds.sys.C = Eigen::MatrixXd::Identity(1, 1);
    cds.x0 = Eigen::VectorXd::Constant(1, 0.5);
    Machine m = cds_machine(cds, Rational(1, 8));
    HybridSection input = make_piecewise_input({{0.25, Rational(1)}});
    HybridSection state = m.run(input, Rational(1));
    CHECK((*state.endpoint(Side::Right).value.state)[0] ==
          doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("cds machine: closed form matches a fine-step integrator") {
    std::mt19937 rng(107);
    for (int trial = 0; trial < 5; ++trial) {
        auto sysp = gen::random_stable_system(rng, 4);
        LinearCds cds;
        cds.sys = *sysp;
        cds.x0 = Eigen::VectorXd::Zero(4);
        Machine m = cds_machine(cds, Rational(1, 4));

        std::uniform_real_distribution<double> level(-1.0, 1.0);
        std::vector<std::pair<double, Duration>> runs;
        for (int k = 0; k < 6; ++k) runs.push_back({level(rng), Rational(1)});
        HybridSection input = make_piecewise_input(runs);
        HybridSection state = m.run(input, Rational(6));

        Eigen::VectorXd x = cds.x0;
        for (const auto& [u, len] : runs) {
            x = oracle::rk4(cds.sys, x, Eigen::VectorXd::Constant(1, u), len.to_double(), 4000);
        }
        Eigen::VectorXd got = *state.endpoint(Side::Right).value.state;
        CHECK((got - x).norm() / std::max(1.0, x.norm()) < 1e-9);
    }
}

TEST_CASE("cds machine: input map recovers the consumed input") {
    std::mt19937 rng(109);
    auto sysp = gen::random_stable_system(rng, 3);
    LinearCds cds;
    cds.sys = *sysp;
    cds.x0 = Eigen::VectorXd::Ones(3);
    Machine m = cds_machine(cds, Rational(1, 4));
    HybridSection input =
        make_piecewise_input({{0.5, Rational(1)}, {-0.5, Rational(3, 2)}, {0.25, Rational(1, 2)}});
    HybridSection state = m.run(input, Rational(3));
    CHECK(m.to_input.apply(state).equivalent(input.canonicalize()));

    // readout is C x sample-wise
    HybridSection out = m.to_output.apply(state);
    CHECK(m.output_sheaf->member(out));
    for (const auto& c : out.cells()) {
        CHECK(std::get<SampledFlow>(c.flow).samples.cols() == 1);
    }
}

TEST_CASE("cds machine: residual of the executed section satisfies the dynamics") {
    std::mt19937 rng(113);
    auto sysp = gen::random_stable_system(rng, 2);
    LinearCds cds;
    cds.sys = *sysp;
    cds.x0 = Eigen::VectorXd::Constant(2, 0.3);
    Machine m = cds_machine(cds, Rational(1, 8));
    HybridSection input = make_piecewise_input({{0.8, Rational(2)}, {-0.2, Rational(2)}});
    HybridSection state = m.run(input, Rational(4));

    // central finite differences of x against Ax + Bu at interior grid points
    const double h = 1e-6;
    Duration start(0);
    for (const auto& cell : state.cells()) {
        const auto& f = std::get<AffineFlow>(cell.flow);
        for (double t = 0.125; t < cell.length.to_double() - 0.124; t += 0.125) {
            Eigen::VectorXd xm = f.state_at(t - h);
            Eigen::VectorXd xp = f.state_at(t + h);
            Eigen::VectorXd fd = (xp - xm) / (2 * h);
            Eigen::VectorXd rhs = cds.sys.A * f.state_at(t) + cds.sys.B * f.u;
            CHECK((fd - rhs).norm() / std::max(1.0, rhs.norm()) < 1e-4);
        }
        start += cell.length;
    }
}

TEST_CASE("map machine: identity map passes sections through") {
    LtsSpec spec = avoidance_lts();
    Machine lts = lts_machine(spec);
    Machine id = map_machine("noop", lts.output_sheaf, lts.output_sheaf,
                             identity_morphism(lts.output_sheaf->describe()));
    HybridSection input = make_lts_input(spec, {"l3", "l4"}, true);
    HybridSection out = lts.to_output.apply(lts.run(input, Rational(2)));
    HybridSection mapped = id.to_output.apply(id.run(out, Rational(2)));
    CHECK(mapped.equivalent(out.canonicalize()));
}

TEST_CASE("linear cds json round-trip") {
    LinearCds cds;
    cds.sys.A = Eigen::MatrixXd::Zero(2, 2);
    cds.sys.A << 0, 1, -1, -0.5;
    cds.sys.B = Eigen::MatrixXd::Zero(2, 1);
    cds.sys.B << 0, 1;
    cds.sys.C = Eigen::MatrixXd::Zero(1, 2);
    cds.sys.C << 1, 0;
    cds.x0 = Eigen::VectorXd::Zero(2);
    LinearCds back = LinearCds::from_json_text(cds.to_json_text());
    CHECK(back.sys.A == cds.sys.A);
    CHECK(back.sys.B == cds.sys.B);
    CHECK(back.sys.C == cds.sys.C);
    CHECK(back.x0 == cds.x0);

    CHECK_THROWS_AS(LinearCds::from_json_text("{\"dim\": 2, \"inputs\": 1, \"outputs\": 1, "
                                              "\"A\": [1], \"B\": [1,1], \"C\": [1,0], "
                                              "\"x0\": [0,0]}"),
                    ConfigError);
}
