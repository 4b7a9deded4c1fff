#include <doctest.h>

#include "ivs/contracts.hpp"
#include "ivs/machine.hpp"

using namespace ivs;

namespace {

// A command channel plus a pitch-like channel driven by a kinematic model:
// the pitch rate is directly commanded, so the strict contract holds exactly.
struct Rig {
    ChannelMap channels;
};

FlowCell label_cell(const Label& l, const Rational& phase0, const Duration& len) {
    FlowCell c;
    c.length = len;
    ConstantFlow f;
    f.label = l;
    f.phase0 = phase0;
    c.flow = f;
    return c;
}

PointValue labeled(const Label& l, const Rational& phase) {
    PointValue v;
    v.label = l;
    v.phase = phase;
    return v;
}

JumpEdge pair_edge(const Label& a, const Label& b, const Rational& tau) {
    JumpEdge e;
    e.identity = false;
    e.tag = {a, b};
    e.source = labeled(a, tau);
    e.target = labeled(b, Rational(0));
    return e;
}

// advisory: level on [0,2], climb on [2,4], level on [4,6];
// theta: slope 0, then `rate`, then 0 (continuous, piecewise linear)
Rig make_rig(double rate) {
    Rig r;
    Rational tau(1);
    std::vector<JumpEdge> edges;
    std::vector<FlowCell> cells;
    edges.push_back(identity_edge(labeled("level", Rational(0))));
    cells.push_back(label_cell("level", Rational(0), Rational(1)));
    edges.push_back(pair_edge("level", "level", tau));
    cells.push_back(label_cell("level", Rational(0), Rational(1)));
    edges.push_back(pair_edge("level", "climb", tau));
    cells.push_back(label_cell("climb", Rational(0), Rational(1)));
    edges.push_back(pair_edge("climb", "climb", tau));
    cells.push_back(label_cell("climb", Rational(0), Rational(1)));
    edges.push_back(pair_edge("climb", "level", tau));
    cells.push_back(label_cell("level", Rational(0), Rational(1)));
    edges.push_back(pair_edge("level", "level", tau));
    cells.push_back(label_cell("level", Rational(0), Rational(1)));
    edges.push_back(identity_edge(labeled("level", tau)));
    r.channels["P"] = ContractChannel{HybridSection(edges, cells), -1};

    auto theta_sys = std::make_shared<LinearSystem>();
    theta_sys->A = Eigen::MatrixXd::Zero(1, 1);
    theta_sys->B = Eigen::MatrixXd::Identity(1, 1);
    theta_sys->C = Eigen::MatrixXd::Identity(1, 1);

    std::vector<JumpEdge> tedges;
    std::vector<FlowCell> tcells;
    double theta = 0.0;
    double levels[3] = {0.0, rate, 0.0};
    Duration lens[3] = {Rational(2), Rational(2), Rational(2)};
    PointValue v0;
    v0.state = Eigen::VectorXd::Zero(1);
    v0.input = Eigen::VectorXd::Zero(1);
    tedges.push_back(identity_edge(v0));
    for (int k = 0; k < 3; ++k) {
        AffineFlow f;
        f.sys = theta_sys;
        f.x0 = Eigen::VectorXd::Constant(1, theta);
        f.u = Eigen::VectorXd::Constant(1, levels[k]);
        f.step_hint = Rational(1, 4);
        FlowCell c;
        c.length = lens[k];
        c.flow = f;
        tcells.push_back(c);
        theta += levels[k] * lens[k].to_double();
        JumpEdge e;
        e.identity = k == 2;
        e.source.state = Eigen::VectorXd::Constant(1, theta);
        e.source.input = Eigen::VectorXd::Constant(1, levels[k]);
        e.target.state = Eigen::VectorXd::Constant(1, theta);
        e.target.input = Eigen::VectorXd::Constant(1, levels[std::min(k + 1, 2)]);
        tedges.push_back(e);
    }
    r.channels["theta"] = ContractChannel{HybridSection(tedges, tcells), 0};
    return r;
}

}  // namespace

TEST_CASE("contracts: parser round-trips the pitch contract") {
    FormulaPtr f = parse_formula(
        "(P = level => deriv(theta) = 0) & (P = climb => deriv(theta) = 0.02)");
    CHECK(f->kind == Formula::Kind::And);
    CHECK(f->channels() == std::vector<std::string>({"P", "theta"}));
    FormulaPtr again = parse_formula(f->str());
    CHECK(again->str() == f->str());

    CHECK_THROWS_AS(parse_formula("P = "), ParseError);
    CHECK_THROWS_AS(parse_formula("(P = level"), ParseError);
    CHECK_THROWS_AS(parse_formula(""), ParseError);
    CHECK(parse_formula("2*theta + 1 <= 3")->kind == Formula::Kind::Compare);
    CHECK(parse_formula("!(P = climb)")->kind == Formula::Kind::Not);
}

TEST_CASE("contracts: the pitch contract holds on the commanded profile") {
    Rig rig = make_rig(0.02);
    FormulaPtr f = parse_formula(
        "(P = level => deriv(theta) = 0) & (P = climb => deriv(theta) = 0.02)");
    GridSpec grid;
    grid.density = 4;
    auto result = check(f, rig.channels, grid);
    CHECK(result.holds);

    // and it is restriction-closed, exhaustively over grid windows
    CHECK(verify_restriction_closure(f, rig.channels, grid));
}

TEST_CASE("contracts: truth and falsity") {
    Rig rig = make_rig(0.02);
    CHECK(check(Formula::truth(), rig.channels).holds);
    auto bot = check(Formula::falsity(), rig.channels);
    CHECK_FALSE(bot.holds);
    REQUIRE(bot.witness.has_value());
    CHECK(bot.witness->first == Rational(0));
    CHECK(bot.witness->second == rig.channels.at("P").section.length());
}

TEST_CASE("contracts: a perturbed pitch rate is caught with a witness inside the cell") {
    Rig rig = make_rig(0.018);  // commanded climb rate differs from the contract's
    FormulaPtr f = parse_formula("P = climb => deriv(theta) = 0.02");
    GridSpec grid;
    grid.density = 4;
    auto result = check(f, rig.channels, grid);
    CHECK_FALSE(result.holds);
    REQUIRE(result.witness.has_value());
    auto [lo, hi] = *result.witness;
    CHECK(lo >= Rational(2));
    CHECK(hi <= Rational(4));

    // the witness window re-fails in isolation
    ChannelMap cut;
    for (const auto& [name, ch] : rig.channels) {
        cut[name] = ContractChannel{ch.section.restrict(lo, hi), ch.component};
    }
    CHECK_FALSE(check(f, cut, grid).holds);
}

TEST_CASE("contracts: vacuous implication holds") {
    Rig rig = make_rig(0.02);
    // the antecedent never holds anywhere
    FormulaPtr f = parse_formula("P = descend => deriv(theta) = 99");
    CHECK(check(f, rig.channels).holds);
}

TEST_CASE("contracts: double negation does not collapse") {
    // On an event channel, the label atom fails at jump instants but holds on
    // every window inside a cell, so !!P holds while P fails.
    Rational tau(1);
    LtsSpec spec;
    spec.states = {"s"};
    spec.initial = "s";
    spec.inputs = {"go"};
    spec.outputs = {"o"};
    spec.transitions[{"go", "s"}] = "s";
    spec.output_map = {{"s", "o"}};
    spec.period = tau;
    HybridSection events = make_lts_input(spec, {"go", "go", "go"}, false);

    ChannelMap channels;
    channels["in"] = ContractChannel{events, -1};
    FormulaPtr p = Formula::eq_label("in", "*");
    GridSpec grid;
    grid.density = 3;

    auto direct = check(p, channels, grid);
    CHECK_FALSE(direct.holds);  // interior jumps carry the event label, not *
    auto doubled = check(Formula::negate(Formula::negate(p)), channels, grid);
    CHECK(doubled.holds);

    // monotonicity still holds for the double negation
    CHECK(verify_restriction_closure(Formula::negate(Formula::negate(p)), channels, grid));
}

TEST_CASE("contracts: negation witnesses point at the offending window") {
    Rig rig = make_rig(0.02);
    FormulaPtr f = Formula::negate(parse_formula("P = climb"));
    auto result = check(f, rig.channels);
    CHECK_FALSE(result.holds);
    REQUIRE(result.witness.has_value());
    CHECK(result.witness->first >= Rational(2));
    CHECK(result.witness->second <= Rational(4));
}

TEST_CASE("contracts: standalone derivative evaluation") {
    Rig rig = make_rig(0.02);
    const auto& theta = rig.channels.at("theta");
    CHECK(deriv(theta, Rational(1)) == doctest::Approx(0.0));
    CHECK(deriv(theta, Rational(3)) == doctest::Approx(0.02));
    CHECK_THROWS_AS(deriv(theta, Rational(2)), Error);  // sits on a jump

    // sampled channel: finite differences agree with the analytic slope
    SampledFlow sf;
    sf.samples.resize(5, 1);
    for (int i = 0; i < 5; ++i) sf.samples(i, 0) = 0.25 * i * 0.02;
    FlowCell cell;
    cell.length = Rational(1);
    cell.flow = sf;
    PointValue left;
    left.state = Eigen::VectorXd::Zero(1);
    PointValue right;
    right.state = Eigen::VectorXd::Constant(1, 0.02);
    HybridSection s({identity_edge(left), identity_edge(right)}, {cell});
    CHECK(deriv(ContractChannel{s, 0}, Rational(1, 2)) == doctest::Approx(0.02).epsilon(1e-4));
}

TEST_CASE("contracts: errors for undeclared channels and coarse grids") {
    Rig rig = make_rig(0.02);
    CHECK_THROWS_WITH_AS(check(parse_formula("Q = level"), rig.channels).holds,
                         doctest::Contains("undeclared channel"), Error);

    GridSpec grid;
    grid.explicit_points = std::vector<Duration>{Rational(0), Rational(6)};
    CHECK_THROWS_WITH_AS(check(parse_formula("P = level"), rig.channels, grid).holds,
                         doctest::Contains("coarser"), Error);
}

TEST_CASE("contracts: zero-length sections use the degenerate point semantics") {
    ChannelMap channels;
    channels["P"] =
        ContractChannel{HybridSection::point(identity_edge(labeled("level", Rational(0)))), -1};
    CHECK(check(parse_formula("P = level"), channels).holds);
    CHECK_FALSE(check(parse_formula("P = climb"), channels).holds);
    CHECK_FALSE(check(Formula::falsity(), channels).holds);

    // at a transition edge the label atom needs both components to match
    ChannelMap at_jump;
    at_jump["P"] = ContractChannel{HybridSection::point(pair_edge("level", "climb", Rational(1))), -1};
    CHECK_FALSE(check(parse_formula("P = level"), at_jump).holds);
    ChannelMap self_pair;
    self_pair["P"] =
        ContractChannel{HybridSection::point(pair_edge("level", "level", Rational(1))), -1};
    CHECK(check(parse_formula("P = level"), self_pair).holds);
}

TEST_CASE("contracts: monotonicity holds for a mixed formula suite") {
    Rig rig = make_rig(0.02);
    GridSpec grid;
    grid.density = 3;
    std::vector<std::string> suite = {
        "P = level => deriv(theta) = 0",
        "(P = climb => deriv(theta) = 0.02) & (P = level => deriv(theta) = 0)",
        "theta >= 0",
        "theta <= 1",
        "deriv(theta) >= 0",
        "theta >= 0 | P = descend",
        "!(P = descend)",
    };
    for (const auto& text : suite) {
        FormulaPtr f = parse_formula(text);
        auto result = check(f, rig.channels, grid);
        REQUIRE_MESSAGE(result.holds, text, " should hold; got: ", result.detail);
        CHECK_MESSAGE(verify_restriction_closure(f, rig.channels, grid), text);
    }
}
