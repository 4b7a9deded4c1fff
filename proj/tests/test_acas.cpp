#include <doctest.h>

#include <random>

#include "ivs/acas.hpp"
#include "support/oracles.hpp"

using namespace ivs;
using namespace ivs::acas;

namespace {

Scenario conflict_scenario() {
    Scenario sc;
    sc.acas.separation = 150.0;
    sc.acas.deflection = 0.02;
    sc.acas.period = Rational(1);
    sc.horizon = Rational(30);
    sc.step = Rational(1, 4);
    sc.craft[0].altitude = 10060.0;
    sc.craft[1].altitude = 10000.0;
    return sc;
}

Scenario kinematic_conflict() {
    Scenario sc = conflict_scenario();
    for (auto& c : sc.craft) {
        c.model.kind = AircraftModel::Kind::Kinematic;
        c.model.kinematic.rate = 0.02;
        c.model.kinematic.cruise = 220.0;
    }
    return sc;
}

}  // namespace

TEST_CASE("acas guard: the labeled cases") {
    AcasParams p;
    p.separation = 150.0;

    // separated exactly at the threshold keeps level flight (>= in the guard)
    CHECK(advisory_guard(p, "level", 10150.0, "level", 10000.0, true) == "l1");
    // conflict with a climbing intruder: descend
    CHECK(advisory_guard(p, "level", 10000.0, "climb", 10040.0, true) == "l2");
    // conflict with a descending intruder: climb
    CHECK(advisory_guard(p, "level", 10040.0, "descend", 10000.0, true) == "l3");
    // return guards fire at or above the threshold
    CHECK(advisory_guard(p, "climb", 10200.0, "level", 10000.0, true) == "l4");
    CHECK(advisory_guard(p, "climb", 10100.0, "level", 10000.0, true) == "l3");
    CHECK(advisory_guard(p, "descend", 9800.0, "level", 10000.0, true) == "l5");
    CHECK(advisory_guard(p, "descend", 9900.0, "level", 10000.0, true) == "l2");
    // both level in conflict: the higher climbs, ties break to the first
    CHECK(advisory_guard(p, "level", 10040.0, "level", 10000.0, true) == "l3");
    CHECK(advisory_guard(p, "level", 10000.0, "level", 10040.0, false) == "l2");
    CHECK(advisory_guard(p, "level", 10000.0, "level", 10000.0, true) == "l3");
    CHECK(advisory_guard(p, "level", 10000.0, "level", 10000.0, false) == "l2");
}

TEST_CASE("acas guard: always fires a label enabled at the current state") {
    AcasParams p;
    p.separation = 150.0;
    LtsSpec lts = advisory_lts(p);
    std::mt19937 rng(401);
    std::uniform_real_distribution<double> alt(9800.0, 10200.0);
    const std::vector<Label> maneuvers = {"level", "climb", "descend"};
    for (int trial = 0; trial < 500; ++trial) {
        Label own = maneuvers[trial % 3];
        Label intr = maneuvers[(trial / 3) % 3];
        Label fired = advisory_guard(p, own, alt(rng), intr, alt(rng), trial % 2 == 0);
        CHECK(lts.transition(fired, own).has_value());
    }
}

TEST_CASE("acas airframe: matrix structure") {
    AircraftParams p;
    LinearCds cds = longitudinal_cds(p, 10000.0);
    // theta' = q exactly
    CHECK(cds.sys.A(2, 0) == 0.0);
    CHECK(cds.sys.A(2, 1) == 1.0);
    CHECK(cds.sys.A(2, 2) == 0.0);
    CHECK(cds.sys.A(2, 3) == 0.0);
    CHECK(cds.sys.B(2, 0) == 0.0);
    // altitude reads out through C
    CHECK(cds.sys.C(0, 3) == 1.0);
    CHECK(cds.x0[3] == 10000.0);

    AircraftParams zero_speed;
    zero_speed.U0 = 0.0;
    CHECK_THROWS_AS(longitudinal_cds(zero_speed, 0.0), ConfigError);
}

TEST_CASE("acas airframe: zero input and state stay at zero; step input climbs") {
    AircraftParams p;
    LinearCds cds = longitudinal_cds(p, 0.0);
    Machine m = cds_machine(cds, Rational(1, 8));

    HybridSection quiet = m.run(make_piecewise_input({{0.0, Rational(4)}}), Rational(4));
    CHECK((*quiet.endpoint(Side::Right).value.state).norm() == doctest::Approx(0.0));

    double defl = 0.02;
    HybridSection climb = m.run(make_piecewise_input({{defl, Rational(1)}}), Rational(1));
    // altitude is monotone over the first period on the step grid
    const auto& flow = std::get<AffineFlow>(climb.cells()[0].flow);
    double prev = 0.0;
    for (int i = 1; i <= 8; ++i) {
        double h = flow.state_at(i / 8.0)[3];
        CHECK(h >= prev - 1e-12);
        prev = h;
    }
    // and the endpoint agrees with a fine-step integration
    Eigen::VectorXd expect = oracle::rk4(cds.sys, cds.x0, Eigen::VectorXd::Constant(1, defl),
                                         1.0, 10000);
    CHECK((*climb.endpoint(Side::Right).value.state - expect).norm() < 1e-9);
}

TEST_CASE("acas: steady pitch rate is positive under climb deflection") {
    AircraftParams p;
    double q_ss = steady_pitch_rate(p, 0.02);
    CHECK(q_ss > 0.0);
    // and the anti-symmetric case descends
    CHECK(steady_pitch_rate(p, -0.02) == doctest::Approx(-q_ss));
}

TEST_CASE("acas scenario: no conflict means level flight throughout") {
    Scenario sc = conflict_scenario();
    sc.craft[0].altitude = 10300.0;  // separated by twice the threshold
    sc.horizon = Rational(20);
    ScenarioResult r = run_scenario(sc);
    CHECK(r.checks.compatible);
    CHECK(r.checks.ra_iff_conflict);
    CHECK(r.checks.deflection_in_range);
    for (int i = 0; i < 2; ++i) {
        for (const auto& adv : r.advisories[i]) CHECK(adv == "level");
    }
    // altitudes never move
    auto h1 = r.channels.at("h1");
    CHECK((*h1.section.value_at(sc.horizon, Side::Left).state)[h1.component] ==
          doctest::Approx(10300.0));
    CHECK(r.all_ok());
}

TEST_CASE("acas scenario: conflict issues complementary advisories and resolves") {
    ScenarioResult r = run_scenario(conflict_scenario());
    CHECK(r.checks.compatible);
    CHECK(r.checks.ra_iff_conflict);
    CHECK(r.checks.deflection_in_range);
    CHECK(r.checks.complementarity);

    // the first sample sees the conflict: higher aircraft climbs
    CHECK(r.advisories[0][0] == "climb");
    CHECK(r.advisories[1][0] == "descend");

    // the deflection appears on the wire at that instant
    const auto& defl = r.channels.at("defl1").section;
    CHECK(*std::get<ConstantFlow>(defl.cells()[0].flow).value == doctest::Approx(0.02));

    // eventually both return to level and stay there
    CHECK(r.advisories[0].back() == "level");
    CHECK(r.advisories[1].back() == "level");

    // separation at the end exceeds the threshold
    auto altitude_at_end = [&](const char* name) {
        const auto& ch = r.channels.at(name);
        return (*ch.section.value_at(Rational(30), Side::Left).state)[ch.component];
    };
    CHECK(altitude_at_end("h1") - altitude_at_end("h2") >= 150.0);

    // the banded pitch contract holds on the longitudinal model
    for (const auto& c : r.contracts) {
        CHECK_MESSAGE(c.holds, c.name, ": ", c.detail);
    }
    CHECK(r.all_ok());
}

TEST_CASE("acas scenario: the strict pitch contract holds on the kinematic model") {
    ScenarioResult r = run_scenario(kinematic_conflict());
    CHECK(r.checks.compatible);
    REQUIRE(r.contracts.size() == 2);
    for (const auto& c : r.contracts) {
        CHECK(c.name.rfind("pitch-strict", 0) == 0);
        CHECK_MESSAGE(c.holds, c.name, ": ", c.detail);
    }
    CHECK(r.all_ok());
}

TEST_CASE("acas scenario: oracle replay of the guard fold") {
    // re-derive the advisory sequences by folding guards over sampled
    // altitudes, independently of the diagram scheduler
    Scenario sc = conflict_scenario();
    sc.horizon = Rational(12);
    ScenarioResult r = run_scenario(sc);

    LinearCds cds[2] = {aircraft_cds(sc.craft[0].model, sc.acas.deflection, sc.craft[0].altitude),
                        aircraft_cds(sc.craft[1].model, sc.acas.deflection, sc.craft[1].altitude)};
    Eigen::VectorXd x[2] = {cds[0].x0, cds[1].x0};
    Label man[2] = {"level", "level"};
    LtsSpec lts = advisory_lts(sc.acas);

    for (std::int64_t k = 0; k < 12; ++k) {
        double alt0 = x[0][3], alt1 = x[1][3];
        Label fired0 = advisory_guard(sc.acas, man[0], alt0, man[1], alt1, true);
        Label fired1 = advisory_guard(sc.acas, man[1], alt1, man[0], alt0, false);
        man[0] = *lts.transition(fired0, man[0]);
        man[1] = *lts.transition(fired1, man[1]);
        CHECK(r.advisories[0][k] == man[0]);
        CHECK(r.advisories[1][k] == man[1]);
        for (int i = 0; i < 2; ++i) {
            double u = man[i] == "climb" ? sc.acas.deflection
                       : man[i] == "descend" ? -sc.acas.deflection
                                             : 0.0;
            x[i] = oracle::rk4(cds[i].sys, x[i], Eigen::VectorXd::Constant(1, u), 1.0, 2000);
        }
    }
}

TEST_CASE("acas scenario: json round trip") {
    Scenario sc = kinematic_conflict();
    Scenario back = Scenario::from_json_text(sc.to_json_text());
    CHECK(back.acas.separation == sc.acas.separation);
    CHECK(back.acas.period == sc.acas.period);
    CHECK(back.horizon == sc.horizon);
    CHECK(back.craft[0].altitude == sc.craft[0].altitude);
    CHECK(back.craft[1].model.kind == AircraftModel::Kind::Kinematic);
    CHECK(back.contract.rate_band == sc.contract.rate_band);

    // a negative separation threshold fails validation
    CHECK_THROWS_AS(
        Scenario::from_json_text("{\"acas\": {\"separation\": -1, "
                                 "\"deflection\": 0.1, \"tau\": \"1\"}, \"horizon\": \"10\", "
                                 "\"aircraft\": [{\"altitude\": 1}, {\"altitude\": 2}]}"),
        ConfigError);
    // structurally broken json is also a config error
    CHECK_THROWS_AS(Scenario::from_json_text("{\"acas\": {}}"), ConfigError);
}

TEST_CASE("acas pilot: the maneuver-to-deflection case table") {
    AcasParams p;
    p.deflection = 0.02;
    LtsSpec lts = advisory_lts(p);
    Machine m = lts_machine(lts);
    SectionMorphism phi = pilot_map(m.output_sheaf->datum(), p.deflection);

    // vertex cells keep their phase and map the label to a level
    FlowCell descend_cell;
    descend_cell.length = Rational(1, 2);
    ConstantFlow f;
    f.label = "descend";
    f.phase0 = Rational(1, 4);
    descend_cell.flow = f;
    FlowCell mapped = phi.cell_map(descend_cell);
    const auto& g = std::get<ConstantFlow>(mapped.flow);
    CHECK(*g.value == -0.02);
    CHECK(*g.phase0 == Rational(1, 4));
    CHECK_FALSE(g.label.has_value());

    // transition edges map pairwise
    auto check_pair = [&](const char* a, const char* b, double va, double vb) {
        JumpEdge e = m.output_sheaf->datum().jump_for(std::string("(") + a + "," + b + ")");
        JumpEdge out = phi.edge_map(e);
        CHECK_FALSE(out.identity);
        CHECK(*out.source.scalar == va);
        CHECK(*out.target.scalar == vb);
        CHECK(*out.source.phase == Rational(1));
        CHECK(out.target.phase->is_zero());
    };
    check_pair("descend", "level", -0.02, 0.0);
    check_pair("level", "level", 0.0, 0.0);
    check_pair("level", "climb", 0.0, 0.02);
}

TEST_CASE("acas: analytic pitch derivative equals the pitch-rate state") {
    Scenario sc = conflict_scenario();
    sc.horizon = Rational(10);
    ScenarioResult r = run_scenario(sc);
    const auto& theta = r.channels.at("theta1");
    const auto& craft = r.channels.at("q1").section;
    for (int k = 1; k < 40; ++k) {
        Rational t(k, 4);
        if (craft.edge_at(t)) continue;
        double q = (*craft.value_at(t, Side::Right).state)[1];
        CHECK(deriv(theta, t) == doctest::Approx(q).epsilon(1e-12));
    }
}

TEST_CASE("acas scenario: non-level initial maneuvers return once separated") {
    Scenario sc = conflict_scenario();
    sc.craft[0].altitude = 10400.0;  // separated from the start
    sc.craft[0].maneuver = "climb";
    sc.craft[1].maneuver = "descend";
    sc.horizon = Rational(6);
    ScenarioResult r = run_scenario(sc);
    CHECK(r.checks.compatible);
    CHECK(r.checks.ra_iff_conflict);
    // the first sample already sees separation, so both return immediately
    CHECK(r.advisories[0][0] == "level");
    CHECK(r.advisories[1][0] == "level");
    CHECK(r.all_ok());
}

TEST_CASE("acas: zero horizon produces initial edges only") {
    Scenario sc = conflict_scenario();
    sc.horizon = Rational(0);
    ScenarioResult r = run_scenario(sc);
    for (const auto& [name, bt] : r.trace.boxes) {
        CHECK(bt.state.is_point());
    }
    CHECK(r.checks.compatible);
}

TEST_CASE("acas: open chain composes and runs on recorded events") {
    Scenario sc = conflict_scenario();
    ComposedMachine chain = open_chain(sc, 0);
    CHECK(chain.leaf_count() == 3);
    LtsSpec lts = advisory_lts(sc.acas);
    HybridSection events = make_lts_input(lts, {"l3", "l3", "l4", "l1"}, true);
    auto states = chain.execute(events, Rational(4));
    CHECK(chain.check_compatibility(states).all_compatible());
}
