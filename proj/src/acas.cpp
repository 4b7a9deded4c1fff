#include "ivs/acas.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <json.hpp>
#include <sstream>

namespace ivs::acas {

void AcasParams::validate() const {
    if (!(separation > 0)) throw ConfigError("separation threshold must be positive");
    if (!(deflection > 0)) throw ConfigError("deflection magnitude must be positive");
    if (!(period > Duration(0))) throw ConfigError("exchange period must be positive");
}

LinearCds longitudinal_cds(const AircraftParams& p, double initial_altitude) {
    if (p.U0 == 0.0) throw ConfigError("trim speed must be nonzero");
    LinearCds cds;
    cds.sys.A = Eigen::MatrixXd::Zero(4, 4);
    cds.sys.A(0, 0) = p.Z_alpha / p.U0;
    cds.sys.A(0, 1) = (p.U0 + p.Z_q) / p.U0;
    cds.sys.A(0, 2) = -p.gravity * std::sin(p.theta0) / p.U0;
    cds.sys.A(1, 0) = p.M_alpha;
    cds.sys.A(1, 1) = p.M_q;
    cds.sys.A(2, 1) = 1.0;  // theta' = q
    cds.sys.A(3, 2) = p.cruise;
    cds.sys.B = Eigen::MatrixXd::Zero(4, 1);
    cds.sys.B(0, 0) = p.Z_de / p.U0;
    cds.sys.B(1, 0) = p.M_de;
    cds.sys.C = Eigen::MatrixXd::Zero(1, 4);
    cds.sys.C(0, 3) = 1.0;
    cds.x0 = Eigen::VectorXd::Zero(4);
    cds.x0[3] = initial_altitude;
    return cds;
}

LinearCds kinematic_cds(const KinematicParams& p, double deflection, double initial_altitude) {
    if (!(deflection > 0)) throw ConfigError("deflection magnitude must be positive");
    LinearCds cds;
    cds.sys.A = Eigen::MatrixXd::Zero(2, 2);
    cds.sys.A(1, 0) = p.cruise;  // h' = cruise * theta
    cds.sys.B = Eigen::MatrixXd::Zero(2, 1);
    cds.sys.B(0, 0) = p.rate / deflection;  // theta' = rate at full deflection
    cds.sys.C = Eigen::MatrixXd::Zero(1, 2);
    cds.sys.C(0, 1) = 1.0;
    cds.x0 = Eigen::VectorXd::Zero(2);
    cds.x0[1] = initial_altitude;
    return cds;
}

LinearCds aircraft_cds(const AircraftModel& m, double deflection, double initial_altitude) {
    return m.kind == AircraftModel::Kind::Longitudinal
               ? longitudinal_cds(m.longitudinal, initial_altitude)
               : kinematic_cds(m.kinematic, deflection, initial_altitude);
}

double steady_pitch_rate(const AircraftParams& p, double deflection) {
    Eigen::Matrix2d a;
    a << p.Z_alpha / p.U0, (p.U0 + p.Z_q) / p.U0, p.M_alpha, p.M_q;
    Eigen::Vector2d b(p.Z_de / p.U0, p.M_de);
    Eigen::Vector2d ss = -a.inverse() * b * deflection;
    return ss[1];
}

LtsSpec advisory_lts(const AcasParams& p, const Label& initial_maneuver) {
    p.validate();
    LtsSpec s;
    s.states = {"level", "climb", "descend"};
    s.initial = initial_maneuver;
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
    s.period = p.period;
    s.validate();
    return s;
}

Label advisory_guard(const AcasParams& p, const Label& own_maneuver, double own_altitude,
                     const Label& intruder_maneuver, double intruder_altitude, bool goes_first) {
    const double gap = std::abs(own_altitude - intruder_altitude);
    const bool separated = gap >= p.separation;
    if (own_maneuver == "climb") {
        return separated ? "l4" : "l3";
    }
    if (own_maneuver == "descend") {
        return separated ? "l5" : "l2";
    }
    if (separated) return "l1";
    if (intruder_maneuver == "climb") return "l2";    // intruder climbs: descend
    if (intruder_maneuver == "descend") return "l3";  // intruder descends: climb
    // both level and in conflict: the higher aircraft climbs
    if (own_altitude > intruder_altitude) return "l3";
    if (own_altitude < intruder_altitude) return "l2";
    return goes_first ? "l3" : "l2";
}

SectionMorphism pilot_map(const HybridSheafDatum& advisory_datum, double deflection) {
    std::map<Label, double> levels = {
        {"level", 0.0}, {"climb", deflection}, {"descend", -deflection}};
    return level_morphism("pilot", advisory_datum, levels);
}

// --- scenario configuration --------------------------------------------------------

void Scenario::validate() const {
    acas.validate();
    if (!(horizon >= Duration(0))) throw ConfigError("horizon must be nonnegative");
    if (!(horizon / acas.period).is_integer()) {
        throw ConfigError("horizon " + horizon.str() + " is not a multiple of the period " +
                          acas.period.str());
    }
    if (!(step > Duration(0))) throw ConfigError("sampling step must be positive");
    for (const auto& c : craft) {
        if (c.maneuver != "level" && c.maneuver != "climb" && c.maneuver != "descend") {
            throw ConfigError("unknown initial maneuver '" + c.maneuver + "'");
        }
    }
}

namespace {

AircraftModel model_from_json(const nlohmann::json& j) {
    AircraftModel m;
    const std::string kind = j.value("kind", "longitudinal");
    if (kind == "longitudinal") {
        m.kind = AircraftModel::Kind::Longitudinal;
        AircraftParams& p = m.longitudinal;
        p.Z_alpha = j.value("Z_alpha", p.Z_alpha);
        p.Z_q = j.value("Z_q", p.Z_q);
        p.Z_de = j.value("Z_de", p.Z_de);
        p.M_alpha = j.value("M_alpha", p.M_alpha);
        p.M_q = j.value("M_q", p.M_q);
        p.M_de = j.value("M_de", p.M_de);
        p.U0 = j.value("U0", p.U0);
        p.theta0 = j.value("theta0", p.theta0);
        p.gravity = j.value("gravity", p.gravity);
        p.cruise = j.value("cruise", p.cruise);
    } else if (kind == "kinematic") {
        m.kind = AircraftModel::Kind::Kinematic;
        m.kinematic.rate = j.value("rate", m.kinematic.rate);
        m.kinematic.cruise = j.value("cruise", m.kinematic.cruise);
    } else {
        throw ConfigError("unknown aircraft model kind '" + kind + "'");
    }
    return m;
}

nlohmann::json model_to_json(const AircraftModel& m) {
    nlohmann::json j;
    if (m.kind == AircraftModel::Kind::Longitudinal) {
        const auto& p = m.longitudinal;
        j["kind"] = "longitudinal";
        j["Z_alpha"] = p.Z_alpha;
        j["Z_q"] = p.Z_q;
        j["Z_de"] = p.Z_de;
        j["M_alpha"] = p.M_alpha;
        j["M_q"] = p.M_q;
        j["M_de"] = p.M_de;
        j["U0"] = p.U0;
        j["theta0"] = p.theta0;
        j["gravity"] = p.gravity;
        j["cruise"] = p.cruise;
    } else {
        j["kind"] = "kinematic";
        j["rate"] = m.kinematic.rate;
        j["cruise"] = m.kinematic.cruise;
    }
    return j;
}

}  // namespace

Scenario Scenario::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad scenario config: ") + e.what());
    }
    Scenario sc;
    try {
    const auto& a = j.at("acas");
    sc.acas.separation = a.at("separation").get<double>();
    sc.acas.deflection = a.at("deflection").get<double>();
    sc.acas.period = Rational::parse(a.at("tau").get<std::string>());
    sc.horizon = Rational::parse(j.at("horizon").get<std::string>());
    if (j.contains("step")) sc.step = Rational::parse(j.at("step").get<std::string>());
    const auto& crafts = j.at("aircraft");
    if (crafts.size() != 2) throw ConfigError("a scenario needs exactly two aircraft");
    for (int i = 0; i < 2; ++i) {
        sc.craft[i].altitude = crafts[i].at("altitude").get<double>();
        sc.craft[i].maneuver = crafts[i].value("maneuver", "level");
        if (crafts[i].contains("model")) {
            sc.craft[i].model = model_from_json(crafts[i]["model"]);
        }
    }
    if (j.contains("contract")) {
        const auto& c = j["contract"];
        if (c.contains("settle")) {
            sc.contract.settle = Rational::parse(c["settle"].get<std::string>());
        }
        sc.contract.rate_band = c.value("rate_band", sc.contract.rate_band);
        sc.contract.grid_density = c.value("grid_density", sc.contract.grid_density);
        sc.contract.compare_eps = c.value("compare_eps", sc.contract.compare_eps);
    }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad scenario config: ") + e.what());
    }
    sc.validate();
    return sc;
}

std::string Scenario::to_json_text() const {
    nlohmann::json j;
    j["acas"] = {{"separation", acas.separation},
                 {"deflection", acas.deflection},
                 {"tau", acas.period.str()}};
    j["horizon"] = horizon.str();
    j["step"] = step.str();
    for (int i = 0; i < 2; ++i) {
        nlohmann::json c;
        c["altitude"] = craft[i].altitude;
        c["maneuver"] = craft[i].maneuver;
        c["model"] = model_to_json(craft[i].model);
        j["aircraft"].push_back(c);
    }
    j["contract"] = {{"settle", contract.settle.str()},
                     {"rate_band", contract.rate_band},
                     {"grid_density", contract.grid_density},
                     {"compare_eps", contract.compare_eps}};
    return j.dump(2);
}

// --- execution ------------------------------------------------------------------------

namespace {

struct CraftMachines {
    Machine logic;
    Machine pilot;
    Machine airframe;
    SectionMorphism hold;
};

CraftMachines build_machines(const Scenario& sc, int i) {
    CraftMachines out;
    LtsSpec lts = advisory_lts(sc.acas, sc.craft[i].maneuver);
    out.logic = lts_machine(lts);
    SectionMorphism phi = pilot_map(out.logic.output_sheaf->datum(), sc.acas.deflection);
    auto delta_sheaf = realize(HybridSheafDatum::periodic_scalars(
        {0.0, sc.acas.deflection, -sc.acas.deflection}, sc.acas.period));
    out.pilot = map_machine("pilot" + std::to_string(i + 1), out.logic.output_sheaf, delta_sheaf,
                            phi);
    out.hold = hold_morphism(delta_sheaf->datum());
    LinearCds cds = aircraft_cds(sc.craft[i].model, sc.acas.deflection, sc.craft[i].altitude);
    out.airframe = cds_machine(cds, sc.step);
    return out;
}

int theta_index(const AircraftModel& m) {
    return m.kind == AircraftModel::Kind::Longitudinal ? 2 : 0;
}

int pitch_rate_index(const AircraftModel& m) {
    return m.kind == AircraftModel::Kind::Longitudinal ? 1 : -1;  // kinematic has no q state
}

int altitude_index(const AircraftModel& m) {
    return m.kind == AircraftModel::Kind::Longitudinal ? 3 : 1;
}

double contract_rate(const Scenario& sc, int i) {
    const AircraftModel& m = sc.craft[i].model;
    return m.kind == AircraftModel::Kind::Kinematic
               ? m.kinematic.rate
               : steady_pitch_rate(m.longitudinal, sc.acas.deflection);
}

FormulaPtr strict_pitch_contract(const std::string& suffix, double rate) {
    auto sig = [&](const char* base, bool derivative) {
        LinExpr e;
        SignalTerm t;
        t.channel = std::string(base) + suffix;
        t.derivative = derivative;
        e.terms.push_back(t);
        return e;
    };
    auto constant = [](double v) {
        LinExpr e;
        e.constant = v;
        return e;
    };
    FormulaPtr level = Formula::implies(
        Formula::eq_label("P" + suffix, "level"),
        Formula::compare(sig("theta", true), Rel::Eq, constant(0.0)));
    FormulaPtr climb = Formula::implies(
        Formula::eq_label("P" + suffix, "climb"),
        Formula::compare(sig("theta", true), Rel::Eq, constant(rate)));
    FormulaPtr descend = Formula::implies(
        Formula::eq_label("P" + suffix, "descend"),
        Formula::compare(sig("theta", true), Rel::Eq, constant(-rate)));
    return Formula::conj(level, Formula::conj(climb, descend));
}

// Sign/band reading for the second-order longitudinal model: once settled
// after each advisory change, the pitch rate sits inside a band around the
// model's steady value (around zero for level flight).
ContractReport banded_pitch_report(const Scenario& sc, int i, const ChannelMap& channels,
                                   const std::vector<Label>& advisories) {
    const std::string suffix = std::to_string(i + 1);
    ContractReport report;
    report.name = "pitch-band" + suffix;
    report.holds = true;

    const double rate = std::abs(contract_rate(sc, i));
    const double band = sc.contract.rate_band * rate;
    const Duration tau = sc.acas.period;
    const ContractChannel& q = channels.at("q" + suffix);

    std::size_t k = 0;
    while (k < advisories.size()) {
        std::size_t end = k;
        while (end < advisories.size() && advisories[end] == advisories[k]) ++end;
        const Label& advisory = advisories[k];
        Duration seg_start = tau * Rational(static_cast<std::int64_t>(k));
        Duration seg_end = tau * Rational(static_cast<std::int64_t>(end));
        Duration from = seg_start + sc.contract.settle;
        // sample the pitch rate on the step grid past the settling window
        for (Duration t = from; t < seg_end; t += sc.step) {
            if (t > q.section.length()) break;
            if (q.section.edge_at(t)) continue;
            double value = deriv(channels.at("theta" + suffix), t);
            double target = advisory == "climb" ? rate : advisory == "descend" ? -rate : 0.0;
            if (advisory != "level" && std::copysign(1.0, value) != std::copysign(1.0, target)) {
                report.holds = false;
            } else if (std::abs(value - target) > band) {
                report.holds = false;
            }
            if (!report.holds) {
                std::ostringstream os;
                os << "pitch rate " << value << " outside " << target << " +- " << band
                   << " at t=" << t.str() << " under advisory '" << advisory << "'";
                report.detail = os.str();
                return report;
            }
        }
        k = end;
    }
    report.detail = "pitch rate within " + std::to_string(sc.contract.rate_band * 100.0) +
                    "% of the steady value after settling";
    return report;
}

}  // namespace

ComposedMachine open_chain(const Scenario& sc, int which) {
    CraftMachines m = build_machines(sc, which);
    return compose_series(
        compose_series(m.logic, identity_morphism(m.logic.output_sheaf->describe()), m.pilot),
        m.hold, m.airframe);
}

ScenarioResult run_scenario(const Scenario& sc) {
    sc.validate();
    ScenarioResult result;
    result.period = sc.acas.period;

    CraftMachines machines[2] = {build_machines(sc, 0), build_machines(sc, 1)};

    // the closed-loop diagram: per aircraft a guard, the logic, the pilot and
    // the airframe; guards read both maneuvers and both altitudes
    std::ostringstream shape;
    for (int i = 1; i <= 2; ++i) {
        shape << "box guard" << i << " : advisory_guard {\n"
              << "  in own_man : maneuver; in intr_man : maneuver;\n"
              << "  in own_alt : altitude; in intr_alt : altitude;\n"
              << "  out events : events;\n}\n"
              << "box acas" << i << " : advisory_lts {\n"
              << "  in events : events; out advisory : maneuver;\n}\n"
              << "box pilot" << i << " : pilot_map {\n"
              << "  in advisory : maneuver; out stick : deflection;\n}\n"
              << "box craft" << i << " : airframe {\n"
              << "  in stick : held_deflection; out alt : altitude;\n}\n";
    }
    for (int i = 1; i <= 2; ++i) {
        int j = 3 - i;
        shape << "wire guard" << i << ".events -> acas" << i << ".events;\n"
              << "wire acas" << i << ".advisory -> pilot" << i << ".advisory;\n"
              << "wire pilot" << i << ".stick -> craft" << i << ".stick via hold" << i << ";\n"
              << "wire acas" << i << ".advisory -> guard" << i << ".own_man;\n"
              << "wire acas" << j << ".advisory -> guard" << i << ".intr_man;\n"
              << "wire craft" << i << ".alt -> guard" << i << ".own_alt;\n"
              << "wire craft" << j << ".alt -> guard" << i << ".intr_alt;\n";
    }

    BoundDiagram diagram;
    diagram.shape = parse_wiring(shape.str());
    AcasParams params = sc.acas;
    for (int i = 0; i < 2; ++i) {
        const std::string n = std::to_string(i + 1);
        diagram.bind_machine("acas" + n, machines[i].logic);
        diagram.bind_machine("pilot" + n, machines[i].pilot);
        diagram.bind_machine("craft" + n, machines[i].airframe);
        diagram.bind_morphism("hold" + n, machines[i].hold);
        GuardFunction g;
        g.ports = {"own_man", "intr_man", "own_alt", "intr_alt"};
        g.event_alphabet = advisory_lts(params);
        bool first = i == 0;
        g.fire = [params, first](const std::map<std::string, PointValue>& in) {
            return advisory_guard(params, *in.at("own_man").label, *in.at("own_alt").scalar,
                                  *in.at("intr_man").label, *in.at("intr_alt").scalar, first);
        };
        diagram.bind_guard("guard" + n, g);
    }

    result.trace = execute(diagram, {}, sc.horizon);
    result.checks.compatible = result.trace.compatibility.all_compatible();
    if (!result.checks.compatible) {
        result.checks.detail = result.trace.compatibility.str();
    }

    // channels
    for (int i = 0; i < 2; ++i) {
        const std::string n = std::to_string(i + 1);
        const BoxTrace& logic = result.trace.boxes.at("acas" + n);
        const BoxTrace& craft = result.trace.boxes.at("craft" + n);
        result.channels["P" + n] = ContractChannel{logic.output, -1};
        result.channels["theta" + n] =
            ContractChannel{craft.state, theta_index(sc.craft[i].model)};
        result.channels["h" + n] = ContractChannel{craft.state, altitude_index(sc.craft[i].model)};
        if (pitch_rate_index(sc.craft[i].model) >= 0) {
            result.channels["q" + n] =
                ContractChannel{craft.state, pitch_rate_index(sc.craft[i].model)};
            result.channels["alpha" + n] = ContractChannel{craft.state, 0};
        }
        result.channels["defl" + n] =
            ContractChannel{machines[i].airframe.to_input.apply(craft.state), -1};

        // advisory per period, read off the logic's state cells
        const HybridSection& state = result.trace.boxes.at("acas" + n).state;
        std::int64_t periods = sc.horizon.floor_div(sc.acas.period);
        for (std::int64_t k = 0; k < periods; ++k) {
            Duration t = sc.acas.period * Rational(k);
            result.advisories[i].push_back(*state.value_at(t, Side::Right).label);
        }
    }

    // behavioral checks
    const double delta = sc.acas.separation;
    std::int64_t periods = sc.horizon.floor_div(sc.acas.period);
    std::ostringstream issues;
    std::optional<Label> prev[2];
    for (std::int64_t k = 0; k < periods; ++k) {
        Duration t = sc.acas.period * Rational(k);
        // altitudes are components of the airframe state vectors (left limits)
        double h1 = (*result.channels.at("h1").section.value_at(t, Side::Left).state)[
            result.channels.at("h1").component];
        double h2 = (*result.channels.at("h2").section.value_at(t, Side::Left).state)[
            result.channels.at("h2").component];
        const bool conflict = std::abs(h1 - h2) < delta;
        for (int i = 0; i < 2; ++i) {
            const Label& adv = result.advisories[i][k];
            if (conflict != (adv != "level")) {
                result.checks.ra_iff_conflict = false;
                issues << "advisory '" << adv << "' with separation " << std::abs(h1 - h2)
                       << " at sample " << k << "\n";
            }
        }
        const Label& a1 = result.advisories[0][k];
        const Label& a2 = result.advisories[1][k];
        bool was_level = (!prev[0] || *prev[0] == "level") && (!prev[1] || *prev[1] == "level");
        if (was_level && a1 != "level" && a1 == a2) {
            result.checks.complementarity = false;
            issues << "both aircraft advised '" << a1 << "' at sample " << k << "\n";
        }
        prev[0] = a1;
        prev[1] = a2;
    }
    for (int i = 0; i < 2; ++i) {
        const std::string n = std::to_string(i + 1);
        for (const auto& cell : result.channels.at("defl" + n).section.cells()) {
            double v = *std::get<ConstantFlow>(cell.flow).value;
            if (std::abs(v) > 1e-12 && std::abs(std::abs(v) - sc.acas.deflection) > 1e-12) {
                result.checks.deflection_in_range = false;
                issues << "deflection " << v << " outside the command set on aircraft " << n
                       << "\n";
            }
        }
    }
    if (!issues.str().empty()) result.checks.detail += issues.str();

    // contracts
    GridSpec grid;
    grid.density = sc.contract.grid_density;
    grid.compare_eps = sc.contract.compare_eps;
    for (int i = 0; i < 2; ++i) {
        const std::string n = std::to_string(i + 1);
        if (sc.craft[i].model.kind == AircraftModel::Kind::Kinematic) {
            FormulaPtr f = strict_pitch_contract(n, contract_rate(sc, i));
            auto sat = check(f, result.channels, grid);
            ContractReport report;
            report.name = "pitch-strict" + n;
            report.holds = sat.holds;
            report.detail = sat.holds ? f->str()
                                      : sat.detail + " (witness [" + sat.witness->first.str() +
                                            "," + sat.witness->second.str() + "])";
            result.contracts.push_back(std::move(report));
        } else {
            result.contracts.push_back(
                banded_pitch_report(sc, i, result.channels, result.advisories[i]));
        }
    }
    return result;
}

bool ScenarioResult::all_ok() const {
    if (!checks.ra_iff_conflict || !checks.deflection_in_range || !checks.complementarity ||
        !checks.compatible) {
        return false;
    }
    for (const auto& c : contracts) {
        if (!c.holds) return false;
    }
    return true;
}

std::string ScenarioResult::summary() const {
    std::ostringstream os;
    for (int i = 0; i < 2; ++i) {
        os << "advisories " << i + 1 << ":";
        std::size_t k = 0;
        while (k < advisories[i].size()) {
            std::size_t end = k;
            while (end < advisories[i].size() && advisories[i][end] == advisories[i][k]) ++end;
            os << " " << advisories[i][k] << "[" << (period * Rational((std::int64_t)k)).str()
               << "," << (period * Rational((std::int64_t)end)).str() << ")";
            k = end;
        }
        os << "\n";
    }
    os << "wire compatibility:    " << (checks.compatible ? "ok" : "MISMATCH") << "\n";
    os << "advisory iff conflict: " << (checks.ra_iff_conflict ? "ok" : "VIOLATED") << "\n";
    os << "deflection range:      " << (checks.deflection_in_range ? "ok" : "VIOLATED") << "\n";
    os << "complementarity:       " << (checks.complementarity ? "ok" : "VIOLATED") << "\n";
    for (const auto& c : contracts) {
        os << "contract " << c.name << ":  " << (c.holds ? "holds" : "FAILS") << "  " << c.detail
           << "\n";
    }
    if (!checks.detail.empty()) os << checks.detail;
    return os.str();
}

}  // namespace ivs::acas
