#include "ivs/machine.hpp"

#include <json.hpp>
#include <sstream>

#include "ivs/log.hpp"

namespace ivs {

HybridSection SectionMorphism::apply(const HybridSection& s) const {
    std::vector<JumpEdge> edges;
    edges.reserve(s.edges().size());
    for (const auto& e : s.edges()) edges.push_back(edge_map ? edge_map(e) : e);
    std::vector<FlowCell> cells;
    cells.reserve(s.cells().size());
    for (const auto& c : s.cells()) cells.push_back(cell_map ? cell_map(c) : c);
    HybridSection out(std::move(edges), std::move(cells));
    return out.canonicalize();
}

SectionMorphism identity_morphism(const std::string& type) {
    SectionMorphism m;
    m.name = "identity";
    m.source_type = type;
    m.target_type = type;
    return m;
}

SectionMorphism compose(const SectionMorphism& second, const SectionMorphism& first) {
    if (!first.target_type.empty() && !second.source_type.empty() &&
        first.target_type != second.source_type) {
        throw WiringError("morphisms do not compose: '" + first.name + "' lands in " +
                          first.target_type + " but '" + second.name + "' expects " +
                          second.source_type);
    }
    SectionMorphism m;
    m.name = second.name + "." + first.name;
    m.source_type = first.source_type;
    m.target_type = second.target_type;
    auto f_cell = first.cell_map;
    auto s_cell = second.cell_map;
    m.cell_map = [f_cell, s_cell](const FlowCell& c) {
        FlowCell mid = f_cell ? f_cell(c) : c;
        return s_cell ? s_cell(mid) : mid;
    };
    auto f_edge = first.edge_map;
    auto s_edge = second.edge_map;
    m.edge_map = [f_edge, s_edge](const JumpEdge& e) {
        JumpEdge mid = f_edge ? f_edge(e) : e;
        return s_edge ? s_edge(mid) : mid;
    };
    return m;
}

// --- LTS machines ---------------------------------------------------------------

namespace {

PointValue labeled_point(const Label& l, const Rational& phase) {
    PointValue v;
    v.label = l;
    v.phase = phase;
    return v;
}

FlowCell label_cell(const Label& l, const Rational& phase0, const Duration& len) {
    FlowCell c;
    c.length = len;
    ConstantFlow f;
    f.label = l;
    f.phase0 = phase0;
    c.flow = f;
    return c;
}

Duration truncate_horizon(const Duration& horizon, const Duration& period,
                          const std::string& who) {
    std::int64_t k = horizon.floor_div(period);
    Duration h = period * Rational(k);
    if (h != horizon) {
        warn(who + ": horizon " + horizon.str() + " truncated down to " + h.str() +
             " (a whole number of periods)");
    }
    return h;
}

}  // namespace

Machine lts_machine(const LtsSpec& spec) {
    spec.validate();
    const Duration tau = spec.period;

    auto input = realize(gamma(loop_graph(spec.inputs), GraphFamily::Loop, tau));
    auto output = realize(gamma(complete_graph(spec.outputs), GraphFamily::Complete, tau));
    auto state = realize(gamma(transition_graph(spec), GraphFamily::Transition, tau));

    const HybridSheafDatum input_datum = input->datum();
    const HybridSheafDatum output_datum = output->datum();

    SectionMorphism p_i;
    p_i.name = "forget-state";
    p_i.source_type = state->describe();
    p_i.target_type = input->describe();
    p_i.cell_map = [](const FlowCell& c) {
        const auto& f = std::get<ConstantFlow>(c.flow);
        return label_cell("*", *f.phase0, c.length);
    };
    p_i.edge_map = [input_datum](const JumpEdge& e) {
        if (e.identity) {
            return identity_edge(labeled_point("*", *e.source.phase));
        }
        // transition tag is (input, state); the input sheaf keeps the input
        return input_datum.jump_for(e.tag.at(0));
    };

    const LtsSpec spec_copy = spec;
    SectionMorphism p_o;
    p_o.name = "observe";
    p_o.source_type = state->describe();
    p_o.target_type = output->describe();
    p_o.cell_map = [spec_copy](const FlowCell& c) {
        const auto& f = std::get<ConstantFlow>(c.flow);
        return label_cell(spec_copy.output_of(*f.label), *f.phase0, c.length);
    };
    p_o.edge_map = [spec_copy, output_datum](const JumpEdge& e) {
        if (e.identity) {
            return identity_edge(
                labeled_point(spec_copy.output_of(*e.source.label), *e.source.phase));
        }
        const Label& in = e.tag.at(0);
        const Label& from = e.tag.at(1);
        auto next = spec_copy.transition(in, from);
        if (!next) {
            throw DomainError("transition (" + in + "," + from + ") is not in the system");
        }
        // h(l, s) = (O(s), O(T(l, s)))
        return output_datum.jump_for("(" + spec_copy.output_of(from) + "," +
                                     spec_copy.output_of(*next) + ")");
    };

    Machine m;
    m.name = "lts";
    m.kind = MachineKind::Event;
    m.lts = std::make_shared<LtsSpec>(spec);
    m.input_sheaf = input;
    m.output_sheaf = output;
    m.state_sheaf = state;
    m.to_input = p_i;
    m.to_output = p_o;
    m.period = tau;

    auto state_datum = state->datum();
    m.run = [spec_copy, input, state, state_datum, tau](const HybridSection& in,
                                                        const Duration& horizon) {
        input->require_member(in);
        Duration h = truncate_horizon(require_duration(horizon, "horizon"), tau, "lts");
        if (in.length() < h) {
            throw Error("input section of length " + in.length().str() +
                        " does not cover the horizon " + h.str());
        }
        HybridSection window = in.restrict(Duration(0), h);
        if (window.is_point()) {
            const auto& e = window.edges()[0];
            if (e.identity) {
                return HybridSection::point(
                    identity_edge(labeled_point(spec_copy.initial, *e.source.phase)));
            }
            const Label& l = e.tag.at(0);
            auto next = spec_copy.transition(l, spec_copy.initial);
            if (!next) {
                throw DomainError("input label '" + l + "' has no transition from state '" +
                                  spec_copy.initial + "'");
            }
            return HybridSection::point(
                state_datum.jump_for("(" + l + "," + spec_copy.initial + ")"));
        }

        Label current = spec_copy.initial;
        std::vector<JumpEdge> edges;
        std::vector<FlowCell> cells;
        for (std::size_t i = 0; i < window.edges().size(); ++i) {
            const auto& e = window.edges()[i];
            if (e.identity) {
                edges.push_back(identity_edge(labeled_point(current, *e.source.phase)));
            } else {
                const Label& l = e.tag.at(0);
                auto next = spec_copy.transition(l, current);
                if (!next) {
                    throw DomainError("input label '" + l + "' arrived at t=" + e.time.str() +
                                      " but has no transition from state '" + current + "'");
                }
                edges.push_back(state_datum.jump_for("(" + l + "," + current + ")"));
                current = *next;
            }
            if (i < window.cells().size()) {
                const auto& f = std::get<ConstantFlow>(window.cells()[i].flow);
                cells.push_back(label_cell(current, *f.phase0, window.cells()[i].length));
            }
        }
        HybridSection out(std::move(edges), std::move(cells));
        state->require_member(out);
        return out;
    };
    return m;
}

HybridSection make_lts_input(const LtsSpec& spec, const std::vector<Label>& events,
                             bool first_event_at_zero) {
    const Duration tau = spec.period;
    HybridSheafDatum datum = gamma(loop_graph(spec.inputs), GraphFamily::Loop, tau);
    std::vector<JumpEdge> edges;
    std::vector<FlowCell> cells;
    std::size_t next = 0;
    if (first_event_at_zero) {
        if (events.empty()) throw Error("no events given");
        edges.push_back(datum.jump_for(events[next++]));
    } else {
        edges.push_back(identity_edge(labeled_point("*", Rational(0))));
    }
    cells.push_back(label_cell("*", Rational(0), tau));
    while (next < events.size()) {
        edges.push_back(datum.jump_for(events[next++]));
        cells.push_back(label_cell("*", Rational(0), tau));
    }
    edges.push_back(identity_edge(labeled_point("*", tau)));
    return HybridSection(std::move(edges), std::move(cells));
}

// --- continuous machines ---------------------------------------------------------

void LinearCds::validate() const {
    sys.validate();
    if (x0.size() != sys.state_dim()) {
        throw ConfigError("initial state dimension does not match the system");
    }
    if (!x0.allFinite()) throw ConfigError("initial state must be finite");
    if (sys.input_dim() != 1) {
        throw ConfigError("only single-input systems are supported");
    }
}

Machine cds_machine(const LinearCds& cds, const Duration& step) {
    cds.validate();
    if (!(step > Duration(0))) throw ConfigError("sampling step must be positive");

    auto sys = std::make_shared<LinearSystem>(cds.sys);
    auto input = realize(HybridSheafDatum::piecewise_scalar());
    auto state = realize(HybridSheafDatum::cds_state(sys));
    auto output = realize(HybridSheafDatum::sampled_signal(sys->C.rows()));

    SectionMorphism p_i;
    p_i.name = "input-of";
    p_i.source_type = state->describe();
    p_i.target_type = input->describe();
    p_i.cell_map = [](const FlowCell& c) {
        const auto& f = std::get<AffineFlow>(c.flow);
        FlowCell out;
        out.length = c.length;
        ConstantFlow cf;
        cf.value = f.u[0];
        out.flow = cf;
        return out;
    };
    p_i.edge_map = [](const JumpEdge& e) {
        JumpEdge out;
        out.identity = e.identity;
        out.tag = e.tag;
        out.source.scalar = (*e.source.input)[0];
        out.target.scalar = (*e.target.input)[0];
        return out;
    };

    auto sample_y = [sys](const AffineFlow& f, const Duration& len, const Duration& step_hint) {
        std::int64_t n = (len / step_hint).floor_div(Rational(1));
        if (Duration(n) * step_hint != len) n += 1;
        if (n < 1) n = 1;
        const double h = (len / Rational(n)).to_double();
        AffinePropagator prop = affine_propagator(*sys, h);
        Eigen::MatrixXd rows(n + 1, sys->C.rows());
        Eigen::VectorXd x = f.x0;
        rows.row(0) = (sys->C * x).transpose();
        for (std::int64_t i = 1; i <= n; ++i) {
            x = prop.advance(x, f.u);
            rows.row(i) = (sys->C * x).transpose();
        }
        if (!rows.allFinite()) throw NumericError("output samples became non-finite");
        SampledFlow sf;
        sf.samples = rows;
        return sf;
    };

    SectionMorphism p_o;
    p_o.name = "readout";
    p_o.source_type = state->describe();
    p_o.target_type = output->describe();
    p_o.cell_map = [sample_y](const FlowCell& c) {
        const auto& f = std::get<AffineFlow>(c.flow);
        FlowCell out;
        out.length = c.length;
        out.flow = sample_y(f, c.length, f.step_hint);
        return out;
    };
    p_o.edge_map = [sys](const JumpEdge& e) {
        PointValue v;
        v.state = sys->C * (*e.source.state);
        return identity_edge(v);  // the readout is continuous across input switches
    };

    Machine m;
    m.name = "cds";
    m.kind = MachineKind::Continuous;
    m.cds = std::make_shared<LinearCds>(cds);
    m.input_sheaf = input;
    m.output_sheaf = output;
    m.state_sheaf = state;
    m.to_input = p_i;
    m.to_output = p_o;
    m.period = Duration(0);

    Eigen::VectorXd x0 = cds.x0;
    Duration step_copy = step;
    m.run = [sys, input, state, x0, step_copy](const HybridSection& in, const Duration& horizon) {
        input->require_member(in);
        require_duration(horizon, "horizon");
        if (in.length() < horizon) {
            throw Error("input section of length " + in.length().str() +
                        " does not cover the horizon " + horizon.str());
        }
        HybridSection window = in.restrict(Duration(0), horizon);

        auto lift_edge = [](const JumpEdge& e, const Eigen::VectorXd& x, double u_left,
                            double u_right) {
            JumpEdge out;
            out.identity = e.identity;
            out.tag = e.tag;
            out.source.state = x;
            out.source.input = Eigen::VectorXd::Constant(1, u_left);
            out.target.state = x;
            out.target.input = Eigen::VectorXd::Constant(1, u_right);
            return out;
        };

        if (window.is_point()) {
            const auto& e = window.edges()[0];
            double ul = e.source.scalar.value_or(0.0);
            double ur = e.target.scalar.value_or(ul);
            return HybridSection::point(lift_edge(e, x0, ul, ur));
        }

        std::vector<JumpEdge> edges;
        std::vector<FlowCell> cells;
        Eigen::VectorXd x = x0;
        for (std::size_t i = 0; i < window.cells().size(); ++i) {
            const auto& cf = std::get<ConstantFlow>(window.cells()[i].flow);
            const auto& e = window.edges()[i];
            double u_here = *cf.value;
            double u_before = e.source.scalar.value_or(u_here);
            edges.push_back(lift_edge(e, x, u_before, u_here));

            AffineFlow f;
            f.sys = sys;
            f.x0 = x;
            f.u = Eigen::VectorXd::Constant(1, u_here);
            f.step_hint = step_copy;
            FlowCell cell;
            cell.length = window.cells()[i].length;
            cell.flow = f;
            x = f.state_at(cell.length.to_double());
            if (!x.allFinite()) {
                throw NumericError("state became non-finite at t=" +
                                   (window.edges()[i + 1].time).str());
            }
            cells.push_back(std::move(cell));

            if (i + 1 == window.cells().size()) {
                const auto& last = window.edges()[i + 1];
                double u_after = last.target.scalar.value_or(u_here);
                edges.push_back(lift_edge(last, x, u_here, u_after));
            }
        }
        HybridSection out(std::move(edges), std::move(cells));
        state->require_member(out);
        return out;
    };
    return m;
}

HybridSection make_piecewise_input(const std::vector<std::pair<double, Duration>>& runs) {
    if (runs.empty()) throw Error("piecewise input needs at least one run");
    std::vector<JumpEdge> edges;
    std::vector<FlowCell> cells;
    auto point_of = [](double v) {
        PointValue p;
        p.scalar = v;
        return p;
    };
    edges.push_back(identity_edge(point_of(runs[0].first)));
    for (std::size_t i = 0; i < runs.size(); ++i) {
        FlowCell c;
        c.length = runs[i].second;
        ConstantFlow f;
        f.value = runs[i].first;
        c.flow = f;
        cells.push_back(c);
        if (i + 1 < runs.size()) {
            JumpEdge sw;
            sw.identity = runs[i].first == runs[i + 1].first;
            sw.source = point_of(runs[i].first);
            sw.target = point_of(runs[i + 1].first);
            edges.push_back(sw);
        }
    }
    edges.push_back(identity_edge(point_of(runs.back().first)));
    return HybridSection(std::move(edges), std::move(cells));
}

// --- map machines -------------------------------------------------------------------

Machine map_machine(const std::string& name, RealizedSheafPtr domain, RealizedSheafPtr codomain,
                    SectionMorphism f) {
    Machine m;
    m.name = name;
    m.kind = MachineKind::Map;
    m.input_sheaf = domain;
    m.output_sheaf = codomain;
    m.state_sheaf = domain;
    m.to_input = identity_morphism(domain->describe());
    m.to_output = std::move(f);
    if (domain->datum().kind() == HybridSheafDatum::Kind::PeriodicLabels ||
        domain->datum().kind() == HybridSheafDatum::Kind::PeriodicScalars) {
        m.period = domain->datum().period();
    }
    RealizedSheafPtr dom = domain;
    m.run = [dom](const HybridSection& in, const Duration& horizon) {
        dom->require_member(in);
        if (in.length() < horizon) {
            throw Error("input section of length " + in.length().str() +
                        " does not cover the horizon " + horizon.str());
        }
        return in.restrict(Duration(0), require_duration(horizon, "horizon"));
    };
    return m;
}

SectionMorphism level_morphism(const std::string& name, const HybridSheafDatum& domain,
                               const std::map<Label, double>& levels) {
    if (domain.kind() != HybridSheafDatum::Kind::PeriodicLabels) {
        throw WiringError("level morphism applies to periodic label data");
    }
    for (const auto& v : domain.graph().vertices()) {
        if (!levels.count(v)) {
            throw WiringError("no signal level assigned to label '" + v + "'");
        }
    }
    std::vector<double> values;
    for (const auto& [label, value] : levels) values.push_back(value);
    HybridSheafDatum target = HybridSheafDatum::periodic_scalars(values, domain.period());

    SectionMorphism m;
    m.name = name;
    m.source_type = domain.describe();
    m.target_type = target.describe();
    std::map<Label, double> table = levels;
    m.cell_map = [table](const FlowCell& c) {
        const auto& f = std::get<ConstantFlow>(c.flow);
        auto it = table.find(*f.label);
        if (it == table.end()) {
            throw Error("no signal level for label '" + *f.label + "'");
        }
        FlowCell out;
        out.length = c.length;
        ConstantFlow g;
        g.value = it->second;
        g.phase0 = f.phase0;
        out.flow = g;
        return out;
    };
    m.edge_map = [table](const JumpEdge& e) {
        auto level_of = [&table](const Label& l) {
            auto it = table.find(l);
            if (it == table.end()) throw Error("no signal level for label '" + l + "'");
            return it->second;
        };
        JumpEdge out;
        out.identity = e.identity;
        out.source.scalar = level_of(*e.source.label);
        out.source.phase = e.source.phase;
        out.target.scalar = level_of(*e.target.label);
        out.target.phase = e.target.phase;
        return out;
    };
    return m;
}

SectionMorphism hold_morphism(const HybridSheafDatum& domain) {
    if (domain.kind() != HybridSheafDatum::Kind::PeriodicScalars) {
        throw WiringError("hold morphism applies to periodic scalar data");
    }
    SectionMorphism m;
    m.name = "hold";
    m.source_type = domain.describe();
    m.target_type = HybridSheafDatum::piecewise_scalar().describe();
    m.cell_map = [](const FlowCell& c) {
        const auto& f = std::get<ConstantFlow>(c.flow);
        FlowCell out;
        out.length = c.length;
        ConstantFlow g;
        g.value = f.value;
        out.flow = g;
        return out;
    };
    m.edge_map = [](const JumpEdge& e) {
        JumpEdge out;
        out.identity = e.identity || *e.source.scalar == *e.target.scalar;
        out.source.scalar = e.source.scalar;
        out.target.scalar = e.target.scalar;
        return out;
    };
    return m;
}

// --- config ----------------------------------------------------------------------------

LinearCds LinearCds::from_json_text(const std::string& text) {
    nlohmann::json j;
    int d = 0, m = 0, k = 0;
    try {
        j = nlohmann::json::parse(text);
        d = j.at("dim").get<int>();
        m = j.at("inputs").get<int>();
        k = j.at("outputs").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad system config: ") + e.what());
    }
    auto read_matrix = [&](const char* key, int rows, int cols) {
        auto flat = j.at(key).get<std::vector<double>>();
        if (static_cast<int>(flat.size()) != rows * cols) {
            throw ConfigError(std::string(key) + " must have " + std::to_string(rows * cols) +
                              " entries (row-major), got " + std::to_string(flat.size()));
        }
        Eigen::MatrixXd mmat(rows, cols);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) mmat(r, c) = flat[r * cols + c];
        }
        return mmat;
    };
    LinearCds cds;
    cds.sys.A = read_matrix("A", d, d);
    cds.sys.B = read_matrix("B", d, m);
    cds.sys.C = read_matrix("C", k, d);
    cds.x0 = read_matrix("x0", d, 1);
    if (j.contains("piecewise_constant_input")) {
        cds.piecewise_constant_input = j["piecewise_constant_input"].get<bool>();
    }
    cds.validate();
    return cds;
}

std::string LinearCds::to_json_text() const {
    nlohmann::json j;
    auto flat = [](const Eigen::MatrixXd& m) {
        std::vector<double> out;
        for (int r = 0; r < m.rows(); ++r) {
            for (int c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
        }
        return out;
    };
    j["dim"] = sys.state_dim();
    j["inputs"] = sys.input_dim();
    j["outputs"] = sys.output_dim();
    j["A"] = flat(sys.A);
    j["B"] = flat(sys.B);
    j["C"] = flat(sys.C);
    j["x0"] = flat(x0);
    j["piecewise_constant_input"] = piecewise_constant_input;
    return j.dump(2);
}

}  // namespace ivs
