#pragma once

// Random-section generators shared by the property and acceptance suites.

#include <memory>
#include <random>
#include <vector>

#include "ivs/hybrid.hpp"
#include "ivs/section.hpp"

namespace gen {

inline ivs::Rational random_rational(std::mt19937& rng, std::int64_t max_num = 8,
                                     std::int64_t max_den = 6) {
    std::uniform_int_distribution<std::int64_t> num(0, max_num);
    std::uniform_int_distribution<std::int64_t> den(1, max_den);
    return ivs::Rational(num(rng), den(rng));
}

// A strictly positive rational below `below`.
inline ivs::Rational random_cut(std::mt19937& rng, const ivs::Rational& below) {
    std::uniform_int_distribution<std::int64_t> den(2, 7);
    for (;;) {
        std::int64_t d = den(rng);
        std::uniform_int_distribution<std::int64_t> num(1, 6 * d);
        ivs::Rational r(num(rng), 6 * d);
        r = r * below;
        if (r > ivs::Rational(0) && r < below) return r;
    }
}

// Periodic symbolic section over the given datum graph: `periods` full
// periods separated by randomly chosen graph jumps, with optional partial
// cells at the ends. Always a member of realize(gamma(g, family, tau)).
inline ivs::HybridSection random_periodic_section(std::mt19937& rng, const ivs::Graph& g,
                                                  ivs::GraphFamily family,
                                                  const ivs::Rational& tau, int periods,
                                                  const std::string& start_vertex) {
    ivs::HybridSheafDatum datum = ivs::gamma(g, family, tau);
    std::vector<ivs::JumpEdge> edges;
    std::vector<ivs::FlowCell> cells;

    auto cell_for = [&](const std::string& vertex, const ivs::Rational& phase0,
                        const ivs::Rational& len) {
        ivs::FlowCell c;
        c.length = len;
        ivs::ConstantFlow f;
        f.label = vertex;
        f.phase0 = phase0;
        c.flow = f;
        return c;
    };
    auto ids_at = [&](const std::string& vertex, const ivs::Rational& phase) {
        ivs::PointValue v;
        v.label = vertex;
        v.phase = phase;
        return ivs::identity_edge(v);
    };

    std::string vertex = start_vertex;
    // maybe start mid-period
    std::uniform_int_distribution<int> coin(0, 1);
    ivs::Rational phase0 = coin(rng) ? random_cut(rng, tau) : ivs::Rational(0);
    edges.push_back(ids_at(vertex, phase0));
    cells.push_back(cell_for(vertex, phase0, tau - phase0));

    for (int k = 0; k < periods; ++k) {
        auto out = g.out_edges(vertex);
        if (out.empty()) break;
        std::uniform_int_distribution<std::size_t> pick(0, out.size() - 1);
        const auto* e = out[pick(rng)];
        edges.push_back(datum.jump_for(e->id));
        vertex = e->tgt;
        cells.push_back(cell_for(vertex, ivs::Rational(0), tau));
    }
    // maybe trim the last cell
    if (coin(rng)) {
        ivs::Rational cut = random_cut(rng, tau);
        cells.back().length = cut;
    }
    const auto& lastc = std::get<ivs::ConstantFlow>(cells.back().flow);
    edges.push_back(ids_at(vertex, *lastc.phase0 + cells.back().length));
    return ivs::HybridSection(std::move(edges), std::move(cells));
}

inline ivs::LinearSystemPtr random_stable_system(std::mt19937& rng, int d = 2) {
    std::uniform_real_distribution<double> mag(0.2, 1.5);
    ivs::LinearSystem sys;
    sys.A = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            sys.A(i, j) = (i == j ? -1.0 : 0.5) * mag(rng);
        }
    }
    sys.B = Eigen::MatrixXd::Ones(d, 1);
    for (int i = 0; i < d; ++i) sys.B(i, 0) = mag(rng);
    sys.C = Eigen::MatrixXd::Zero(1, d);
    sys.C(0, d - 1) = 1.0;
    return std::make_shared<ivs::LinearSystem>(sys);
}

// Piecewise-constant-input state section of a linear system: affine cells
// separated by input switches.
inline ivs::HybridSection random_cds_section(std::mt19937& rng, const ivs::LinearSystemPtr& sys,
                                             int pieces) {
    std::uniform_real_distribution<double> level(-1.0, 1.0);
    std::vector<ivs::JumpEdge> edges;
    std::vector<ivs::FlowCell> cells;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(sys->state_dim());
    for (int i = 0; i < sys->state_dim(); ++i) x[i] = level(rng);
    Eigen::VectorXd u(1);
    u[0] = level(rng);

    ivs::PointValue start;
    start.state = x;
    start.input = u;
    edges.push_back(ivs::identity_edge(start));

    for (int k = 0; k < pieces; ++k) {
        ivs::Rational len = random_cut(rng, ivs::Rational(2)) + ivs::Rational(1, 4);
        ivs::AffineFlow f;
        f.sys = sys;
        f.x0 = x;
        f.u = u;
        f.step_hint = ivs::Rational(1, 8);
        ivs::FlowCell c;
        c.length = len;
        c.flow = f;
        cells.push_back(c);
        x = f.state_at(len.to_double());
        Eigen::VectorXd u_next(1);
        u_next[0] = level(rng);
        ivs::JumpEdge sw;
        if (k + 1 == pieces) {
            ivs::PointValue end;
            end.state = x;
            end.input = u;
            edges.push_back(ivs::identity_edge(end));
        } else {
            sw.identity = false;
            sw.source.state = x;
            sw.source.input = u;
            sw.target.state = x;
            sw.target.input = u_next;
            edges.push_back(sw);
            u = u_next;
        }
    }
    return ivs::HybridSection(std::move(edges), std::move(cells));
}

// A run of input labels that is enabled along the fold of the transition map
// (every event has a transition from the state it arrives in).
inline std::vector<ivs::Label> random_lts_events(std::mt19937& rng, const ivs::LtsSpec& spec,
                                                 int count) {
    std::vector<ivs::Label> events;
    ivs::Label s = spec.initial;
    for (int i = 0; i < count; ++i) {
        std::vector<ivs::Label> enabled;
        for (const auto& l : spec.inputs) {
            if (spec.transition(l, s)) enabled.push_back(l);
        }
        if (enabled.empty()) break;
        std::uniform_int_distribution<std::size_t> pick(0, enabled.size() - 1);
        ivs::Label l = enabled[pick(rng)];
        events.push_back(l);
        s = *spec.transition(l, s);
    }
    return events;
}

}  // namespace gen
