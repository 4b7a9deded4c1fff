#include "ivs/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ivs {

HybridSheafDatum HybridSheafDatum::periodic_labels(Graph g, GraphFamily family, Duration tau) {
    if (!(tau > Duration(0))) {
        throw Error("periodic datum needs a positive period, got " + tau.str());
    }
    HybridSheafDatum d;
    d.kind_ = Kind::PeriodicLabels;
    d.graph_ = std::move(g);
    d.family_ = family;
    d.period_ = std::move(tau);
    return d;
}

HybridSheafDatum HybridSheafDatum::periodic_scalars(std::vector<double> levels, Duration tau) {
    if (!(tau > Duration(0))) {
        throw Error("periodic datum needs a positive period, got " + tau.str());
    }
    HybridSheafDatum d;
    d.kind_ = Kind::PeriodicScalars;
    d.levels_ = std::move(levels);
    std::sort(d.levels_.begin(), d.levels_.end());
    d.period_ = std::move(tau);
    return d;
}

HybridSheafDatum HybridSheafDatum::piecewise_scalar() {
    HybridSheafDatum d;
    d.kind_ = Kind::PiecewiseScalar;
    return d;
}

HybridSheafDatum HybridSheafDatum::cds_state(LinearSystemPtr sys) {
    sys->validate();
    HybridSheafDatum d;
    d.kind_ = Kind::CdsState;
    d.system_ = std::move(sys);
    return d;
}

HybridSheafDatum HybridSheafDatum::sampled_signal(int dim) {
    HybridSheafDatum d;
    d.kind_ = Kind::SampledSignal;
    d.signal_dim_ = dim;
    return d;
}

namespace {

std::vector<Label> tag_for(const Graph::Edge& e, GraphFamily family) {
    switch (family) {
        case GraphFamily::Loop:
            return {e.id};
        case GraphFamily::Complete:
            return {e.src, e.tgt};
        case GraphFamily::Transition:
            return {e.label, e.src};
    }
    return {};
}

}  // namespace

JumpEdge HybridSheafDatum::jump_for(const std::string& edge_id) const {
    if (kind_ != Kind::PeriodicLabels) {
        throw Error("jump_for applies to periodic label data only");
    }
    const auto* e = graph_.find_edge(edge_id);
    if (!e) throw Error("graph has no edge '" + edge_id + "'");
    JumpEdge j;
    j.identity = false;
    j.tag = tag_for(*e, family_);
    j.source.label = e->src;
    j.source.phase = period_;
    j.target.label = e->tgt;
    j.target.phase = Duration(0);
    return j;
}

std::string HybridSheafDatum::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::PeriodicLabels: {
            os << "periodic[";
            os << (family_ == GraphFamily::Loop         ? "loop"
                   : family_ == GraphFamily::Complete   ? "complete"
                                                        : "transition");
            os << "{";
            auto vs = graph_.vertices();
            std::sort(vs.begin(), vs.end());
            for (std::size_t i = 0; i < vs.size(); ++i) os << (i ? "," : "") << vs[i];
            os << "};edges=" << graph_.edges().size() << ";tau=" << period_.str() << "]";
            break;
        }
        case Kind::PeriodicScalars: {
            os << "periodic-scalar[{";
            for (std::size_t i = 0; i < levels_.size(); ++i) {
                os << (i ? "," : "") << levels_[i];
            }
            os << "};tau=" << period_.str() << "]";
            break;
        }
        case Kind::PiecewiseScalar:
            os << "piecewise-scalar";
            break;
        case Kind::CdsState:
            os << "cds-state[d=" << system_->state_dim() << ",m=" << system_->input_dim() << "]";
            break;
        case Kind::SampledSignal:
            os << "sampled[d=" << signal_dim_ << "]";
            break;
    }
    return os.str();
}

namespace {

bool fail(std::string* why, const std::string& msg) {
    if (why) *why = msg;
    return false;
}

bool level_known(const std::vector<double>& levels, double v, double eps) {
    for (double l : levels) {
        if (approx_equal(l, v, eps)) return true;
    }
    return false;
}

}  // namespace

bool HybridSheafDatum::valid_cell(const FlowCell& cell, std::string* why, double eps) const {
    switch (kind_) {
        case Kind::PeriodicLabels: {
            const auto* c = std::get_if<ConstantFlow>(&cell.flow);
            if (!c) return fail(why, "periodic label data admits constant cells only");
            if (!c->label || !graph_.has_vertex(*c->label)) {
                return fail(why, "cell label is not a vertex of the datum graph");
            }
            if (c->value) return fail(why, "periodic label cell must not carry a value");
            if (!c->phase0) return fail(why, "periodic cell needs a phase");
            YonedaSheaf yon{period_};
            if (!yon.admits(*c->phase0, cell.length)) {
                return fail(why, "phase window [" + c->phase0->str() + "," +
                                     (*c->phase0 + cell.length).str() + "] exceeds the period " +
                                     period_.str());
            }
            return true;
        }
        case Kind::PeriodicScalars: {
            const auto* c = std::get_if<ConstantFlow>(&cell.flow);
            if (!c) return fail(why, "periodic scalar data admits constant cells only");
            if (c->label) return fail(why, "periodic scalar cell must not carry a label");
            if (!c->value || !level_known(levels_, *c->value, eps)) {
                return fail(why, "cell level is not one of the datum's signal levels");
            }
            if (!c->phase0) return fail(why, "periodic cell needs a phase");
            YonedaSheaf yon{period_};
            if (!yon.admits(*c->phase0, cell.length)) {
                return fail(why, "phase window exceeds the period");
            }
            return true;
        }
        case Kind::PiecewiseScalar: {
            const auto* c = std::get_if<ConstantFlow>(&cell.flow);
            if (!c) return fail(why, "piecewise-constant data admits constant cells only");
            if (!c->value) return fail(why, "piecewise-constant cell needs a value");
            if (c->label || c->phase0) {
                return fail(why, "piecewise-constant cells carry a bare value");
            }
            return std::isfinite(*c->value) ? true : fail(why, "non-finite value");
        }
        case Kind::CdsState: {
            const auto* a = std::get_if<AffineFlow>(&cell.flow);
            if (!a) return fail(why, "state cells of a continuous system are affine segments");
            if (!a->sys || (a->sys != system_ && !a->sys->same_as(*system_))) {
                return fail(why, "cell references a different system");
            }
            if (a->x0.size() != system_->state_dim() || a->u.size() != system_->input_dim()) {
                return fail(why, "cell dimensions do not match the system");
            }
            return (a->x0.allFinite() && a->u.allFinite()) ? true
                                                           : fail(why, "non-finite cell data");
        }
        case Kind::SampledSignal: {
            const auto* s = std::get_if<SampledFlow>(&cell.flow);
            if (!s) return fail(why, "sampled data admits sampled cells only");
            if (s->samples.cols() != signal_dim_) {
                return fail(why, "sample dimension mismatch");
            }
            return s->samples.allFinite() ? true : fail(why, "non-finite samples");
        }
    }
    return false;
}

bool HybridSheafDatum::valid_edge(const JumpEdge& e, std::string* why, double eps) const {
    if (e.identity) {
        if (!e.source.matches(e.target, eps)) {
            return fail(why, "identity edge with distinct endpoints");
        }
        switch (kind_) {
            case Kind::PeriodicLabels:
                if (!e.source.label || !graph_.has_vertex(*e.source.label)) {
                    return fail(why, "identity edge at an unknown vertex");
                }
                if (!e.source.phase || e.source.phase->is_negative() ||
                    *e.source.phase > period_) {
                    return fail(why, "identity edge phase outside [0,tau]");
                }
                return true;
            case Kind::PeriodicScalars:
                if (!e.source.scalar || !level_known(levels_, *e.source.scalar, eps)) {
                    return fail(why, "identity edge at an unknown signal level");
                }
                if (!e.source.phase || e.source.phase->is_negative() ||
                    *e.source.phase > period_) {
                    return fail(why, "identity edge phase outside [0,tau]");
                }
                return true;
            case Kind::PiecewiseScalar:
                return e.source.scalar ? true : fail(why, "identity edge without a value");
            case Kind::CdsState:
                if (!e.source.state || e.source.state->size() != system_->state_dim()) {
                    return fail(why, "identity edge without a state vector");
                }
                return true;
            case Kind::SampledSignal:
                return e.source.state ? true : fail(why, "identity edge without samples");
        }
        return false;
    }

    switch (kind_) {
        case Kind::PeriodicLabels: {
            if (!e.source.label || !e.target.label || !e.source.phase || !e.target.phase) {
                return fail(why, "jump edge needs labeled, phased endpoints");
            }
            if (*e.source.phase != period_ || !e.target.phase->is_zero()) {
                return fail(why, "jumps leave at phase tau and land at phase 0");
            }
            for (const auto& ge : graph_.edges()) {
                if (tag_for(ge, family_) == e.tag && ge.src == *e.source.label &&
                    ge.tgt == *e.target.label) {
                    return true;
                }
            }
            return fail(why, "the datum graph has no such jump");
        }
        case Kind::PeriodicScalars: {
            if (!e.source.scalar || !e.target.scalar || !e.source.phase || !e.target.phase) {
                return fail(why, "jump edge needs leveled, phased endpoints");
            }
            if (*e.source.phase != period_ || !e.target.phase->is_zero()) {
                return fail(why, "jumps leave at phase tau and land at phase 0");
            }
            if (!level_known(levels_, *e.source.scalar, eps) ||
                !level_known(levels_, *e.target.scalar, eps)) {
                return fail(why, "jump between unknown signal levels");
            }
            return true;
        }
        case Kind::PiecewiseScalar: {
            if (!e.source.scalar || !e.target.scalar) {
                return fail(why, "signal switch needs values on both sides");
            }
            return true;
        }
        case Kind::CdsState: {
            if (!e.source.state || !e.target.state || !e.source.input || !e.target.input) {
                return fail(why, "input switch needs (state, input) on both sides");
            }
            if (!approx_equal(*e.source.state, *e.target.state, eps)) {
                return fail(why, "state must be continuous across an input switch");
            }
            return true;
        }
        case Kind::SampledSignal:
            return fail(why, "sampled signals have no jumps");
    }
    return false;
}

bool presheaf_member(const HybridSheafDatum& datum, const HybridSection& candidate,
                     std::string* why, double eps) {
    if (candidate.is_point()) {
        return datum.valid_edge(candidate.edges()[0], why, eps);
    }
    if (candidate.cells().size() != 1) {
        return fail(why, "a presheaf section has exactly one cell");
    }
    const auto& cell = candidate.cells()[0];
    const auto& e0 = candidate.edges()[0];
    const auto& el = candidate.edges()[1];
    if (!datum.valid_cell(cell, why, eps) || !datum.valid_edge(e0, why, eps) ||
        !datum.valid_edge(el, why, eps)) {
        return false;
    }
    // The pullback condition: e0 targets the left endpoint, el leaves the right.
    if (!e0.target.matches(cell.left_value(), eps)) {
        return fail(why, "incoming edge lands at " + e0.target.str() + ", cell starts at " +
                             cell.left_value().str());
    }
    if (!el.source.matches(cell.right_value(), eps)) {
        return fail(why, "outgoing edge leaves from " + el.source.str() + ", cell ends at " +
                             cell.right_value().str());
    }
    return true;
}

HybridSection presheaf_restrict(const HybridSheafDatum& datum, const HybridSection& section,
                                const TranslationMap& tr) {
    std::string why;
    if (!presheaf_member(datum, section, &why)) {
        throw MembershipError("not a presheaf section: " + why);
    }
    return section.restrict(tr);
}

bool RealizedSheaf::member(const HybridSection& s, std::string* why, double eps) const {
    HybridSection canon = s.canonicalize(eps);
    if (canon.is_point()) {
        return datum_.valid_edge(canon.edges()[0], why, eps);
    }
    for (const auto& e : canon.edges()) {
        if (!datum_.valid_edge(e, why, eps)) return false;
    }
    for (const auto& c : canon.cells()) {
        if (!datum_.valid_cell(c, why, eps)) return false;
    }
    return true;
}

void RealizedSheaf::require_member(const HybridSection& s, double eps) const {
    std::string why;
    if (!member(s, &why, eps)) {
        throw MembershipError("section is not a member of " + describe() + ": " + why);
    }
}

HybridSection RealizedSheaf::restrict(const HybridSection& s, const TranslationMap& tr) const {
    require_member(s);
    return s.restrict(tr);
}

HybridSection RealizedSheaf::glue(const HybridSection& a, const HybridSection& b,
                                  double eps) const {
    require_member(a, eps);
    require_member(b, eps);
    return HybridSection::glue(a, b, eps);
}

RealizedSheafPtr realize(HybridSheafDatum datum) {
    return std::make_shared<RealizedSheaf>(std::move(datum));
}

HybridSheafDatum gamma(const Graph& g, GraphFamily family, Duration tau) {
    return HybridSheafDatum::periodic_labels(g, family, std::move(tau));
}

}  // namespace ivs
