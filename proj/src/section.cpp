#include "ivs/section.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ivs {

// --- flows -------------------------------------------------------------------

Eigen::VectorXd AffineFlow::state_at(double t) const {
    if (t == 0.0) return x0;
    return propagate_affine(*sys, x0, u, t);
}

namespace {

Rational sampled_step(const SampledFlow& f, const Duration& length) {
    auto intervals = static_cast<std::int64_t>(f.samples.rows()) - 1;
    if (intervals <= 0) return Duration(0);
    return length / Rational(intervals);
}

Eigen::VectorXd sampled_value(const SampledFlow& f, const Duration& length, const Duration& t) {
    const auto rows = f.samples.rows();
    if (rows == 1 || length.is_zero()) return f.samples.row(0);
    // index = t / step = t * intervals / length
    Rational pos = t * Rational(rows - 1) / length;
    std::int64_t lo = pos.floor_div(Rational(1));
    if (lo >= rows - 1) return f.samples.row(rows - 1);
    double w = (pos - Rational(lo)).to_double();
    return (1.0 - w) * f.samples.row(lo).transpose() + w * f.samples.row(lo + 1).transpose();
}

}  // namespace

PointValue FlowCell::value_at(const Duration& t) const {
    if (t.is_negative() || t > length) {
        throw Error("cell evaluation at " + t.str() + " outside [0," + length.str() + "]");
    }
    PointValue v;
    if (const auto* c = std::get_if<ConstantFlow>(&flow)) {
        v.label = c->label;
        v.scalar = c->value;
        if (c->phase0) v.phase = *c->phase0 + t;
    } else if (const auto* s = std::get_if<SampledFlow>(&flow)) {
        v.state = sampled_value(*s, length, t);
    } else {
        const auto& a = std::get<AffineFlow>(flow);
        v.state = a.state_at(t.to_double());
        v.input = a.u;
    }
    return v;
}

FlowCell FlowCell::slice(const Duration& from, const Duration& to) const {
    if (from.is_negative() || to > length || from > to) {
        throw Error("cell slice [" + from.str() + "," + to.str() + "] outside [0," +
                    length.str() + "]");
    }
    FlowCell out;
    out.length = to - from;
    if (const auto* c = std::get_if<ConstantFlow>(&flow)) {
        ConstantFlow cut = *c;
        if (cut.phase0) cut.phase0 = *cut.phase0 + from;
        out.flow = cut;
    } else if (const auto* s = std::get_if<SampledFlow>(&flow)) {
        SampledFlow cut;
        Rational step = sampled_step(*s, length);
        if (out.length.is_zero()) {
            cut.samples = sampled_value(*s, length, from).transpose();
        } else if (!step.is_zero() && (from / step).is_integer() && (to / step).is_integer()) {
            auto lo = (from / step).floor_div(Rational(1));
            auto hi = (to / step).floor_div(Rational(1));
            cut.samples = s->samples.middleRows(lo, hi - lo + 1);
        } else {
            // re-grid: keep roughly the old pitch
            std::int64_t n = step.is_zero() ? 1 : (out.length / step).floor_div(Rational(1)) + 1;
            if ((out.length / step) == Rational(n - 1)) n -= 1;
            if (n < 1) n = 1;
            cut.samples.resize(n + 1, s->samples.cols());
            for (std::int64_t i = 0; i <= n; ++i) {
                Duration t = from + out.length * Rational(i, n);
                cut.samples.row(i) = sampled_value(*s, length, t).transpose();
            }
        }
        out.flow = cut;
    } else {
        const auto& a = std::get<AffineFlow>(flow);
        AffineFlow cut = a;
        cut.x0 = a.state_at(from.to_double());
        out.flow = cut;
    }
    return out;
}

// --- edges -------------------------------------------------------------------

bool JumpEdge::same_edge(const JumpEdge& o, double eps) const {
    return identity == o.identity && tag == o.tag && source.matches(o.source, eps) &&
           target.matches(o.target, eps);
}

std::string JumpEdge::str() const {
    std::ostringstream os;
    if (identity) {
        os << "id" << source.str();
    } else if (!tag.empty()) {
        os << "[";
        for (std::size_t i = 0; i < tag.size(); ++i) os << (i ? "," : "") << tag[i];
        os << "] " << source.str() << " -> " << target.str();
    } else {
        os << source.str() << " -> " << target.str();
    }
    return os.str();
}

JumpEdge identity_edge(const PointValue& v) {
    JumpEdge e;
    e.identity = true;
    e.source = v;
    e.target = v;
    return e;
}

// --- sections ------------------------------------------------------------------

HybridSection::HybridSection(std::vector<JumpEdge> edges, std::vector<FlowCell> cells, double eps)
    : edges_(std::move(edges)), cells_(std::move(cells)) {
    if (edges_.size() != cells_.size() + 1) {
        throw MalformedSectionError("section needs one more edge than cells (got " +
                                    std::to_string(edges_.size()) + " edges, " +
                                    std::to_string(cells_.size()) + " cells)");
    }
    length_ = Duration(0);
    for (const auto& c : cells_) {
        require_duration(c.length, "cell length");
        length_ += c.length;
    }
    for (const auto& e : edges_) {
        if (e.identity && !e.source.matches(e.target, eps)) {
            throw MalformedSectionError("identity edge with distinct endpoints: " + e.str());
        }
    }
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        if (!edges_[i].target.matches(cells_[i].left_value(), eps)) {
            throw MalformedSectionError(
                "edge " + std::to_string(i) + " lands at " + edges_[i].target.str() +
                " but the next cell starts at " + cells_[i].left_value().str());
        }
        if (!edges_[i + 1].source.matches(cells_[i].right_value(), eps)) {
            throw MalformedSectionError(
                "edge " + std::to_string(i + 1) + " leaves from " + edges_[i + 1].source.str() +
                " but the previous cell ends at " + cells_[i].right_value().str());
        }
    }
    recompute_times();
}

HybridSection::HybridSection() : HybridSection(point(identity_edge(PointValue{}))) {}

HybridSection HybridSection::point(JumpEdge e) {
    e.time = Duration(0);
    HybridSection s{Raw{}};
    s.edges_.push_back(std::move(e));
    return s;
}

void HybridSection::recompute_times() {
    Duration t(0);
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        edges_[i].time = t;
        if (i < cells_.size()) t += cells_[i].length;
    }
}

const JumpEdge* HybridSection::edge_at(const Duration& t) const {
    for (const auto& e : edges_) {
        if (e.time == t) return &e;
        if (e.time > t) break;
    }
    return nullptr;
}

PointValue HybridSection::value_at(const Duration& t, Side side) const {
    if (t.is_negative() || t > length_) {
        throw Error("evaluation at " + t.str() + " outside [0," + length_.str() + "]");
    }
    if (is_point()) {
        return side == Side::Left ? edges_[0].source : edges_[0].target;
    }
    // At the outer boundaries the one-sided limit comes from the boundary
    // edge, which for a jump records where the behavior came from / goes to.
    if (t.is_zero() && side == Side::Left) return edges_.front().source;
    if (t == length_ && side == Side::Right) return edges_.back().target;
    // Left side takes the limit from the cell ending at t, right side from the
    // cell starting at t.
    Duration start(0);
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        Duration end = start + cells_[i].length;
        bool inside = t > start && t < end;
        bool at_left = t == start && (side == Side::Right || i == 0);
        bool at_right = t == end && (side == Side::Left || i + 1 == cells_.size());
        if (inside || at_left || (at_right && !at_left)) {
            return cells_[i].value_at(t - start);
        }
        start = end;
    }
    const JumpEdge* e = edge_at(t);
    return side == Side::Left ? e->source : e->target;
}

std::vector<Duration> HybridSection::breakpoints() const {
    std::vector<Duration> out;
    out.reserve(edges_.size());
    for (const auto& e : edges_) out.push_back(e.time);
    return out;
}

HybridSection::Endpoint HybridSection::endpoint(Side side) const {
    Endpoint ep;
    if (side == Side::Left) {
        ep.edge = edges_.front();
        ep.value = is_point() ? edges_.front().target : cells_.front().left_value();
    } else {
        ep.edge = edges_.back();
        ep.value = is_point() ? edges_.back().source : cells_.back().right_value();
    }
    return ep;
}

HybridSection HybridSection::restrict(const TranslationMap& tr) const {
    if (tr.target_len != length_) {
        throw Error("restriction target length " + tr.target_len.str() +
                    " does not match section length " + length_.str());
    }
    return restrict(tr.offset, tr.offset + tr.source_len);
}

HybridSection HybridSection::restrict(const Duration& from, const Duration& to) const {
    if (from.is_negative() || to > length_ || from > to) {
        throw Error("restriction window [" + from.str() + "," + to.str() + "] outside [0," +
                    length_.str() + "]");
    }
    HybridSection canon = canonicalize();
    if (from == to) {
        if (const JumpEdge* e = canon.edge_at(from)) {
            return point(*e);
        }
        return point(identity_edge(canon.value_at(from, Side::Right)));
    }

    std::vector<JumpEdge> edges;
    std::vector<FlowCell> cells;
    if (const JumpEdge* e = canon.edge_at(from)) {
        edges.push_back(*e);
    } else {
        edges.push_back(identity_edge(canon.value_at(from, Side::Right)));
    }
    Duration start(0);
    for (std::size_t i = 0; i < canon.cells_.size(); ++i) {
        const auto& cell = canon.cells_[i];
        Duration end = start + cell.length;
        Duration lo = Rational::max(start, from);
        Duration hi = Rational::min(end, to);
        if (lo < hi) {
            cells.push_back(cell.slice(lo - start, hi - start));
            const JumpEdge& after = canon.edges_[i + 1];
            if (hi == end && end < to) {
                edges.push_back(after);  // interior jump
            } else if (hi == to) {
                if (const JumpEdge* e = canon.edge_at(to)) {
                    edges.push_back(*e);
                } else {
                    edges.push_back(identity_edge(cell.value_at(hi - start)));
                }
                break;
            }
        }
        start = end;
    }
    HybridSection out(std::move(edges), std::move(cells));
    return out.canonicalize();
}

HybridSection HybridSection::glue(const HybridSection& s1, const HybridSection& s2, double eps) {
    HybridSection a = s1.canonicalize(eps);
    HybridSection b = s2.canonicalize(eps);
    const JumpEdge& right = a.edges_.back();
    const JumpEdge& left = b.edges_.front();
    if (!right.same_edge(left, eps)) {
        throw GlueError("sections do not glue: right boundary is " + right.str() +
                        " but left boundary is " + left.str());
    }
    if (a.is_point()) return b;
    if (b.is_point()) return a;
    std::vector<JumpEdge> edges = a.edges_;
    edges.insert(edges.end(), b.edges_.begin() + 1, b.edges_.end());
    std::vector<FlowCell> cells = a.cells_;
    cells.insert(cells.end(), b.cells_.begin(), b.cells_.end());
    HybridSection out(std::move(edges), std::move(cells), eps);
    return out.canonicalize(eps);
}

namespace {

bool mergeable(const FlowCell& l, const FlowCell& r, double eps) {
    if (l.flow.index() != r.flow.index()) return false;
    if (const auto* cl = std::get_if<ConstantFlow>(&l.flow)) {
        const auto& cr = std::get<ConstantFlow>(r.flow);
        if (cl->label != cr.label) return false;
        if (cl->value.has_value() != cr.value.has_value()) return false;
        if (cl->value && !approx_equal(*cl->value, *cr.value, eps)) return false;
        if (cl->phase0.has_value() != cr.phase0.has_value()) return false;
        if (cl->phase0 && *cr.phase0 != *cl->phase0 + l.length) return false;
        return true;
    }
    if (const auto* al = std::get_if<AffineFlow>(&l.flow)) {
        const auto& ar = std::get<AffineFlow>(r.flow);
        if (al->sys != ar.sys && !al->sys->same_as(*ar.sys)) return false;
        return approx_equal(al->u, ar.u, eps);
    }
    const auto& sl = std::get<SampledFlow>(l.flow);
    const auto& sr = std::get<SampledFlow>(r.flow);
    if (sl.samples.cols() != sr.samples.cols()) return false;
    return sampled_step(sl, l.length) == sampled_step(sr, r.length);
}

FlowCell merge_cells(const FlowCell& l, const FlowCell& r) {
    FlowCell out = l;
    out.length = l.length + r.length;
    if (const auto* sl = std::get_if<SampledFlow>(&l.flow)) {
        const auto& sr = std::get<SampledFlow>(r.flow);
        SampledFlow joined;
        joined.samples.resize(sl->samples.rows() + sr.samples.rows() - 1, sl->samples.cols());
        joined.samples.topRows(sl->samples.rows()) = sl->samples;
        joined.samples.bottomRows(sr.samples.rows() - 1) = sr.samples.bottomRows(sr.samples.rows() - 1);
        out.flow = joined;
    }
    return out;
}

}  // namespace

HybridSection HybridSection::canonicalize(double eps) const {
    std::vector<JumpEdge> edges = edges_;
    std::vector<FlowCell> cells = cells_;

    // Zero-length cells assert that their flanking edges coincide; drop them.
    for (std::size_t i = 0; i < cells.size();) {
        if (cells[i].length.is_zero()) {
            if (!edges[i].same_edge(edges[i + 1], eps)) {
                throw MalformedSectionError("zero-length cell between distinct edges " +
                                            edges[i].str() + " and " + edges[i + 1].str());
            }
            cells.erase(cells.begin() + i);
            edges.erase(edges.begin() + i + 1);
        } else {
            ++i;
        }
    }

    // Merge flows across interior identity edges wherever representable.
    for (std::size_t i = 1; i + 1 < edges.size();) {
        if (edges[i].identity && mergeable(cells[i - 1], cells[i], eps)) {
            cells[i - 1] = merge_cells(cells[i - 1], cells[i]);
            cells.erase(cells.begin() + i);
            edges.erase(edges.begin() + i);
        } else {
            ++i;
        }
    }

    HybridSection out{Raw{}};
    out.edges_ = std::move(edges);
    out.cells_ = std::move(cells);
    out.length_ = length_;
    out.recompute_times();
    return out;
}

HybridSection HybridSection::refine(const std::vector<Duration>& cuts) const {
    std::vector<Duration> sorted = cuts;
    std::sort(sorted.begin(), sorted.end());
    std::vector<JumpEdge> edges{edges_.front()};
    std::vector<FlowCell> cells;
    Duration start(0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        Duration end = start + cells_[i].length;
        Duration pos = start;
        while (k < sorted.size() && sorted[k] <= end) {
            if (sorted[k] > pos && sorted[k] < end) {
                cells.push_back(cells_[i].slice(pos - start, sorted[k] - start));
                edges.push_back(identity_edge(cells_[i].value_at(sorted[k] - start)));
                pos = sorted[k];
            }
            ++k;
        }
        cells.push_back(cells_[i].slice(pos - start, end - start));
        edges.push_back(edges_[i + 1]);
        start = end;
    }
    return HybridSection(std::move(edges), std::move(cells));
}

bool HybridSection::equivalent(const HybridSection& o, double eps) const {
    HybridSection a = canonicalize(eps);
    HybridSection b = o.canonicalize(eps);
    if (a.length_ != b.length_ || a.cells_.size() != b.cells_.size()) return false;
    for (std::size_t i = 0; i < a.edges_.size(); ++i) {
        if (a.edges_[i].time != b.edges_[i].time) return false;
        if (!a.edges_[i].same_edge(b.edges_[i], eps)) return false;
    }
    for (std::size_t i = 0; i < a.cells_.size(); ++i) {
        const auto& ca = a.cells_[i];
        const auto& cb = b.cells_[i];
        if (ca.length != cb.length || ca.flow.index() != cb.flow.index()) return false;
        if (const auto* ka = std::get_if<ConstantFlow>(&ca.flow)) {
            const auto& kb = std::get<ConstantFlow>(cb.flow);
            if (ka->label != kb.label || ka->phase0 != kb.phase0) return false;
            if (ka->value.has_value() != kb.value.has_value()) return false;
            if (ka->value && !approx_equal(*ka->value, *kb.value, eps)) return false;
        } else if (const auto* aa = std::get_if<AffineFlow>(&ca.flow)) {
            const auto& ab = std::get<AffineFlow>(cb.flow);
            if (aa->sys != ab.sys && !aa->sys->same_as(*ab.sys)) return false;
            if (!approx_equal(aa->x0, ab.x0, eps) || !approx_equal(aa->u, ab.u, eps)) return false;
        } else {
            const auto& sa = std::get<SampledFlow>(ca.flow);
            const auto& sb = std::get<SampledFlow>(cb.flow);
            if (sa.samples.rows() != sb.samples.rows() || sa.samples.cols() != sb.samples.cols()) {
                return false;
            }
            for (Eigen::Index r = 0; r < sa.samples.rows(); ++r) {
                if (!approx_equal(Eigen::VectorXd(sa.samples.row(r)),
                                  Eigen::VectorXd(sb.samples.row(r)), eps)) {
                    return false;
                }
            }
        }
    }
    return true;
}

std::string HybridSection::str() const {
    std::ostringstream os;
    os << "section[0," << length_.str() << "]:";
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        os << " {" << edges_[i].time.str() << ": " << edges_[i].str() << "}";
        if (i < cells_.size()) {
            os << " ~" << cells_[i].length.str() << "~";
        }
    }
    return os.str();
}

}  // namespace ivs
