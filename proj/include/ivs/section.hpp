#pragma once

#include <variant>
#include <vector>

#include "ivs/intervals.hpp"
#include "ivs/linalg.hpp"
#include "ivs/value.hpp"

namespace ivs {

// --- Flow descriptors ------------------------------------------------------
//
// A flow cell is a behavior over [0, length] with well-defined values at
// every rational point. Three families cover everything the machines emit:
// constant cells with optional phase bookkeeping (periodic symbolic and
// piecewise-constant numeric data), sampled trajectories on a uniform grid,
// and closed-form affine ODE segments under constant input.

struct ConstantFlow {
    std::optional<Label> label;
    std::optional<double> value;
    std::optional<Rational> phase0;  // phase at the cell's left end
};

struct SampledFlow {
    // (n+1) x d samples on the uniform grid spanning exactly [0, length].
    Eigen::MatrixXd samples;
};

struct AffineFlow {
    LinearSystemPtr sys;
    Eigen::VectorXd x0;     // state at the cell's left end
    Eigen::VectorXd u;      // constant input over the cell
    Rational step_hint{1};  // preferred sampling pitch for serialization

    Eigen::VectorXd state_at(double t) const;
};

struct FlowCell {
    Duration length;
    std::variant<ConstantFlow, SampledFlow, AffineFlow> flow;

    PointValue value_at(const Duration& t) const;  // 0 <= t <= length
    PointValue left_value() const { return value_at(Duration(0)); }
    PointValue right_value() const { return value_at(length); }

    // Sub-cell over [from, to]. Exact for constant and affine flows; sampled
    // flows are linearly interpolated onto a fresh uniform grid when the cut
    // points do not land on the existing one.
    FlowCell slice(const Duration& from, const Duration& to) const;
};

// --- Jump edges -------------------------------------------------------------

struct JumpEdge {
    bool identity = false;
    std::vector<Label> tag;  // graph edge name parts; empty for identity edges
    PointValue source;
    PointValue target;
    Duration time{0};  // absolute within the enclosing section; recomputed on build

    // Structural equality, ignoring position. Numeric payloads compare within eps.
    bool same_edge(const JumpEdge& o, double eps = kValueEps) const;
    std::string str() const;
};

JumpEdge identity_edge(const PointValue& v);

enum class Side { Left, Right };

// --- Sections ----------------------------------------------------------------
//
// A finite-length behavior: jump edges alternating with flow cells,
//     e0, v1, e1, ..., vn, en
// with adjacency compatibility between every edge and its neighboring cells.
// A zero-length section is a single jump edge. Construction validates
// adjacency and recomputes edge timestamps; it does not canonicalize, so
// refined representatives can be built and compared.
class HybridSection {
  public:
    HybridSection(std::vector<JumpEdge> edges, std::vector<FlowCell> cells,
                  double eps = kValueEps);

    // Zero-length section at an empty value; a placeholder for containers.
    HybridSection();

    static HybridSection point(JumpEdge e);

    const Duration& length() const { return length_; }
    bool is_point() const { return cells_.empty(); }
    const std::vector<JumpEdge>& edges() const { return edges_; }
    const std::vector<FlowCell>& cells() const { return cells_; }

    // Edge lying exactly at absolute time t, if any.
    const JumpEdge* edge_at(const Duration& t) const;

    // Value at time t; at an edge time the Side picks the limit taken.
    PointValue value_at(const Duration& t, Side side) const;

    // Absolute times of all edges, including both boundaries.
    std::vector<Duration> breakpoints() const;

    struct Endpoint {
        JumpEdge edge;
        PointValue value;
    };
    Endpoint endpoint(Side side) const;

    // The image of this section under a translation into it: the sub-behavior
    // over [p, p + source_len]. A window boundary landing on a jump keeps that
    // jump as the boundary edge (this is what makes glue-then-restrict return
    // the original halves); a boundary strictly inside a flow gets the flow's
    // identity edge. Restricting to a single point returns the edge at that
    // point or the identity edge of the flow value.
    HybridSection restrict(const TranslationMap& tr) const;
    HybridSection restrict(const Duration& from, const Duration& to) const;

    // Unique gluing of endpoint-compatible sections: the right boundary edge
    // of s1 must equal the left boundary edge of s2 (within eps on numeric
    // payloads). The result is canonical; restricting it back to either half
    // recovers the canonical form of that half.
    static HybridSection glue(const HybridSection& s1, const HybridSection& s2,
                              double eps = kValueEps);

    // Coarsest representative of the refinement-equivalence class: drops
    // zero-length cells and merges flows across interior identity edges
    // whenever the two flows are jointly representable. Idempotent.
    HybridSection canonicalize(double eps = kValueEps) const;

    // Splits cells at the given absolute interior times, inserting identity
    // edges; produces an equivalent (refined) representative.
    HybridSection refine(const std::vector<Duration>& cuts) const;

    // Canonical-form comparison: exact on lengths, labels, phases and tags,
    // within eps on continuous payloads.
    bool equivalent(const HybridSection& o, double eps = kValueEps) const;

    std::string str() const;

  private:
    struct Raw {};
    explicit HybridSection(Raw) {}
    void recompute_times();

    Duration length_{0};
    std::vector<JumpEdge> edges_;
    std::vector<FlowCell> cells_;
};

}  // namespace ivs
