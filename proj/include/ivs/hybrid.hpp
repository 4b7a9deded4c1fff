#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ivs/graph.hpp"
#include "ivs/lts_spec.hpp"
#include "ivs/section.hpp"

namespace ivs {

// The representable sheaf of phases within one period: its sections of
// length l are the admissible start phases {p | 0 <= p <= tau - l}, so there
// are no sections at all above length tau. Kept symbolic; phases are never
// enumerated.
struct YonedaSheaf {
    Duration period;

    bool admits(const Duration& len) const { return len <= period; }
    bool admits(const Duration& phase, const Duration& len) const {
        return !phase.is_negative() && phase + len <= period;
    }
};

// How jump-edge names decompose for the three graph constructions used by
// transition-system data: a loop graph's edges are bare input labels, a
// complete graph's edges are ordered label pairs, a transition graph's edges
// are (input, state) pairs.
enum class GraphFamily { Loop, Complete, Transition };

// A pair of a flow sheaf and a reflexive graph of jumps; the template from
// which behaviors with mixed continuous/discrete structure are realized.
// The flow sheaf V is one of:
//   PeriodicLabels: vertex labels x phases within a period (from a graph)
//   PeriodicScalars: a finite set of signal levels x phases within a period
//   PiecewiseScalar: unconstrained piecewise-constant real signals
//   CdsState: (u, x) pairs solving x' = Ax + Bu per constant-input piece
//   SampledSignal: sampled real trajectories (no jumps)
class HybridSheafDatum {
  public:
    enum class Kind { PeriodicLabels, PeriodicScalars, PiecewiseScalar, CdsState, SampledSignal };

    static HybridSheafDatum periodic_labels(Graph g, GraphFamily family, Duration tau);
    static HybridSheafDatum periodic_scalars(std::vector<double> levels, Duration tau);
    static HybridSheafDatum piecewise_scalar();
    static HybridSheafDatum cds_state(LinearSystemPtr sys);
    static HybridSheafDatum sampled_signal(int dim);

    Kind kind() const { return kind_; }
    const Graph& graph() const { return graph_; }
    GraphFamily family() const { return family_; }
    const Duration& period() const { return period_; }
    const std::vector<double>& levels() const { return levels_; }
    const LinearSystemPtr& system() const { return system_; }
    int signal_dim() const { return signal_dim_; }

    // Canonical jump edge for a named graph edge (non-identity; periodic
    // label data only). Sources sit at phase tau, targets at phase 0.
    JumpEdge jump_for(const std::string& edge_id) const;

    // Deterministic description used for wiring type checks.
    std::string describe() const;

    // Is e admissible as an edge of this datum (either an identity self-loop
    // at a vertex value, or a jump the graph of the datum contains)?
    bool valid_edge(const JumpEdge& e, std::string* why = nullptr,
                    double eps = kValueEps) const;
    bool valid_cell(const FlowCell& cell, std::string* why = nullptr,
                    double eps = kValueEps) const;

  private:
    Kind kind_ = Kind::PiecewiseScalar;
    Graph graph_;
    GraphFamily family_ = GraphFamily::Loop;
    Duration period_{0};
    std::vector<double> levels_;
    LinearSystemPtr system_;
    int signal_dim_ = 0;
};

// Builds the hybrid sheaf datum of a graph with period tau: flows are the
// graph's vertices crossed with phases in [0, tau]; jumps are the graph's
// edges, leaving at phase tau and landing at phase 0. Identity self-loops
// exist at every (vertex, phase) and are handled symbolically.
HybridSheafDatum gamma(const Graph& g, GraphFamily family, Duration tau);

// The pullback condition defining single-cell presheaf sections: a candidate
// (e0, v, el) is a section iff e0 lands on v's left endpoint and el leaves
// from v's right endpoint, with both edges admissible. A zero-length
// candidate is a bare admissible edge.
bool presheaf_member(const HybridSheafDatum& datum, const HybridSection& candidate,
                     std::string* why = nullptr, double eps = kValueEps);

// Restriction of a single-cell presheaf section along a translation; the
// boundary-edge case split falls out of the section restriction rules.
HybridSection presheaf_restrict(const HybridSheafDatum& datum, const HybridSection& section,
                                const TranslationMap& tr);

// The sheaf realized from a datum: membership over arbitrary canonical
// multi-cell sections, with restriction and gluing inherited from the
// section operations.
class RealizedSheaf {
  public:
    explicit RealizedSheaf(HybridSheafDatum datum) : datum_(std::move(datum)) {}

    const HybridSheafDatum& datum() const { return datum_; }
    std::string describe() const { return datum_.describe(); }

    bool member(const HybridSection& s, std::string* why = nullptr,
                double eps = kValueEps) const;
    void require_member(const HybridSection& s, double eps = kValueEps) const;

    HybridSection restrict(const HybridSection& s, const TranslationMap& tr) const;
    HybridSection glue(const HybridSection& a, const HybridSection& b,
                       double eps = kValueEps) const;

  private:
    HybridSheafDatum datum_;
};

using RealizedSheafPtr = std::shared_ptr<const RealizedSheaf>;

RealizedSheafPtr realize(HybridSheafDatum datum);

}  // namespace ivs
