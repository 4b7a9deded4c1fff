#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ivs/hybrid.hpp"
#include "ivs/lts_spec.hpp"
#include "ivs/section.hpp"

namespace ivs {

// A map of sections applied cell-wise and edge-wise. Lengths and positions
// are preserved; the result is re-validated and canonicalized, so a morphism
// that breaks adjacency is caught at application time.
struct SectionMorphism {
    std::string name = "identity";
    std::string source_type;
    std::string target_type;
    std::function<FlowCell(const FlowCell&)> cell_map;
    std::function<JumpEdge(const JumpEdge&)> edge_map;

    HybridSection apply(const HybridSection& s) const;
};

SectionMorphism identity_morphism(const std::string& type);

// second after first
SectionMorphism compose(const SectionMorphism& second, const SectionMorphism& first);

enum class MachineKind { Event, Map, Continuous };

struct LinearCds;

// An input/output machine: a state behavior sheaf with maps onto an input
// sheaf and an output sheaf, plus an executor that produces the unique state
// section lying over a given input section. Machines are immutable values;
// executors are pure.
struct Machine {
    std::string name;
    MachineKind kind = MachineKind::Map;
    RealizedSheafPtr input_sheaf;
    RealizedSheafPtr output_sheaf;
    RealizedSheafPtr state_sheaf;
    SectionMorphism to_input;   // state section -> the input it consumed
    SectionMorphism to_output;  // state section -> the output it produces
    std::function<HybridSection(const HybridSection&, const Duration&)> run;
    Duration period{0};  // sampling period for event-driven machines, 0 otherwise

    // construction metadata, used by diagram schedulers
    std::shared_ptr<const LtsSpec> lts;
    std::shared_ptr<const LinearCds> cds;
};

// --- labeled transition system machines ---------------------------------------
//
// State sections alternate constant (state, phase) cells with transition
// jumps at period boundaries; the input map forgets the state component and
// the output map applies the output alphabet, sending a transition on input
// l from state s to the output pair (O(s), O(T(l, s))).
//
// The executor folds the input's jump sequence through the transition map
// from the initial state. An input label with no transition from the current
// state is an error: the realized state sheaf has no section that both
// consumes the event and stays put, because identity self-loops cannot reset
// the phase. (Guard evaluators are total, so driven scenarios never hit
// this.)
Machine lts_machine(const LtsSpec& spec);

// Builds the event section consumed by an LTS machine: one event per period,
// starting at t = 0 when first_event_at_zero, else at t = tau. The section
// always spans a whole number of periods.
HybridSection make_lts_input(const LtsSpec& spec, const std::vector<Label>& events,
                             bool first_event_at_zero);

// --- continuous linear machines ------------------------------------------------

struct LinearCds {
    LinearSystem sys;
    Eigen::VectorXd x0;
    bool piecewise_constant_input = true;

    void validate() const;

    // JSON object with fields dim, inputs, outputs, A, B, C (row-major), x0.
    static LinearCds from_json_text(const std::string& text);
    std::string to_json_text() const;
};

// State sections are per-piece affine segments under the piecewise-constant
// input; the executor advances each piece by the closed-form propagator of
// the system (one matrix exponential per piece, no time stepping). `step`
// fixes the sampling grid for the output map and serialization.
Machine cds_machine(const LinearCds& cds, const Duration& step);

// Builds a piecewise-constant input section from (level, length) runs.
HybridSection make_piecewise_input(const std::vector<std::pair<double, Duration>>& runs);

// --- pure map machines -----------------------------------------------------------
//
// State = input; the output map applies f cell-wise. The executor validates
// membership and restricts to the horizon.
Machine map_machine(const std::string& name, RealizedSheafPtr domain, RealizedSheafPtr codomain,
                    SectionMorphism f);

// Maps the labels of a periodic-label sheaf onto numeric signal levels,
// pairwise on jump edges, keeping phases. The codomain is the corresponding
// periodic-scalar sheaf.
SectionMorphism level_morphism(const std::string& name, const HybridSheafDatum& domain,
                               const std::map<Label, double>& levels);

// Forgets the phase bookkeeping of a periodic-scalar sheaf, producing a
// plain piecewise-constant signal; jumps between equal levels degenerate to
// identity edges, so runs of equal levels merge.
SectionMorphism hold_morphism(const HybridSheafDatum& domain);

}  // namespace ivs
