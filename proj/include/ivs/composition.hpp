#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ivs/machine.hpp"

namespace ivs {

// --- compatibility reports -----------------------------------------------------

struct WireCheck {
    std::string wire;
    bool compatible = false;
    std::optional<Duration> mismatch_time;
    std::string detail;
};

struct CompatReport {
    std::vector<WireCheck> wires;

    bool all_compatible() const;
    std::string str() const;
};

// Locates the first time at which two sections disagree (payload-aware,
// within eps on numeric data). Empty when the sections are equivalent.
std::optional<WireCheck> first_mismatch(const std::string& wire, const HybridSection& a,
                                        const HybridSection& b, double eps = kValueEps);

// --- series composition ----------------------------------------------------------
//
// The composite of two machines along an output-to-input morphism g: states
// are pairs of component states whose shared wire agrees, the composite
// input is the left input, the composite output is the right output. The
// tree shape is preserved so that differently chunked composites exercise
// different execution groupings; state tuples are reported flattened in
// left-to-right order.
class ComposedMachine {
  public:
    ComposedMachine(Machine m);  // NOLINT: machines lift implicitly
    ComposedMachine(ComposedMachine left, SectionMorphism link, ComposedMachine right);

    std::size_t leaf_count() const { return leaves_; }
    const RealizedSheafPtr& input_sheaf() const;
    const RealizedSheafPtr& output_sheaf() const;
    Duration period() const;

    // Runs the whole chain on an external input; the returned tuple contains
    // one state section per leaf machine and satisfies every wire condition.
    std::vector<HybridSection> execute(const HybridSection& input,
                                       const Duration& horizon) const;

    HybridSection input_of(const std::vector<HybridSection>& states) const;
    HybridSection output_of(const std::vector<HybridSection>& states) const;

    // Verifies the pullback condition on every internal wire: the pushed
    // forward output of each left part equals the input consumed by the
    // right part. Exact on symbolic cells, within eps on continuous values.
    CompatReport check_compatibility(const std::vector<HybridSection>& states,
                                     double eps = kValueEps) const;

    struct Node;

  private:
    std::shared_ptr<const Node> root_;
    std::size_t leaves_;

    explicit ComposedMachine(std::shared_ptr<const Node> root, std::size_t leaves)
        : root_(std::move(root)), leaves_(leaves) {}
};

ComposedMachine compose_series(Machine m1, SectionMorphism g, Machine m2);
ComposedMachine compose_series(ComposedMachine m1, SectionMorphism g, ComposedMachine m2);

// --- wiring diagrams --------------------------------------------------------------

struct PortDecl {
    std::string name;
    std::string type;
};

struct BoxDecl {
    std::string name;
    std::string machine_ref;
    std::vector<PortDecl> inputs;
    std::vector<PortDecl> outputs;

    const PortDecl* find_input(const std::string& port) const;
    const PortDecl* find_output(const std::string& port) const;
};

struct WireDecl {
    std::string src_box, src_port;
    std::string dst_box, dst_port;
    std::string morphism;  // empty = identity
    int line = 0;
};

struct ExternalDecl {
    bool is_input = true;
    std::string box, port;
    int line = 0;
};

struct MorphismSig {
    std::string from, to;
};

struct WiringDiagram {
    std::vector<BoxDecl> boxes;
    std::vector<WireDecl> wires;
    std::vector<ExternalDecl> externals;

    const BoxDecl* find_box(const std::string& name) const;

    // Structural validation: endpoints declared, at most one wire per input
    // port, no port both wired and external, port types equal up to the
    // attached morphism's signature.
    void validate(const std::map<std::string, MorphismSig>& morphisms = {}) const;

    std::string summary() const;
};

// Concrete syntax:
//   box <name> : <machine-ref> { in <port> : <type>; out <port> : <type>; }
//   wire <box>.<port> -> <box>.<port> [via <morphism>];
//   external in <box>.<port>;
//   external out <box>.<port>;
// '#' starts a comment. Errors carry line and column.
WiringDiagram parse_wiring(const std::string& text);

// --- executable diagrams -----------------------------------------------------------
//
// Machines bound to boxes, plus sampling evaluators ("guards") that close
// feedback loops: a guard reads the left-limit values of its wired inputs at
// every period start and emits one event label, which downstream event
// machines consume at that instant. Cycles that do not pass through a guard
// are rejected (there is no way to schedule them causally).

struct GuardFunction {
    std::vector<std::string> ports;
    std::function<Label(const std::map<std::string, PointValue>&)> fire;
    LtsSpec event_alphabet;  // supplies the loop-graph alphabet and the period
};

struct BoundDiagram {
    WiringDiagram shape;
    std::map<std::string, Machine> machines;
    std::map<std::string, GuardFunction> guards;
    std::map<std::string, SectionMorphism> morphisms;

    void bind_machine(const std::string& box, Machine m);
    void bind_guard(const std::string& box, GuardFunction g);
    void bind_morphism(const std::string& name, SectionMorphism m);

    Duration sampling_period() const;
    void validate() const;
};

struct BoxTrace {
    HybridSection state = HybridSection::point(identity_edge(PointValue{}));
    HybridSection output = HybridSection::point(identity_edge(PointValue{}));
    std::map<std::string, HybridSection> consumed;  // per input port
};

struct DiagramTrace {
    std::map<std::string, BoxTrace> boxes;
    CompatReport compatibility;
};

// Synchronized co-simulation: per period, sample every guard at the period
// start, fold event machines, push map machines, hold continuous inputs
// constant and integrate. External inputs are keyed "box.port" and must
// cover the horizon. The returned traces satisfy every wire condition.
DiagramTrace execute(const BoundDiagram& diagram,
                     const std::map<std::string, HybridSection>& external_inputs,
                     const Duration& horizon);

// Compatibility of an arbitrary trace tuple against the diagram's wires,
// recomputing every pushed-forward output independently.
CompatReport check_compatibility(const BoundDiagram& diagram,
                                 const std::map<std::string, BoxTrace>& boxes,
                                 double eps = kValueEps);

}  // namespace ivs
