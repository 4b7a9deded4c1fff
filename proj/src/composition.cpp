#include "ivs/composition.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <sstream>

#include "ivs/log.hpp"

namespace ivs {

// --- reports ----------------------------------------------------------------

bool CompatReport::all_compatible() const {
    for (const auto& w : wires) {
        if (!w.compatible) return false;
    }
    return true;
}

std::string CompatReport::str() const {
    std::ostringstream os;
    for (const auto& w : wires) {
        os << (w.compatible ? "ok      " : "MISMATCH") << "  " << w.wire;
        if (!w.compatible) {
            os << "  at t=" << (w.mismatch_time ? w.mismatch_time->str() : "?") << "  "
               << w.detail;
        }
        os << "\n";
    }
    return os.str();
}

std::optional<WireCheck> first_mismatch(const std::string& wire, const HybridSection& a,
                                        const HybridSection& b, double eps) {
    if (a.equivalent(b, eps)) return std::nullopt;
    WireCheck miss;
    miss.wire = wire;
    miss.compatible = false;

    HybridSection ca = a.canonicalize(eps);
    HybridSection cb = b.canonicalize(eps);
    if (ca.length() != cb.length()) {
        miss.mismatch_time = Rational::min(ca.length(), cb.length());
        miss.detail = "lengths differ: " + ca.length().str() + " vs " + cb.length().str();
        return miss;
    }
    std::vector<Duration> grid = ca.breakpoints();
    for (const auto& t : cb.breakpoints()) grid.push_back(t);
    std::sort(grid.begin(), grid.end(), [](const Duration& x, const Duration& y) { return x < y; });
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    for (const auto& t : grid) {
        const JumpEdge* ea = ca.edge_at(t);
        const JumpEdge* eb = cb.edge_at(t);
        if ((ea == nullptr) != (eb == nullptr)) {
            miss.mismatch_time = t;
            miss.detail = std::string("edge present on one side only: ") +
                          (ea ? ea->str() : "none") + " vs " + (eb ? eb->str() : "none");
            return miss;
        }
        if (ea && eb && !ea->same_edge(*eb, eps)) {
            miss.mismatch_time = t;
            miss.detail = "edges differ: " + ea->str() + " vs " + eb->str();
            return miss;
        }
        if (t < ca.length()) {
            PointValue va = ca.value_at(t, Side::Right);
            PointValue vb = cb.value_at(t, Side::Right);
            if (!va.matches(vb, eps)) {
                miss.mismatch_time = t;
                miss.detail = "values differ: " + va.str() + " vs " + vb.str();
                return miss;
            }
        }
    }
    miss.mismatch_time = Duration(0);
    miss.detail = "sections differ in cell structure";
    return miss;
}

// --- series composition --------------------------------------------------------

struct ComposedMachine::Node {
    std::optional<Machine> leaf;
    std::shared_ptr<const Node> left, right;
    SectionMorphism link;
    std::size_t leaves = 1;
};

namespace {

const RealizedSheafPtr& node_input(const ComposedMachine::Node& n) {
    return n.leaf ? n.leaf->input_sheaf : node_input(*n.left);
}

const RealizedSheafPtr& node_output(const ComposedMachine::Node& n) {
    return n.leaf ? n.leaf->output_sheaf : node_output(*n.right);
}

Duration node_period(const ComposedMachine::Node& n) {
    if (n.leaf) return n.leaf->period;
    Duration l = node_period(*n.left);
    Duration r = node_period(*n.right);
    if (l.is_zero()) return r;
    if (r.is_zero()) return l;
    if (l != r) {
        throw WiringError("mixed sampling periods in a composite: " + l.str() + " vs " + r.str());
    }
    return l;
}

void node_execute(const ComposedMachine::Node& n, const HybridSection& input,
                  const Duration& horizon, std::vector<HybridSection>* out) {
    if (n.leaf) {
        out->push_back(n.leaf->run(input, horizon));
        return;
    }
    std::vector<HybridSection> left_states;
    node_execute(*n.left, input, horizon, &left_states);
    // push the left part's output across the link and feed the right part
    HybridSection left_out = [&] {
        const ComposedMachine::Node* r = n.left.get();
        std::size_t idx = left_states.size() - 1;
        while (!r->leaf) r = r->right.get();
        return r->leaf->to_output.apply(left_states[idx]);
    }();
    HybridSection mid = n.link.apply(left_out);
    std::vector<HybridSection> right_states;
    node_execute(*n.right, mid, horizon, &right_states);
    out->insert(out->end(), left_states.begin(), left_states.end());
    out->insert(out->end(), right_states.begin(), right_states.end());
}

HybridSection node_output_of(const ComposedMachine::Node& n,
                             const std::vector<HybridSection>& states, std::size_t offset) {
    if (n.leaf) return n.leaf->to_output.apply(states.at(offset));
    return node_output_of(*n.right, states, offset + n.left->leaves);
}

HybridSection node_input_of(const ComposedMachine::Node& n,
                            const std::vector<HybridSection>& states, std::size_t offset) {
    if (n.leaf) return n.leaf->to_input.apply(states.at(offset));
    return node_input_of(*n.left, states, offset);
}

void node_check(const ComposedMachine::Node& n, const std::vector<HybridSection>& states,
                std::size_t offset, double eps, CompatReport* report, std::string* name_out) {
    if (n.leaf) {
        *name_out = n.leaf->name;
        return;
    }
    std::string left_name, right_name;
    node_check(*n.left, states, offset, eps, report, &left_name);
    node_check(*n.right, states, offset + n.left->leaves, eps, report, &right_name);
    *name_out = left_name + "+" + right_name;

    HybridSection pushed = n.link.apply(node_output_of(*n.left, states, offset));
    HybridSection consumed = node_input_of(*n.right, states, offset + n.left->leaves);
    std::string wire = left_name + " -> " + right_name +
                       (n.link.name == "identity" ? "" : " via " + n.link.name);
    if (auto miss = first_mismatch(wire, pushed, consumed, eps)) {
        report->wires.push_back(*miss);
    } else {
        report->wires.push_back(WireCheck{wire, true, std::nullopt, ""});
    }
}

}  // namespace

ComposedMachine::ComposedMachine(Machine m) : leaves_(1) {
    auto node = std::make_shared<Node>();
    node->leaf = std::move(m);
    node->leaves = 1;
    root_ = node;
}

ComposedMachine::ComposedMachine(ComposedMachine left, SectionMorphism link,
                                 ComposedMachine right) {
    const std::string out_type = node_output(*left.root_)->describe();
    const std::string in_type = node_input(*right.root_)->describe();
    if (!link.source_type.empty() && link.source_type != out_type) {
        throw WiringError("link '" + link.name + "' expects " + link.source_type +
                          " but the left machine outputs " + out_type);
    }
    if (!link.target_type.empty() && link.target_type != in_type) {
        throw WiringError("link '" + link.name + "' lands in " + link.target_type +
                          " but the right machine consumes " + in_type);
    }
    if (link.source_type.empty() && out_type != in_type) {
        throw WiringError("wired sheaves differ (" + out_type + " vs " + in_type +
                          ") and no morphism was attached");
    }
    auto node = std::make_shared<Node>();
    node->left = left.root_;
    node->right = right.root_;
    node->link = std::move(link);
    node->leaves = left.leaves_ + right.leaves_;
    leaves_ = node->leaves;
    root_ = node;
}

const RealizedSheafPtr& ComposedMachine::input_sheaf() const { return node_input(*root_); }
const RealizedSheafPtr& ComposedMachine::output_sheaf() const { return node_output(*root_); }
Duration ComposedMachine::period() const { return node_period(*root_); }

std::vector<HybridSection> ComposedMachine::execute(const HybridSection& input,
                                                    const Duration& horizon) const {
    std::vector<HybridSection> states;
    states.reserve(leaves_);
    node_execute(*root_, input, horizon, &states);
    return states;
}

HybridSection ComposedMachine::input_of(const std::vector<HybridSection>& states) const {
    return node_input_of(*root_, states, 0);
}

HybridSection ComposedMachine::output_of(const std::vector<HybridSection>& states) const {
    return node_output_of(*root_, states, 0);
}

CompatReport ComposedMachine::check_compatibility(const std::vector<HybridSection>& states,
                                                  double eps) const {
    if (states.size() != leaves_) {
        throw Error("state tuple has " + std::to_string(states.size()) + " entries, expected " +
                    std::to_string(leaves_));
    }
    for (std::size_t i = 1; i < states.size(); ++i) {
        if (states[i].length() != states[0].length()) {
            throw Error("component state sections have different lengths");
        }
    }
    CompatReport report;
    std::string name;
    node_check(*root_, states, 0, eps, &report, &name);
    return report;
}

ComposedMachine compose_series(Machine m1, SectionMorphism g, Machine m2) {
    return ComposedMachine(ComposedMachine(std::move(m1)), std::move(g),
                           ComposedMachine(std::move(m2)));
}

ComposedMachine compose_series(ComposedMachine m1, SectionMorphism g, ComposedMachine m2) {
    return ComposedMachine(std::move(m1), std::move(g), std::move(m2));
}

// --- wiring diagram syntax --------------------------------------------------------

const PortDecl* BoxDecl::find_input(const std::string& port) const {
    for (const auto& p : inputs) {
        if (p.name == port) return &p;
    }
    return nullptr;
}

const PortDecl* BoxDecl::find_output(const std::string& port) const {
    for (const auto& p : outputs) {
        if (p.name == port) return &p;
    }
    return nullptr;
}

const BoxDecl* WiringDiagram::find_box(const std::string& name) const {
    for (const auto& b : boxes) {
        if (b.name == name) return &b;
    }
    return nullptr;
}

void WiringDiagram::validate(const std::map<std::string, MorphismSig>& morphisms) const {
    std::map<std::string, int> seen_inputs;  // "box.port" -> wire count
    for (const auto& w : wires) {
        const BoxDecl* src = find_box(w.src_box);
        if (!src) {
            throw WiringError("wire references undeclared box '" + w.src_box + "' (line " +
                              std::to_string(w.line) + ")");
        }
        const BoxDecl* dst = find_box(w.dst_box);
        if (!dst) {
            throw WiringError("wire references undeclared box '" + w.dst_box + "' (line " +
                              std::to_string(w.line) + ")");
        }
        const PortDecl* out = src->find_output(w.src_port);
        if (!out) {
            throw WiringError("box '" + w.src_box + "' has no output port '" + w.src_port +
                              "' (line " + std::to_string(w.line) + ")");
        }
        const PortDecl* in = dst->find_input(w.dst_port);
        if (!in) {
            throw WiringError("box '" + w.dst_box + "' has no input port '" + w.dst_port +
                              "' (line " + std::to_string(w.line) + ")");
        }
        if (++seen_inputs[w.dst_box + "." + w.dst_port] > 1) {
            throw WiringError("input port " + w.dst_box + "." + w.dst_port +
                              " is fed by more than one wire (line " + std::to_string(w.line) +
                              ")");
        }
        if (w.morphism.empty()) {
            if (out->type != in->type) {
                throw WiringError("wire " + w.src_box + "." + w.src_port + " -> " + w.dst_box +
                                  "." + w.dst_port + " connects " + out->type + " to " +
                                  in->type + " without a morphism (line " +
                                  std::to_string(w.line) + ")");
            }
        } else if (auto it = morphisms.find(w.morphism); it != morphisms.end()) {
            if (it->second.from != out->type || it->second.to != in->type) {
                throw WiringError("morphism '" + w.morphism + "' maps " + it->second.from +
                                  " to " + it->second.to + ", which does not fit wire " +
                                  w.src_box + "." + w.src_port + " -> " + w.dst_box + "." +
                                  w.dst_port + " (line " + std::to_string(w.line) + ")");
            }
        }
    }
    for (const auto& e : externals) {
        const BoxDecl* b = find_box(e.box);
        if (!b) {
            throw WiringError("external port references undeclared box '" + e.box + "' (line " +
                              std::to_string(e.line) + ")");
        }
        if (e.is_input && !b->find_input(e.port)) {
            throw WiringError("box '" + e.box + "' has no input port '" + e.port + "' (line " +
                              std::to_string(e.line) + ")");
        }
        if (!e.is_input && !b->find_output(e.port)) {
            throw WiringError("box '" + e.box + "' has no output port '" + e.port + "' (line " +
                              std::to_string(e.line) + ")");
        }
        if (e.is_input && seen_inputs.count(e.box + "." + e.port)) {
            throw WiringError("port " + e.box + "." + e.port +
                              " is both wired and external (line " + std::to_string(e.line) +
                              ")");
        }
    }
}

std::string WiringDiagram::summary() const {
    std::ostringstream os;
    os << boxes.size() << " boxes, " << wires.size() << " wires, " << externals.size()
       << " external ports\n";
    for (const auto& b : boxes) {
        os << "  box " << b.name << " : " << b.machine_ref << " (";
        for (std::size_t i = 0; i < b.inputs.size(); ++i) {
            os << (i ? ", " : "in ") << b.inputs[i].name << ":" << b.inputs[i].type;
        }
        os << (b.inputs.empty() ? "in -" : "") << "; ";
        for (std::size_t i = 0; i < b.outputs.size(); ++i) {
            os << (i ? ", " : "out ") << b.outputs[i].name << ":" << b.outputs[i].type;
        }
        os << (b.outputs.empty() ? "out -" : "") << ")\n";
    }
    for (const auto& w : wires) {
        os << "  wire " << w.src_box << "." << w.src_port << " -> " << w.dst_box << "."
           << w.dst_port;
        if (!w.morphism.empty()) os << " via " << w.morphism;
        os << "\n";
    }
    for (const auto& e : externals) {
        os << "  external " << (e.is_input ? "in  " : "out ") << e.box << "." << e.port << "\n";
    }
    return os.str();
}

namespace {

struct Token {
    std::string text;
    int line;
    int column;
};

std::vector<Token> tokenize_wiring(const std::string& text) {
    std::vector<Token> tokens;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto push = [&](std::size_t start, std::size_t end, int l, int c) {
        if (end > start) tokens.push_back({text.substr(start, end - start), l, c});
    };
    std::size_t word_start = 0;
    int word_line = 1, word_col = 1;
    bool in_word = false;
    while (i <= text.size()) {
        char ch = i < text.size() ? text[i] : '\n';
        if (ch == '#') {  // comment to end of line
            if (in_word) push(word_start, i, word_line, word_col), in_word = false;
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(ch)) || ch == ';' || ch == '{' || ch == '}' ||
            ch == ':') {
            if (in_word) push(word_start, i, word_line, word_col), in_word = false;
            if (ch == ';' || ch == '{' || ch == '}' || ch == ':') {
                tokens.push_back({std::string(1, ch), line, col});
            }
            if (ch == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
            continue;
        }
        if (!in_word) {
            in_word = true;
            word_start = i;
            word_line = line;
            word_col = col;
        }
        ++i;
        ++col;
    }
    return tokens;
}

std::pair<std::string, std::string> split_endpoint(const Token& t) {
    auto dot = t.text.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == t.text.size()) {
        throw ParseError("expected <box>.<port>, got '" + t.text + "'", t.line, t.column);
    }
    return {t.text.substr(0, dot), t.text.substr(dot + 1)};
}

}  // namespace

WiringDiagram parse_wiring(const std::string& text) {
    WiringDiagram d;
    auto tokens = tokenize_wiring(text);
    std::size_t i = 0;
    auto peek = [&]() -> const Token* { return i < tokens.size() ? &tokens[i] : nullptr; };
    auto next = [&](const char* what) -> const Token& {
        if (i >= tokens.size()) {
            int l = tokens.empty() ? 1 : tokens.back().line;
            throw ParseError(std::string("expected ") + what + " but the file ended", l, 1);
        }
        return tokens[i++];
    };
    auto expect = [&](const std::string& s) {
        const Token& t = next(("'" + s + "'").c_str());
        if (t.text != s) {
            throw ParseError("expected '" + s + "', got '" + t.text + "'", t.line, t.column);
        }
    };

    while (const Token* t = peek()) {
        if (t->text == "box") {
            ++i;
            BoxDecl box;
            box.name = next("box name").text;
            if (d.find_box(box.name)) {
                throw ParseError("duplicate box '" + box.name + "'", t->line, t->column);
            }
            expect(":");
            box.machine_ref = next("machine reference").text;
            expect("{");
            while (peek() && peek()->text != "}") {
                const Token& kind = next("'in' or 'out'");
                if (kind.text != "in" && kind.text != "out") {
                    throw ParseError("expected 'in' or 'out', got '" + kind.text + "'", kind.line,
                                     kind.column);
                }
                PortDecl port;
                port.name = next("port name").text;
                expect(":");
                port.type = next("port type").text;
                expect(";");
                auto& list = kind.text == "in" ? box.inputs : box.outputs;
                for (const auto& p : list) {
                    if (p.name == port.name) {
                        throw ParseError("duplicate port '" + port.name + "' on box '" +
                                             box.name + "'",
                                         kind.line, kind.column);
                    }
                }
                list.push_back(port);
            }
            expect("}");
            d.boxes.push_back(std::move(box));
        } else if (t->text == "wire") {
            ++i;
            WireDecl w;
            w.line = t->line;
            const Token& src = next("source endpoint");
            std::tie(w.src_box, w.src_port) = split_endpoint(src);
            expect("->");
            const Token& dst = next("target endpoint");
            std::tie(w.dst_box, w.dst_port) = split_endpoint(dst);
            if (peek() && peek()->text == "via") {
                ++i;
                w.morphism = next("morphism name").text;
            }
            expect(";");
            d.wires.push_back(std::move(w));
        } else if (t->text == "external") {
            ++i;
            ExternalDecl e;
            e.line = t->line;
            const Token& dir = next("'in' or 'out'");
            if (dir.text != "in" && dir.text != "out") {
                throw ParseError("expected 'in' or 'out', got '" + dir.text + "'", dir.line,
                                 dir.column);
            }
            e.is_input = dir.text == "in";
            const Token& ep = next("endpoint");
            std::tie(e.box, e.port) = split_endpoint(ep);
            expect(";");
            d.externals.push_back(std::move(e));
        } else {
            throw ParseError("expected 'box', 'wire' or 'external', got '" + t->text + "'",
                             t->line, t->column);
        }
    }
    return d;
}

// --- bound diagrams and the co-simulation scheduler -----------------------------------

void BoundDiagram::bind_machine(const std::string& box, Machine m) {
    machines[box] = std::move(m);
}

void BoundDiagram::bind_guard(const std::string& box, GuardFunction g) {
    guards[box] = std::move(g);
}

void BoundDiagram::bind_morphism(const std::string& name, SectionMorphism m) {
    morphisms[name] = std::move(m);
}

Duration BoundDiagram::sampling_period() const {
    Duration tau(0);
    auto merge = [&](const Duration& p, const std::string& who) {
        if (p.is_zero()) return;
        if (tau.is_zero()) {
            tau = p;
        } else if (tau != p) {
            throw WiringError("sampling periods disagree: " + tau.str() + " vs " + p.str() +
                              " (" + who + ")");
        }
    };
    for (const auto& [name, m] : machines) merge(m.period, name);
    for (const auto& [name, g] : guards) merge(g.event_alphabet.period, name);
    if (tau.is_zero()) {
        throw WiringError("diagram has no sampled machine, so no schedule exists");
    }
    return tau;
}

void BoundDiagram::validate() const {
    shape.validate();
    for (const auto& b : shape.boxes) {
        bool has_machine = machines.count(b.name) > 0;
        bool has_guard = guards.count(b.name) > 0;
        if (has_machine == has_guard) {
            throw WiringError("box '" + b.name +
                              "' must be bound to exactly one machine or guard");
        }
        if (has_machine && b.inputs.size() != 1) {
            throw WiringError("machine box '" + b.name + "' needs exactly one input port");
        }
    }
    for (const auto& w : shape.wires) {
        if (!w.morphism.empty() && !morphisms.count(w.morphism)) {
            throw WiringError("wire morphism '" + w.morphism + "' is not bound");
        }
    }
    // every cycle must pass through a guard box; otherwise there is no causal
    // order in which to run a period
    std::map<std::string, std::vector<std::string>> succ;
    std::map<std::string, int> indeg;
    for (const auto& b : shape.boxes) indeg[b.name] = 0;
    for (const auto& w : shape.wires) {
        if (guards.count(w.dst_box)) continue;  // sampling breaks the loop
        succ[w.src_box].push_back(w.dst_box);
        indeg[w.dst_box] += 1;
    }
    std::deque<std::string> ready;
    for (const auto& [name, deg] : indeg) {
        if (deg == 0) ready.push_back(name);
    }
    std::size_t seen = 0;
    while (!ready.empty()) {
        std::string b = ready.front();
        ready.pop_front();
        ++seen;
        for (const auto& s : succ[b]) {
            if (--indeg[s] == 0) ready.push_back(s);
        }
    }
    if (seen != shape.boxes.size()) {
        throw CausalityError(
            "the diagram has a feedback loop with no sampling point; continuous algebraic "
            "loops cannot be scheduled");
    }
}

namespace {

struct WireLookup {
    const WireDecl* wire = nullptr;  // null when externally fed
};

PointValue normalize_sample(PointValue v) {
    if (!v.scalar && v.state && v.state->size() == 1) {
        v.scalar = (*v.state)[0];
    }
    return v;
}

}  // namespace

DiagramTrace execute(const BoundDiagram& diagram,
                     const std::map<std::string, HybridSection>& external_inputs,
                     const Duration& horizon) {
    diagram.validate();
    const Duration tau = diagram.sampling_period();
    std::int64_t periods = horizon.floor_div(tau);
    const Duration h = tau * Rational(periods);
    if (h != horizon) {
        warn("diagram horizon " + horizon.str() + " truncated down to " + h.str());
    }

    // wire into each input port, if any
    std::map<std::string, const WireDecl*> feed;  // "box.port" -> wire
    for (const auto& w : diagram.shape.wires) {
        feed[w.dst_box + "." + w.dst_port] = &w;
    }
    auto morph_of = [&](const WireDecl& w) -> const SectionMorphism* {
        if (w.morphism.empty()) return nullptr;
        return &diagram.morphisms.at(w.morphism);
    };
    auto external_for = [&](const std::string& box, const std::string& port) {
        auto it = external_inputs.find(box + "." + port);
        if (it == external_inputs.end()) {
            throw WiringError("input port " + box + "." + port +
                              " is neither wired nor externally provided");
        }
        if (it->second.length() < h) {
            throw Error("external input " + box + "." + port + " covers only [0," +
                        it->second.length().str() + "] of the horizon " + h.str());
        }
        return it->second.restrict(Duration(0), h);
    };

    // shadow state for the period loop
    struct EventShadow {
        Label state;
        const Machine* machine;
        const WireDecl* in_wire;
        std::optional<HybridSection> external;
    };
    struct GuardShadow {
        const GuardFunction* guard;
        std::vector<Label> events;
    };
    struct CdsShadow {
        const Machine* machine;
        Eigen::VectorXd x;
        const WireDecl* in_wire;
        std::optional<HybridSection> external;
        std::vector<std::pair<double, Duration>> runs;
    };
    std::map<std::string, EventShadow> event_boxes;
    std::map<std::string, GuardShadow> guard_boxes;
    std::map<std::string, CdsShadow> cds_boxes;

    for (const auto& b : diagram.shape.boxes) {
        if (auto it = diagram.guards.find(b.name); it != diagram.guards.end()) {
            guard_boxes[b.name] = GuardShadow{&it->second, {}};
            continue;
        }
        const Machine& m = diagram.machines.at(b.name);
        const std::string key = b.name + "." + b.inputs[0].name;
        const WireDecl* w = feed.count(key) ? feed.at(key) : nullptr;
        if (m.kind == MachineKind::Event) {
            EventShadow s;
            s.state = m.lts->initial;
            s.machine = &m;
            s.in_wire = w;
            if (!w) s.external = external_for(b.name, b.inputs[0].name);
            event_boxes[b.name] = std::move(s);
        } else if (m.kind == MachineKind::Continuous) {
            CdsShadow s;
            s.machine = &m;
            s.x = m.cds->x0;
            s.in_wire = w;
            if (!w) s.external = external_for(b.name, b.inputs[0].name);
            cds_boxes[b.name] = std::move(s);
        }
        // map boxes carry no shadow state
    }

    // output value of a box at a sample instant (left limit)
    auto sample_output = [&](const std::string& box, const Duration& t) -> PointValue {
        if (auto it = event_boxes.find(box); it != event_boxes.end()) {
            PointValue v;
            v.label = it->second.machine->lts->output_of(it->second.state);
            return v;
        }
        if (auto it = cds_boxes.find(box); it != cds_boxes.end()) {
            PointValue v;
            v.state = it->second.machine->cds->sys.C * it->second.x;
            return normalize_sample(v);
        }
        throw WiringError("guards can sample event and continuous boxes only, not '" + box +
                          "' (t=" + t.str() + ")");
    };

    // output cell of a box over one period, for feeding continuous inputs
    std::function<FlowCell(const std::string&, std::int64_t)> cell_on_period =
        [&](const std::string& box, std::int64_t k) -> FlowCell {
        if (auto it = event_boxes.find(box); it != event_boxes.end()) {
            FlowCell c;
            c.length = tau;
            ConstantFlow f;
            f.label = it->second.machine->lts->output_of(it->second.state);
            f.phase0 = Rational(0);
            c.flow = f;
            return c;
        }
        if (auto it = guard_boxes.find(box); it != guard_boxes.end()) {
            FlowCell c;
            c.length = tau;
            ConstantFlow f;
            f.label = "*";
            f.phase0 = Rational(0);
            c.flow = f;
            return c;
        }
        const Machine& m = diagram.machines.at(box);
        if (m.kind != MachineKind::Map) {
            throw WiringError("continuous outputs cannot drive other continuous inputs "
                              "without a sampling point ('" +
                              box + "')");
        }
        const BoxDecl* decl = diagram.shape.find_box(box);
        const std::string key = box + "." + decl->inputs[0].name;
        if (!feed.count(key)) {
            HybridSection ext = external_for(box, decl->inputs[0].name);
            Duration lo = tau * Rational(k);
            HybridSection piece = ext.restrict(lo, lo + tau);
            if (piece.cells().size() != 1) {
                throw WiringError("external input to '" + box +
                                  "' is not constant over a period");
            }
            return piece.cells()[0];
        }
        const WireDecl* w = feed.at(key);
        FlowCell upstream = cell_on_period(w->src_box, k);
        if (const SectionMorphism* g = morph_of(*w)) {
            upstream = g->cell_map ? g->cell_map(upstream) : upstream;
        }
        return m.to_output.cell_map ? m.to_output.cell_map(upstream) : upstream;
    };

    // --- the period loop ---
    for (std::int64_t k = 0; k < periods; ++k) {
        const Duration t = tau * Rational(k);

        // 1. all guards sample simultaneously (synchronized exchange), then fire
        std::map<std::string, Label> fired;
        for (auto& [name, g] : guard_boxes) {
            std::map<std::string, PointValue> samples;
            for (const auto& port : g.guard->ports) {
                const std::string key = name + "." + port;
                if (feed.count(key)) {
                    samples[port] = normalize_sample(sample_output(feed.at(key)->src_box, t));
                } else {
                    HybridSection ext = external_for(name, port);
                    samples[port] = normalize_sample(ext.value_at(t, Side::Left));
                }
            }
            fired[name] = g.guard->fire(samples);
        }
        for (auto& [name, g] : guard_boxes) g.events.push_back(fired.at(name));

        // 2. event machines consume this period's event
        for (auto& [name, s] : event_boxes) {
            std::optional<Label> event;
            if (s.in_wire) {
                if (guard_boxes.count(s.in_wire->src_box)) {
                    event = fired.at(s.in_wire->src_box);
                } else {
                    throw WiringError("event machine '" + name +
                                      "' must be fed by a guard or externally");
                }
            } else {
                if (const JumpEdge* e = s.external->edge_at(t); e && !e->identity) {
                    event = e->tag.at(0);
                }
            }
            if (event) {
                auto next = s.machine->lts->transition(*event, s.state);
                if (!next) {
                    throw DomainError("event '" + *event + "' at t=" + t.str() +
                                      " has no transition from state '" + s.state + "'");
                }
                s.state = *next;
            }
        }

        // 3. continuous machines hold their input constant over the period
        for (auto& [name, s] : cds_boxes) {
            if (s.in_wire) {
                FlowCell cell = cell_on_period(s.in_wire->src_box, k);
                if (const SectionMorphism* g = morph_of(*s.in_wire)) {
                    cell = g->cell_map ? g->cell_map(cell) : cell;
                }
                const auto* f = std::get_if<ConstantFlow>(&cell.flow);
                if (!f || !f->value) {
                    throw WiringError("input to continuous box '" + name +
                                      "' is not a constant level");
                }
                s.runs.push_back({*f->value, tau});
                Eigen::VectorXd u = Eigen::VectorXd::Constant(1, *f->value);
                s.x = propagate_affine(s.machine->cds->sys, s.x, u, tau.to_double());
            } else {
                HybridSection piece = s.external->restrict(t, t + tau);
                for (const auto& c : piece.cells()) {
                    const auto& f = std::get<ConstantFlow>(c.flow);
                    s.runs.push_back({*f.value, c.length});
                    Eigen::VectorXd u = Eigen::VectorXd::Constant(1, *f.value);
                    s.x = propagate_affine(s.machine->cds->sys, s.x, u, c.length.to_double());
                }
            }
        }
    }

    // --- assembly: guards first, then machines in topological order ---
    DiagramTrace trace;
    for (auto& [name, g] : guard_boxes) {
        BoxTrace bt;
        if (periods == 0) {
            PointValue v;
            v.label = "*";
            v.phase = Rational(0);
            bt.output = HybridSection::point(identity_edge(v));
        } else {
            bt.output = make_lts_input(g.guard->event_alphabet, g.events, true);
        }
        bt.state = bt.output;
        trace.boxes[name] = std::move(bt);
    }

    std::map<std::string, std::vector<std::string>> succ;
    std::map<std::string, int> indeg;
    std::deque<std::string> ready;
    for (const auto& b : diagram.shape.boxes) {
        if (guard_boxes.count(b.name)) continue;
        indeg[b.name] = 0;
    }
    for (const auto& w : diagram.shape.wires) {
        if (guard_boxes.count(w.dst_box) || guard_boxes.count(w.src_box)) continue;
        succ[w.src_box].push_back(w.dst_box);
        indeg[w.dst_box] += 1;
    }
    for (const auto& [name, deg] : indeg) {
        if (deg == 0) ready.push_back(name);
    }
    while (!ready.empty()) {
        const std::string name = ready.front();
        ready.pop_front();
        const Machine& m = diagram.machines.at(name);
        const BoxDecl* decl = diagram.shape.find_box(name);
        const std::string key = name + "." + decl->inputs[0].name;

        BoxTrace bt;
        HybridSection input = [&]() -> HybridSection {
            if (!feed.count(key)) return external_for(name, decl->inputs[0].name);
            const WireDecl* w = feed.at(key);
            HybridSection upstream = trace.boxes.at(w->src_box).output;
            if (const SectionMorphism* g = morph_of(*w)) return g->apply(upstream);
            return upstream;
        }();
        bt.consumed[decl->inputs[0].name] = input;
        bt.state = m.run(input, h);
        bt.output = m.to_output.apply(bt.state);
        trace.boxes[name] = std::move(bt);
        for (const auto& s : succ[name]) {
            if (--indeg[s] == 0) ready.push_back(s);
        }
    }

    // guards' consumed inputs, now that every output exists
    for (const auto& [name, g] : guard_boxes) {
        for (const auto& port : g.guard->ports) {
            const std::string key = name + "." + port;
            if (feed.count(key)) {
                const WireDecl* w = feed.at(key);
                HybridSection upstream = trace.boxes.at(w->src_box).output;
                trace.boxes[name].consumed[port] =
                    morph_of(*w) ? morph_of(*w)->apply(upstream) : upstream;
            } else {
                trace.boxes[name].consumed[port] = external_for(name, port);
            }
        }
    }

    trace.compatibility = check_compatibility(diagram, trace.boxes);
    return trace;
}

CompatReport check_compatibility(const BoundDiagram& diagram,
                                 const std::map<std::string, BoxTrace>& boxes, double eps) {
    CompatReport report;
    for (const auto& w : diagram.shape.wires) {
        const std::string wire_name = w.src_box + "." + w.src_port + " -> " + w.dst_box + "." +
                                      w.dst_port +
                                      (w.morphism.empty() ? "" : " via " + w.morphism);
        const BoxTrace& src = boxes.at(w.src_box);
        const BoxTrace& dst = boxes.at(w.dst_box);
        HybridSection pushed = src.output;
        if (!w.morphism.empty()) pushed = diagram.morphisms.at(w.morphism).apply(pushed);

        HybridSection consumed = [&]() -> HybridSection {
            if (diagram.guards.count(w.dst_box)) return dst.consumed.at(w.dst_port);
            // independent recomputation: project the consumed input out of the
            // destination's state section
            return diagram.machines.at(w.dst_box).to_input.apply(dst.state);
        }();
        if (auto miss = first_mismatch(wire_name, pushed, consumed, eps)) {
            report.wires.push_back(*miss);
        } else {
            report.wires.push_back(WireCheck{wire_name, true, std::nullopt, ""});
        }
    }

    // guards: refire every sample against the final sections and compare
    for (const auto& [name, guard] : diagram.guards) {
        const BoxTrace& bt = boxes.at(name);
        WireCheck check;
        check.wire = name + ".samples";
        check.compatible = true;
        const Duration tau = guard.event_alphabet.period;
        std::int64_t periods = bt.output.length().floor_div(tau);
        for (std::int64_t k = 0; k < periods && check.compatible; ++k) {
            const Duration t = tau * Rational(k);
            std::map<std::string, PointValue> samples;
            for (const auto& port : guard.ports) {
                samples[port] =
                    normalize_sample(bt.consumed.at(port).value_at(t, Side::Left));
            }
            Label expect = guard.fire(samples);
            const JumpEdge* e = bt.output.edge_at(t);
            Label got = (e && !e->identity) ? e->tag.at(0) : "";
            if (got != expect) {
                check.compatible = false;
                check.mismatch_time = t;
                check.detail = "refiring the guard gives '" + expect + "' but the trace has '" +
                               got + "'";
            }
        }
        report.wires.push_back(check);
    }
    return report;
}

}  // namespace ivs
