#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ivs/section.hpp"

namespace ivs {

// A named signal under test: a section plus, for vector-valued flows, the
// component to read.
struct ContractChannel {
    HybridSection section;
    int component = -1;  // -1: scalar (or label) channel
};

using ChannelMap = std::map<std::string, ContractChannel>;

// --- formulas -------------------------------------------------------------------
//
// The safety fragment: label atoms, linear comparisons over signals and
// their time derivatives, and the propositional connectives. Satisfaction is
// indexed by sub-intervals: a formula holds on a window when its clause
// holds there and on the windows below it, so everything checkable here is a
// safety property (restriction-closed by construction).
//
// Windows are the positive-length grid-aligned sub-intervals. Zero-length
// restrictions are behaviors' boundary edges, not worlds of the semantics;
// an atom at a jump instant strictly inside a window is evaluated on the
// jump itself (a label atom needs every component of the transition pair to
// match), while a window boundary reads the one-sided flow value into the
// window.

enum class Rel { Eq, Ne, Lt, Le, Gt, Ge };

struct SignalTerm {
    double coeff = 1.0;
    bool derivative = false;
    std::string channel;
};

struct LinExpr {
    double constant = 0.0;
    std::vector<SignalTerm> terms;

    std::string str() const;
};

class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

class Formula {
  public:
    enum class Kind { True, False, EqLabel, Compare, Not, And, Or, Implies };

    Kind kind = Kind::True;
    std::string channel;  // EqLabel
    Label label;          // EqLabel
    LinExpr lhs, rhs;     // Compare
    Rel rel = Rel::Eq;    // Compare
    FormulaPtr a, b;      // children

    static FormulaPtr truth();
    static FormulaPtr falsity();
    static FormulaPtr eq_label(std::string channel, Label label);
    static FormulaPtr compare(LinExpr lhs, Rel rel, LinExpr rhs);
    static FormulaPtr negate(FormulaPtr f);
    static FormulaPtr conj(FormulaPtr a, FormulaPtr b);
    static FormulaPtr disj(FormulaPtr a, FormulaPtr b);
    static FormulaPtr implies(FormulaPtr a, FormulaPtr b);

    // channels mentioned anywhere in the formula
    std::vector<std::string> channels() const;

    std::string str() const;
};

// Concrete syntax, e.g. "(P = climb) => (deriv(theta) = 0.02)" with
// connectives & | ! =>, comparisons = != < <= > >=, and linear expressions
// over signals, deriv(signal), and numeric constants. A bare
// `ident = ident` comparison is a label atom.
FormulaPtr parse_formula(const std::string& text);

// --- checking --------------------------------------------------------------------

struct GridSpec {
    int density = 10;  // uniform subdivisions per breakpoint gap
    std::optional<std::vector<Duration>> explicit_points;
    double compare_eps = kCompareEps;  // absolute tolerance of numeric atoms
};

struct SatisfactionResult {
    bool holds = false;
    std::optional<std::pair<Duration, Duration>> witness;  // a failing window
    std::string detail;
};

// Satisfaction of f over the full common interval of the channels. All
// channels must have equal length; the checking grid is the union of their
// breakpoints refined `density`-fold (or the explicit points, which must
// contain every breakpoint). On failure the witness is a sub-window that
// fails in isolation.
SatisfactionResult check(const FormulaPtr& f, const ChannelMap& channels,
                         const GridSpec& grid = {});

// Time derivative of a channel at a point strictly inside a flow cell:
// analytic for affine segments, zero for constant cells, central finite
// difference for sampled trajectories. A jump or cell boundary is an error.
double deriv(const ContractChannel& channel, const Duration& t);

// Exhaustive restriction closure at desk scale: re-checks f on every
// grid-aligned window of the channels (with the inherited grid) and reports
// whether it held everywhere. Requires check(f, channels, grid) to hold.
bool verify_restriction_closure(const FormulaPtr& f, const ChannelMap& channels,
                                const GridSpec& grid = {});

}  // namespace ivs
