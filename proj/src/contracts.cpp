#include "ivs/contracts.hpp"

#include <algorithm>
#include <functional>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace ivs {

// --- formula construction -------------------------------------------------------

namespace {

FormulaPtr make_node(Formula f) { return std::make_shared<Formula>(std::move(f)); }

}  // namespace

FormulaPtr Formula::truth() {
    Formula f;
    f.kind = Kind::True;
    return make_node(std::move(f));
}

FormulaPtr Formula::falsity() {
    Formula f;
    f.kind = Kind::False;
    return make_node(std::move(f));
}

FormulaPtr Formula::eq_label(std::string channel, Label label) {
    Formula f;
    f.kind = Kind::EqLabel;
    f.channel = std::move(channel);
    f.label = std::move(label);
    return make_node(std::move(f));
}

FormulaPtr Formula::compare(LinExpr lhs, Rel rel, LinExpr rhs) {
    Formula f;
    f.kind = Kind::Compare;
    f.lhs = std::move(lhs);
    f.rhs = std::move(rhs);
    f.rel = rel;
    return make_node(std::move(f));
}

FormulaPtr Formula::negate(FormulaPtr f) {
    Formula g;
    g.kind = Kind::Not;
    g.a = std::move(f);
    return make_node(std::move(g));
}

FormulaPtr Formula::conj(FormulaPtr a, FormulaPtr b) {
    Formula g;
    g.kind = Kind::And;
    g.a = std::move(a);
    g.b = std::move(b);
    return make_node(std::move(g));
}

FormulaPtr Formula::disj(FormulaPtr a, FormulaPtr b) {
    Formula g;
    g.kind = Kind::Or;
    g.a = std::move(a);
    g.b = std::move(b);
    return make_node(std::move(g));
}

FormulaPtr Formula::implies(FormulaPtr a, FormulaPtr b) {
    Formula g;
    g.kind = Kind::Implies;
    g.a = std::move(a);
    g.b = std::move(b);
    return make_node(std::move(g));
}

std::string LinExpr::str() const {
    std::ostringstream os;
    bool first = true;
    if (constant != 0.0 || terms.empty()) {
        os << constant;
        first = false;
    }
    for (const auto& t : terms) {
        if (!first) os << " + ";
        first = false;
        if (t.coeff != 1.0) os << t.coeff << "*";
        os << (t.derivative ? "deriv(" + t.channel + ")" : t.channel);
    }
    return os.str();
}

std::vector<std::string> Formula::channels() const {
    std::set<std::string> seen;
    std::function<void(const Formula&)> walk = [&](const Formula& f) {
        switch (f.kind) {
            case Kind::EqLabel:
                seen.insert(f.channel);
                break;
            case Kind::Compare:
                for (const auto& t : f.lhs.terms) seen.insert(t.channel);
                for (const auto& t : f.rhs.terms) seen.insert(t.channel);
                break;
            default:
                break;
        }
        if (f.a) walk(*f.a);
        if (f.b) walk(*f.b);
    };
    walk(*this);
    return {seen.begin(), seen.end()};
}

std::string Formula::str() const {
    switch (kind) {
        case Kind::True:
            return "true";
        case Kind::False:
            return "false";
        case Kind::EqLabel:
            return "(" + channel + " = " + label + ")";
        case Kind::Compare: {
            const char* ops[] = {"=", "!=", "<", "<=", ">", ">="};
            return "(" + lhs.str() + " " + ops[static_cast<int>(rel)] + " " + rhs.str() + ")";
        }
        case Kind::Not:
            return "!" + a->str();
        case Kind::And:
            return "(" + a->str() + " & " + b->str() + ")";
        case Kind::Or:
            return "(" + a->str() + " | " + b->str() + ")";
        case Kind::Implies:
            return "(" + a->str() + " => " + b->str() + ")";
    }
    return "?";
}

// --- parser ------------------------------------------------------------------------

namespace {

struct FTok {
    std::string text;
    int column;
};

std::vector<FTok> lex_formula(const std::string& text) {
    std::vector<FTok> out;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        int col = static_cast<int>(i) + 1;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) {
                ++j;
            }
            out.push_back({text.substr(i, j - i), col});
            i = j;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            std::size_t j = i;
            while (j < text.size() && (std::isdigit(static_cast<unsigned char>(text[j])) ||
                                       text[j] == '.' || text[j] == 'e' || text[j] == 'E' ||
                                       ((text[j] == '+' || text[j] == '-') && j > i &&
                                        (text[j - 1] == 'e' || text[j - 1] == 'E')))) {
                ++j;
            }
            out.push_back({text.substr(i, j - i), col});
            i = j;
            continue;
        }
        auto two = text.substr(i, 2);
        if (two == "=>" || two == "!=" || two == "<=" || two == ">=") {
            out.push_back({two, col});
            i += 2;
            continue;
        }
        if (std::string("()=<>!&|+-*").find(c) != std::string::npos) {
            out.push_back({std::string(1, c), col});
            ++i;
            continue;
        }
        throw ParseError(std::string("unexpected character '") + c + "' in formula", 1, col);
    }
    return out;
}

class FormulaParser {
  public:
    explicit FormulaParser(const std::string& text) : toks_(lex_formula(text)) {}

    FormulaPtr parse() {
        if (toks_.empty()) throw ParseError("empty formula", 1, 1);
        FormulaPtr f = implication();
        if (pos_ < toks_.size()) {
            throw ParseError("trailing input '" + toks_[pos_].text + "'", 1,
                             toks_[pos_].column);
        }
        return f;
    }

  private:
    const FTok* peek() const { return pos_ < toks_.size() ? &toks_[pos_] : nullptr; }
    FTok take(const char* what) {
        if (pos_ >= toks_.size()) {
            throw ParseError(std::string("expected ") + what + " at end of formula", 1,
                             toks_.empty() ? 1 : toks_.back().column);
        }
        return toks_[pos_++];
    }
    bool accept(const std::string& s) {
        if (peek() && peek()->text == s) {
            ++pos_;
            return true;
        }
        return false;
    }

    FormulaPtr implication() {
        FormulaPtr lhs = disjunction();
        if (accept("=>")) {
            return Formula::implies(lhs, implication());  // right associative
        }
        return lhs;
    }

    FormulaPtr disjunction() {
        FormulaPtr f = conjunction();
        while (accept("|")) f = Formula::disj(f, conjunction());
        return f;
    }

    FormulaPtr conjunction() {
        FormulaPtr f = unary();
        while (accept("&")) f = Formula::conj(f, unary());
        return f;
    }

    FormulaPtr unary() {
        if (accept("!")) return Formula::negate(unary());
        if (accept("(")) {
            FormulaPtr f = implication();
            if (!accept(")")) {
                throw ParseError("missing ')'", 1, peek() ? peek()->column : 1);
            }
            return f;
        }
        if (peek() && peek()->text == "true") {
            ++pos_;
            return Formula::truth();
        }
        if (peek() && peek()->text == "false") {
            ++pos_;
            return Formula::falsity();
        }
        return comparison();
    }

    static bool is_number(const std::string& s) {
        return !s.empty() && (std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '.');
    }

    FormulaPtr comparison() {
        int start_col = peek() ? peek()->column : 1;
        LinExpr lhs = expr();
        FTok op = take("a comparison operator");
        Rel rel;
        if (op.text == "=") {
            rel = Rel::Eq;
        } else if (op.text == "!=") {
            rel = Rel::Ne;
        } else if (op.text == "<") {
            rel = Rel::Lt;
        } else if (op.text == "<=") {
            rel = Rel::Le;
        } else if (op.text == ">") {
            rel = Rel::Gt;
        } else if (op.text == ">=") {
            rel = Rel::Ge;
        } else {
            throw ParseError("expected a comparison, got '" + op.text + "'", 1, op.column);
        }
        // `chan = ident` is a label atom
        if (rel == Rel::Eq && lhs.terms.size() == 1 && !lhs.terms[0].derivative &&
            lhs.terms[0].coeff == 1.0 && lhs.constant == 0.0 && peek() &&
            !is_number(peek()->text) &&
            std::isalpha(static_cast<unsigned char>(peek()->text[0]))) {
            // lookahead: a bare identifier not followed by expression operators
            if (pos_ + 1 >= toks_.size() ||
                (toks_[pos_ + 1].text != "+" && toks_[pos_ + 1].text != "-" &&
                 toks_[pos_ + 1].text != "*" && toks_[pos_ + 1].text != "(")) {
                FTok label = take("a label");
                return Formula::eq_label(lhs.terms[0].channel, label.text);
            }
        }
        LinExpr rhs = expr();
        (void)start_col;
        return Formula::compare(std::move(lhs), rel, std::move(rhs));
    }

    LinExpr expr() {
        LinExpr e;
        double sign = 1.0;
        if (accept("-")) sign = -1.0;
        term(e, sign);
        while (peek() && (peek()->text == "+" || peek()->text == "-")) {
            double s = take("operator").text == "+" ? 1.0 : -1.0;
            term(e, s);
        }
        return e;
    }

    void term(LinExpr& e, double sign) {
        FTok t = take("a term");
        if (is_number(t.text)) {
            double value = std::stod(t.text);
            if (accept("*")) {
                SignalTerm st = signal_atom();
                st.coeff = sign * value;
                e.terms.push_back(st);
            } else {
                e.constant += sign * value;
            }
            return;
        }
        --pos_;
        SignalTerm st = signal_atom();
        st.coeff = sign;
        e.terms.push_back(st);
    }

    SignalTerm signal_atom() {
        FTok t = take("a signal");
        SignalTerm st;
        if (t.text == "deriv") {
            if (!accept("(")) throw ParseError("deriv needs '('", 1, t.column);
            FTok ch = take("a channel name");
            if (!accept(")")) throw ParseError("missing ')' after deriv", 1, ch.column);
            st.derivative = true;
            st.channel = ch.text;
            return st;
        }
        if (is_number(t.text) || !std::isalpha(static_cast<unsigned char>(t.text[0]))) {
            throw ParseError("expected a channel name, got '" + t.text + "'", 1, t.column);
        }
        st.channel = t.text;
        return st;
    }

    std::vector<FTok> toks_;
    std::size_t pos_ = 0;
};

}  // namespace

FormulaPtr parse_formula(const std::string& text) { return FormulaParser(text).parse(); }

// --- evaluation ---------------------------------------------------------------------

namespace {

double channel_number(const ContractChannel& ch, const PointValue& v) {
    if (v.scalar) return *v.scalar;
    if (v.state) {
        int idx = ch.component < 0 ? 0 : ch.component;
        if (idx >= v.state->size()) {
            throw Error("channel component " + std::to_string(idx) + " out of range");
        }
        return (*v.state)[idx];
    }
    throw Error("numeric atom over a symbolic channel");
}

// one-sided value/derivative evaluation within the cell on the given side of t
struct CellRef {
    const FlowCell* cell;
    Duration offset;  // position of t inside the cell
};

std::optional<CellRef> cell_on_side(const HybridSection& s, const Duration& t, Side side) {
    Duration start(0);
    for (const auto& c : s.cells()) {
        Duration end = start + c.length;
        bool hit = side == Side::Right ? (t >= start && t < end) : (t > start && t <= end);
        if (hit) return CellRef{&c, t - start};
        start = end;
    }
    return std::nullopt;
}

double one_sided_deriv(const ContractChannel& ch, const CellRef& ref) {
    const FlowCell& cell = *ref.cell;
    if (std::holds_alternative<ConstantFlow>(cell.flow)) return 0.0;
    if (const auto* a = std::get_if<AffineFlow>(&cell.flow)) {
        Eigen::VectorXd x = a->state_at(ref.offset.to_double());
        Eigen::VectorXd dx = a->sys->A * x + a->sys->B * a->u;
        int idx = ch.component < 0 ? 0 : ch.component;
        return dx[idx];
    }
    // sampled: central difference clamped into the cell
    Duration h = Rational::min(Rational(1, 100000), cell.length);
    Duration lo = ref.offset - h;
    if (lo.is_negative()) lo = Duration(0);
    Duration hi = Rational::min(ref.offset + h, cell.length);
    double dv = channel_number(ch, cell.value_at(hi)) - channel_number(ch, cell.value_at(lo));
    return dv / (hi - lo).to_double();
}

bool rel_ok(double l, Rel rel, double r, double eps) {
    switch (rel) {
        case Rel::Eq:
            return std::abs(l - r) <= eps;
        case Rel::Ne:
            return std::abs(l - r) > eps;
        case Rel::Lt:
        case Rel::Le:
            return l <= r + eps;
        case Rel::Gt:
        case Rel::Ge:
            return l >= r - eps;
    }
    return false;
}

bool edge_label_ok(const JumpEdge& e, const Label& target) {
    if (e.identity) {
        return e.source.label && *e.source.label == target;
    }
    for (const auto& part : e.tag) {
        if (part != target) return false;
    }
    if (e.source.label && *e.source.label != target) return false;
    if (e.target.label && *e.target.label != target) return false;
    return true;
}

struct Table {
    int n = 0;
    std::vector<std::uint8_t> bits;  // [i*n + j], defined for i < j

    std::uint8_t at(int i, int j) const { return bits[i * n + j]; }
    void set(int i, int j, bool v) { bits[i * n + j] = v; }
};

class Checker {
  public:
    Checker(const ChannelMap& channels, const GridSpec& grid) : channels_(channels), grid_(grid) {}

    const std::vector<Duration>& points() const { return points_; }

    void build_grid(const std::vector<std::string>& referenced) {
        if (referenced.empty()) {
            throw Error("formula references no channels; nothing to check");
        }
        for (const auto& name : referenced) {
            if (!channels_.count(name)) {
                throw Error("undeclared channel '" + name + "'");
            }
        }
        const Duration len = channels_.at(referenced[0]).section.length();
        std::set<Duration> breaks;
        for (const auto& name : referenced) {
            const auto& s = channels_.at(name).section;
            if (s.length() != len) {
                throw Error("channel '" + name + "' has length " + s.length().str() +
                            " but others have " + len.str());
            }
            for (const auto& t : s.breakpoints()) breaks.insert(t);
        }
        referenced_ = referenced;
        if (grid_.explicit_points) {
            std::set<Duration> pts(grid_.explicit_points->begin(),
                                   grid_.explicit_points->end());
            pts.insert(Duration(0));
            pts.insert(len);
            for (const auto& b : breaks) {
                if (!pts.count(b)) {
                    throw Error("grid is coarser than the breakpoints: missing " + b.str());
                }
            }
            points_.assign(pts.begin(), pts.end());
            return;
        }
        std::vector<Duration> base(breaks.begin(), breaks.end());
        points_.clear();
        for (std::size_t i = 0; i + 1 < base.size(); ++i) {
            points_.push_back(base[i]);
            for (int k = 1; k < grid_.density; ++k) {
                points_.push_back(base[i] +
                                  (base[i + 1] - base[i]) * Rational(k, grid_.density));
            }
        }
        points_.push_back(base.back());
        std::sort(points_.begin(), points_.end(),
                  [](const Duration& a, const Duration& b) { return a < b; });
        points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
    }

    Table eval(const Formula& f) {
        const int n = static_cast<int>(points_.size());
        Table t;
        t.n = n;
        t.bits.assign(static_cast<std::size_t>(n) * n, 0);
        switch (f.kind) {
            case Formula::Kind::True: {
                for (int i = 0; i < n; ++i) {
                    for (int j = i + 1; j < n; ++j) t.set(i, j, true);
                }
                return t;
            }
            case Formula::Kind::False:
                return t;
            case Formula::Kind::EqLabel:
            case Formula::Kind::Compare:
                return atom_table(f);
            case Formula::Kind::And:
            case Formula::Kind::Or: {
                Table a = eval(*f.a);
                Table b = eval(*f.b);
                for (int i = 0; i < n; ++i) {
                    for (int j = i + 1; j < n; ++j) {
                        bool v = f.kind == Formula::Kind::And ? (a.at(i, j) && b.at(i, j))
                                                              : (a.at(i, j) || b.at(i, j));
                        t.set(i, j, v);
                    }
                }
                return t;
            }
            case Formula::Kind::Not: {
                Table a = eval(*f.a);
                // no sub-window may force the operand
                for (int len = 1; len < n; ++len) {
                    for (int i = 0; i + len < n; ++i) {
                        int j = i + len;
                        bool v = !a.at(i, j);
                        if (len > 1) v = v && t.at(i, j - 1) && t.at(i + 1, j);
                        t.set(i, j, v);
                    }
                }
                return t;
            }
            case Formula::Kind::Implies: {
                Table a = eval(*f.a);
                Table b = eval(*f.b);
                for (int len = 1; len < n; ++len) {
                    for (int i = 0; i + len < n; ++i) {
                        int j = i + len;
                        bool v = !(a.at(i, j) && !b.at(i, j));
                        if (len > 1) v = v && t.at(i, j - 1) && t.at(i + 1, j);
                        t.set(i, j, v);
                    }
                }
                return t;
            }
        }
        return t;
    }

    // witness extraction: a sub-window on which f fails in isolation
    std::pair<std::pair<int, int>, std::string> failing_window(const Formula& f, int i, int j) {
        switch (f.kind) {
            case Formula::Kind::False:
                return {{i, j}, "false holds nowhere"};
            case Formula::Kind::EqLabel:
            case Formula::Kind::Compare: {
                if (!atom_as_left(f, i)) {
                    return {{i, std::min(i + 1, j)}, atom_detail(f, i)};
                }
                if (!atom_as_right(f, j)) {
                    return {{std::max(j - 1, i), j}, atom_detail(f, j)};
                }
                for (int k = i + 1; k < j; ++k) {
                    if (!atom_interior(f, k)) {
                        return {{k - 1, k + 1}, atom_detail(f, k)};
                    }
                }
                return {{i, j}, "atom fails"};
            }
            case Formula::Kind::And: {
                Table a = eval(*f.a);
                if (!a.at(i, j)) return failing_window(*f.a, i, j);
                return failing_window(*f.b, i, j);
            }
            case Formula::Kind::Or:
                return {{i, j}, "both operands fail on this window"};
            case Formula::Kind::Not: {
                Table a = eval(*f.a);
                for (int len = 1; len <= j - i; ++len) {
                    for (int s = i; s + len <= j; ++s) {
                        if (a.at(s, s + len)) {
                            return {{s, s + len}, "the operand holds on this window"};
                        }
                    }
                }
                return {{i, j}, "negation fails"};
            }
            case Formula::Kind::Implies: {
                Table a = eval(*f.a);
                Table b = eval(*f.b);
                for (int len = 1; len <= j - i; ++len) {
                    for (int s = i; s + len <= j; ++s) {
                        if (a.at(s, s + len) && !b.at(s, s + len)) {
                            auto inner = failing_window(*f.b, s, s + len);
                            return {inner.first,
                                    "antecedent holds but the consequent fails: " + inner.second};
                        }
                    }
                }
                return {{i, j}, "implication fails"};
            }
            default:
                return {{i, j}, "fails"};
        }
    }

    bool point_formula(const Formula& f) {
        // degenerate semantics for zero-length sections: the only world is
        // the single boundary edge
        switch (f.kind) {
            case Formula::Kind::True:
                return true;
            case Formula::Kind::False:
                return false;
            case Formula::Kind::EqLabel: {
                const auto& s = channels_.at(f.channel).section;
                return edge_label_ok(s.edges()[0], f.label);
            }
            case Formula::Kind::Compare: {
                auto eval_side = [&](Side side) {
                    auto value = [&](const SignalTerm& t) {
                        const auto& ch = channels_.at(t.channel);
                        const auto& e = ch.section.edges()[0];
                        if (t.derivative) {
                            throw Error("derivative undefined on a zero-length section");
                        }
                        return channel_number(ch, side == Side::Left ? e.source : e.target);
                    };
                    double l = f.lhs.constant, r = f.rhs.constant;
                    for (const auto& t : f.lhs.terms) l += t.coeff * value(t);
                    for (const auto& t : f.rhs.terms) r += t.coeff * value(t);
                    return rel_ok(l, f.rel, r, grid_.compare_eps);
                };
                return eval_side(Side::Left) && eval_side(Side::Right);
            }
            case Formula::Kind::Not:
                return !point_formula(*f.a);
            case Formula::Kind::And:
                return point_formula(*f.a) && point_formula(*f.b);
            case Formula::Kind::Or:
                return point_formula(*f.a) || point_formula(*f.b);
            case Formula::Kind::Implies:
                return !point_formula(*f.a) || point_formula(*f.b);
        }
        return false;
    }

  private:
    // numeric value of a linear expression at grid point k on one side
    std::optional<bool> compare_at(const Formula& f, int k, Side side) {
        const Duration& t = points_[k];
        double l = f.lhs.constant, r = f.rhs.constant;
        auto add = [&](const SignalTerm& term, double& acc) {
            const auto& ch = channels_.at(term.channel);
            if (term.derivative) {
                auto ref = cell_on_side(ch.section, t, side);
                if (!ref) return false;
                acc += term.coeff * one_sided_deriv(ch, *ref);
                return true;
            }
            acc += term.coeff * channel_number(ch, ch.section.value_at(t, side));
            return true;
        };
        for (const auto& term : f.lhs.terms) {
            if (!add(term, l)) return std::nullopt;
        }
        for (const auto& term : f.rhs.terms) {
            if (!add(term, r)) return std::nullopt;
        }
        return rel_ok(l, f.rel, r, grid_.compare_eps);
    }

    bool atom_as_left(const Formula& f, int k) {
        if (f.kind == Formula::Kind::EqLabel) {
            auto v = channels_.at(f.channel).section.value_at(points_[k], Side::Right);
            return v.label && *v.label == f.label;
        }
        auto ok = compare_at(f, k, Side::Right);
        return ok.value_or(false);
    }

    bool atom_as_right(const Formula& f, int k) {
        if (f.kind == Formula::Kind::EqLabel) {
            auto v = channels_.at(f.channel).section.value_at(points_[k], Side::Left);
            return v.label && *v.label == f.label;
        }
        auto ok = compare_at(f, k, Side::Left);
        return ok.value_or(false);
    }

    bool atom_interior(const Formula& f, int k) {
        if (f.kind == Formula::Kind::EqLabel) {
            const auto& s = channels_.at(f.channel).section;
            if (const JumpEdge* e = s.edge_at(points_[k])) {
                return edge_label_ok(*e, f.label);
            }
            return atom_as_left(f, k);
        }
        auto left = compare_at(f, k, Side::Left);
        auto right = compare_at(f, k, Side::Right);
        return left.value_or(true) && right.value_or(true) && (left || right);
    }

    std::string atom_detail(const Formula& f, int k) {
        std::ostringstream os;
        os << f.str() << " fails at t=" << points_[k].str();
        for (const auto& name : referenced_) {
            const auto& ch = channels_.at(name);
            os << "; " << name << "=" << ch.section.value_at(points_[k], Side::Right).str();
        }
        return os.str();
    }

    Table atom_table(const Formula& f) {
        const int n = static_cast<int>(points_.size());
        std::vector<std::uint8_t> interior(n), as_left(n), as_right(n);
        for (int k = 0; k < n; ++k) {
            interior[k] = atom_interior(f, k);
            as_left[k] = atom_as_left(f, k);
            as_right[k] = atom_as_right(f, k);
        }
        // prefix counts of interior failures over (i, j)
        std::vector<int> bad(n + 1, 0);
        for (int k = 0; k < n; ++k) bad[k + 1] = bad[k] + (interior[k] ? 0 : 1);
        Table t;
        t.n = n;
        t.bits.assign(static_cast<std::size_t>(n) * n, 0);
        for (int i = 0; i < n; ++i) {
            if (!as_left[i]) continue;
            for (int j = i + 1; j < n; ++j) {
                bool inner_ok = bad[j] - bad[i + 1] == 0;
                t.set(i, j, inner_ok && as_right[j]);
            }
        }
        return t;
    }

    const ChannelMap& channels_;
    GridSpec grid_;
    std::vector<Duration> points_;
    std::vector<std::string> referenced_;
};

}  // namespace

SatisfactionResult check(const FormulaPtr& f, const ChannelMap& channels, const GridSpec& grid) {
    if (!f) throw Error("no formula");
    Checker checker(channels, grid);
    auto referenced = f->channels();
    if (referenced.empty()) {
        // no channels: evaluate the closed formula over any declared section
        if (channels.empty()) throw Error("no channels declared");
        referenced.push_back(channels.begin()->first);
    }
    checker.build_grid(referenced);

    const auto& pts = checker.points();
    SatisfactionResult result;
    if (pts.size() < 2) {
        result.holds = checker.point_formula(*f);
        if (!result.holds) {
            result.witness = {Duration(0), Duration(0)};
            result.detail = "fails on the zero-length behavior";
        }
        return result;
    }

    Table top = checker.eval(*f);
    const int last = static_cast<int>(pts.size()) - 1;
    result.holds = top.at(0, last);
    if (!result.holds) {
        auto [window, detail] = checker.failing_window(*f, 0, last);
        result.witness = {pts[window.first], pts[window.second]};
        result.detail = detail;
    }
    return result;
}

double deriv(const ContractChannel& channel, const Duration& t) {
    const auto& s = channel.section;
    if (s.edge_at(t)) {
        throw Error("derivative undefined at t=" + t.str() + ": a jump or cell boundary");
    }
    auto ref = cell_on_side(s, t, Side::Right);
    if (!ref) throw Error("time " + t.str() + " outside the section");
    return one_sided_deriv(channel, *ref);
}

bool verify_restriction_closure(const FormulaPtr& f, const ChannelMap& channels,
                                const GridSpec& grid) {
    SatisfactionResult full = check(f, channels, grid);
    if (!full.holds) {
        throw Error("restriction closure requires the formula to hold on the full interval");
    }
    Checker checker(channels, grid);
    auto referenced = f->channels();
    if (referenced.empty()) referenced.push_back(channels.begin()->first);
    checker.build_grid(referenced);
    const auto& pts = checker.points();

    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            ChannelMap restricted;
            for (const auto& [name, ch] : channels) {
                restricted[name] =
                    ContractChannel{ch.section.restrict(pts[i], pts[j]), ch.component};
            }
            GridSpec inherited = grid;
            std::vector<Duration> window_pts;
            for (std::size_t k = i; k <= j; ++k) window_pts.push_back(pts[k] - pts[i]);
            inherited.explicit_points = window_pts;
            if (!check(f, restricted, inherited).holds) return false;
        }
    }
    return true;
}

}  // namespace ivs
