#include "ivs/trace_io.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <vector>

namespace ivs {

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string vec_str(const Eigen::VectorXd& v) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ";";
        out += format_double(v[i]);
    }
    return out + "]";
}

std::string mat_str(const Eigen::MatrixXd& m) {
    std::string out = "[";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        if (r) out += "|";
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out += ";";
            out += format_double(m(r, c));
        }
    }
    return out + "]";
}

Eigen::VectorXd parse_vec(const std::string& s) {
    if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
        throw ParseError("bad vector literal '" + s + "'");
    }
    std::vector<double> vals;
    std::string body = s.substr(1, s.size() - 2);
    if (!body.empty()) {
        std::istringstream is(body);
        std::string tok;
        while (std::getline(is, tok, ';')) vals.push_back(std::stod(tok));
    }
    Eigen::VectorXd v(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) v[i] = vals[i];
    return v;
}

Eigen::MatrixXd parse_mat(const std::string& s) {
    if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
        throw ParseError("bad matrix literal '" + s + "'");
    }
    std::vector<std::vector<double>> rows;
    std::istringstream is(s.substr(1, s.size() - 2));
    std::string row;
    while (std::getline(is, row, '|')) {
        rows.emplace_back();
        std::istringstream rs(row);
        std::string tok;
        while (std::getline(rs, tok, ';')) rows.back().push_back(std::stod(tok));
    }
    if (rows.empty()) return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) throw ParseError("ragged matrix literal");
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    }
    return m;
}

std::string point_str(const PointValue& v) {
    std::string out = "{";
    bool first = true;
    auto add = [&](const std::string& kv) {
        if (!first) out += ",";
        first = false;
        out += kv;
    };
    if (v.label) add("label=" + *v.label);
    if (v.phase) add("phase=" + v.phase->str());
    if (v.scalar) add("scalar=" + format_double(*v.scalar));
    if (v.state) add("state=" + vec_str(*v.state));
    if (v.input) add("input=" + vec_str(*v.input));
    return out + "}";
}

PointValue parse_point(const std::string& s) {
    if (s.size() < 2 || s.front() != '{' || s.back() != '}') {
        throw ParseError("bad point value '" + s + "'");
    }
    PointValue v;
    std::string body = s.substr(1, s.size() - 2);
    std::size_t i = 0;
    while (i < body.size()) {
        auto eq = body.find('=', i);
        if (eq == std::string::npos) throw ParseError("bad point value '" + s + "'");
        std::string key = body.substr(i, eq - i);
        std::size_t end;
        if (eq + 1 < body.size() && body[eq + 1] == '[') {
            end = body.find(']', eq + 1);
            if (end == std::string::npos) throw ParseError("bad point value '" + s + "'");
            end += 1;
        } else {
            end = body.find(',', eq + 1);
            if (end == std::string::npos) end = body.size();
        }
        std::string value = body.substr(eq + 1, end - eq - 1);
        if (key == "label") {
            v.label = value;
        } else if (key == "phase") {
            v.phase = Rational::parse(value);
        } else if (key == "scalar") {
            v.scalar = std::stod(value);
        } else if (key == "state") {
            v.state = parse_vec(value);
        } else if (key == "input") {
            v.input = parse_vec(value);
        } else {
            throw ParseError("unknown point key '" + key + "'");
        }
        i = end < body.size() && body[end] == ',' ? end + 1 : end;
    }
    return v;
}

std::string tag_str(const std::vector<Label>& tag) {
    std::string out;
    for (std::size_t i = 0; i < tag.size(); ++i) {
        if (i) out += ";";
        out += tag[i];
    }
    return out.empty() ? "-" : out;
}

std::vector<Label> parse_tag(const std::string& s) {
    if (s == "-") return {};
    std::vector<Label> tag;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ';')) tag.push_back(tok);
    return tag;
}

std::vector<std::string> fields_of(const std::string& line) {
    std::istringstream is(line);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

}  // namespace

std::string write_sections_text(const TraceHeader& header, const ChannelMap& channels) {
    std::ostringstream os;
    os << "ivs-trace v1\n";
    os << "config-hash " << header.config_hash << "\n";
    os << "grid-density " << header.grid_density << "\n";
    os << "step " << header.step.str() << "\n";

    // shared systems, serialized once under content ids
    std::vector<LinearSystemPtr> systems;
    auto system_id = [&](const LinearSystemPtr& sys) -> std::size_t {
        for (std::size_t i = 0; i < systems.size(); ++i) {
            if (systems[i] == sys || systems[i]->same_as(*sys)) return i;
        }
        systems.push_back(sys);
        return systems.size() - 1;
    };
    std::ostringstream body;
    for (const auto& [name, ch] : channels) {
        body << "channel " << name << " component " << ch.component << " length "
             << ch.section.length().str() << "\n";
        const auto& s = ch.section;
        for (std::size_t i = 0; i < s.edges().size(); ++i) {
            const auto& e = s.edges()[i];
            body << "  edge " << e.time.str() << " " << (e.identity ? "identity" : "jump") << " "
                 << tag_str(e.tag) << " " << point_str(e.source) << " " << point_str(e.target)
                 << "\n";
            if (i >= s.cells().size()) continue;
            const auto& c = s.cells()[i];
            body << "  cell " << c.length.str() << " ";
            if (const auto* k = std::get_if<ConstantFlow>(&c.flow)) {
                body << "constant";
                if (k->label) body << " label=" << *k->label;
                if (k->value) body << " value=" << format_double(*k->value);
                if (k->phase0) body << " phase=" << k->phase0->str();
            } else if (const auto* a = std::get_if<AffineFlow>(&c.flow)) {
                body << "affine sys=" << system_id(a->sys) << " x0=" << vec_str(a->x0)
                     << " u=" << vec_str(a->u) << " hint=" << a->step_hint.str();
            } else {
                const auto& f = std::get<SampledFlow>(c.flow);
                body << "sampled data=" << mat_str(f.samples);
            }
            body << "\n";
        }
    }
    for (std::size_t i = 0; i < systems.size(); ++i) {
        os << "system " << i << " A=" << mat_str(systems[i]->A) << " B=" << mat_str(systems[i]->B)
           << " C=" << mat_str(systems[i]->C) << "\n";
    }
    os << body.str();
    return os.str();
}

std::pair<TraceHeader, ChannelMap> read_sections_text(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != "ivs-trace v1") {
        throw ParseError("not an ivs trace file (missing 'ivs-trace v1' header)");
    }
    TraceHeader header;
    ChannelMap channels;
    std::map<std::size_t, LinearSystemPtr> systems;

    std::string current_channel;
    int current_component = -1;
    std::vector<JumpEdge> edges;
    std::vector<FlowCell> cells;
    auto flush = [&]() {
        if (current_channel.empty()) return;
        channels[current_channel] =
            ContractChannel{HybridSection(edges, cells), current_component};
        edges.clear();
        cells.clear();
        current_channel.clear();
    };
    auto value_of = [](const std::string& field, const std::string& key) -> std::string {
        if (field.rfind(key + "=", 0) != 0) {
            throw ParseError("expected '" + key + "=' in trace, got '" + field + "'");
        }
        return field.substr(key.size() + 1);
    };

    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        auto f = fields_of(line);
        if (f.empty()) continue;
        try {
            if (f[0] == "config-hash") {
                header.config_hash = f.at(1);
            } else if (f[0] == "grid-density") {
                header.grid_density = std::stoi(f.at(1));
            } else if (f[0] == "step") {
                header.step = Rational::parse(f.at(1));
            } else if (f[0] == "system") {
                auto sys = std::make_shared<LinearSystem>();
                sys->A = parse_mat(value_of(f.at(2), "A"));
                sys->B = parse_mat(value_of(f.at(3), "B"));
                sys->C = parse_mat(value_of(f.at(4), "C"));
                systems[std::stoul(f.at(1))] = sys;
            } else if (f[0] == "channel") {
                flush();
                current_channel = f.at(1);
                if (f.at(2) != "component" || f.at(4) != "length") {
                    throw ParseError("bad channel header");
                }
                current_component = std::stoi(f.at(3));
            } else if (f[0] == "edge") {
                JumpEdge e;
                e.time = Rational::parse(f.at(1));
                e.identity = f.at(2) == "identity";
                e.tag = parse_tag(f.at(3));
                e.source = parse_point(f.at(4));
                e.target = parse_point(f.at(5));
                edges.push_back(std::move(e));
            } else if (f[0] == "cell") {
                FlowCell c;
                c.length = Rational::parse(f.at(1));
                if (f.at(2) == "constant") {
                    ConstantFlow k;
                    for (std::size_t i = 3; i < f.size(); ++i) {
                        if (f[i].rfind("label=", 0) == 0) k.label = f[i].substr(6);
                        if (f[i].rfind("value=", 0) == 0) k.value = std::stod(f[i].substr(6));
                        if (f[i].rfind("phase=", 0) == 0) {
                            k.phase0 = Rational::parse(f[i].substr(6));
                        }
                    }
                    c.flow = k;
                } else if (f.at(2) == "affine") {
                    AffineFlow a;
                    std::size_t sys_id = std::stoul(value_of(f.at(3), "sys"));
                    auto it = systems.find(sys_id);
                    if (it == systems.end()) {
                        throw ParseError("trace references unknown system " +
                                         std::to_string(sys_id));
                    }
                    a.sys = it->second;
                    a.x0 = parse_vec(value_of(f.at(4), "x0"));
                    a.u = parse_vec(value_of(f.at(5), "u"));
                    a.step_hint = Rational::parse(value_of(f.at(6), "hint"));
                    c.flow = a;
                } else if (f.at(2) == "sampled") {
                    SampledFlow sf;
                    sf.samples = parse_mat(value_of(f.at(3), "data"));
                    c.flow = sf;
                } else {
                    throw ParseError("unknown cell kind '" + f.at(2) + "'");
                }
                cells.push_back(std::move(c));
            } else {
                throw ParseError("unknown trace line '" + f[0] + "'");
            }
        } catch (const std::out_of_range&) {
            throw ParseError("truncated trace line", lineno, 1);
        }
    }
    flush();
    return {header, channels};
}

std::string write_section_rows(const HybridSection& section) {
    std::ostringstream os;
    os << "t_start,t_end,kind,payload\n";
    HybridSection s = section.canonicalize();
    for (std::size_t i = 0; i < s.edges().size(); ++i) {
        const auto& e = s.edges()[i];
        os << e.time.str() << "," << e.time.str() << ",jump,\"" << e.str() << "\"\n";
        if (i >= s.cells().size()) continue;
        const auto& c = s.cells()[i];
        Duration end = e.time + c.length;
        os << e.time.str() << "," << end.str() << ",flow,\"";
        if (const auto* k = std::get_if<ConstantFlow>(&c.flow)) {
            if (k->label) os << "label=" << *k->label << " ";
            if (k->value) os << "value=" << format_double(*k->value) << " ";
            if (k->phase0) os << "phase=" << k->phase0->str();
        } else if (const auto* a = std::get_if<AffineFlow>(&c.flow)) {
            os << "affine x0=" << vec_str(a->x0) << " u=" << vec_str(a->u);
        } else {
            const auto& f = std::get<SampledFlow>(c.flow);
            os << "sampled " << mat_str(f.samples);
        }
        os << "\"\n";
    }
    return os.str();
}

std::string write_trace_csv(const TraceHeader& header, const ChannelMap& channels,
                            const Duration& step, const std::vector<std::string>& order) {
    if (!(step > Duration(0))) throw Error("csv sampling step must be positive");
    std::vector<std::string> columns;
    for (const auto& name : order) {
        if (channels.count(name)) columns.push_back(name);
    }
    for (const auto& [name, ch] : channels) {
        if (std::find(columns.begin(), columns.end(), name) == columns.end()) {
            columns.push_back(name);
        }
    }
    Duration length(0);
    for (const auto& [name, ch] : channels) {
        length = Rational::max(length, ch.section.length());
    }
    std::ostringstream os;
    os << "# ivs-trace-csv v1\n";
    os << "# config-hash " << header.config_hash << "\n";
    os << "# step " << step.str() << "\n";
    os << "t";
    for (const auto& name : columns) os << "," << name;
    os << "\n";
    for (Duration t(0); t <= length; t += step) {
        os << t.str();
        for (const auto& name : columns) {
            const auto& ch = channels.at(name);
            os << ",";
            if (t > ch.section.length()) continue;
            Side side = t == ch.section.length() ? Side::Left : Side::Right;
            PointValue v = ch.section.value_at(t, side);
            if (v.label) {
                os << *v.label;
            } else if (v.scalar) {
                os << format_double(*v.scalar);
            } else if (v.state) {
                int idx = ch.component < 0 ? 0 : ch.component;
                os << format_double((*v.state)[idx]);
            }
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace ivs
