#include "ivs/graph.hpp"

#include <algorithm>
#include <sstream>

namespace ivs {

void Graph::add_vertex(const std::string& v) {
    if (vertex_index_.insert(v).second) {
        vertices_.push_back(v);
    }
}

void Graph::add_edge(const std::string& id, const std::string& src, const std::string& tgt,
                     const Label& label) {
    if (!has_vertex(src) || !has_vertex(tgt)) {
        throw Error("edge '" + id + "' references undeclared vertex");
    }
    if (!edge_index_.insert(id).second) {
        throw Error("duplicate edge id '" + id + "'");
    }
    edges_.push_back(Edge{id, src, tgt, label.empty() ? id : label});
}

bool Graph::has_vertex(const std::string& v) const { return vertex_index_.count(v) > 0; }

const Graph::Edge* Graph::find_edge(const std::string& id) const {
    for (const auto& e : edges_) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

std::vector<const Graph::Edge*> Graph::out_edges(const std::string& v) const {
    std::vector<const Edge*> out;
    for (const auto& e : edges_) {
        if (e.src == v) out.push_back(&e);
    }
    return out;
}

std::string Graph::to_text() const {
    std::vector<std::string> vs = vertices_;
    std::sort(vs.begin(), vs.end());
    std::vector<Edge> es = edges_;
    std::sort(es.begin(), es.end(), [](const Edge& a, const Edge& b) { return a.id < b.id; });
    std::ostringstream os;
    os << "graph {\n";
    for (const auto& v : vs) os << "  vertex " << v << "\n";
    for (const auto& e : es) {
        os << "  edge " << e.id << " " << e.src << " -> " << e.tgt << " [" << e.label << "]\n";
    }
    os << "}\n";
    return os.str();
}

bool Graph::operator==(const Graph& o) const { return to_text() == o.to_text(); }

ReflexiveGraph reflexivize(const Graph& g) {
    ReflexiveGraph r;
    r.base = g;
    for (const auto& v : g.vertices()) {
        std::string id = "id:" + v;
        r.base.add_edge(id, v, v, id);
        r.ids[v] = id;
    }
    return r;
}

std::string path_end(const Graph& g, const Path& p) {
    if (p.steps.empty()) return p.start;
    const auto* e = g.find_edge(p.steps.back());
    if (!e) throw Error("path step '" + p.steps.back() + "' is not an edge");
    return e->tgt;
}

std::vector<Path> paths_of_length(const Graph& g, DiscreteLength n,
                                  const std::optional<std::string>& from) {
    std::vector<Path> frontier;
    for (const auto& v : g.vertices()) {
        if (from && *from != v) continue;
        frontier.push_back(Path{v, {}});
    }
    for (DiscreteLength step = 0; step < n; ++step) {
        std::vector<Path> next;
        for (const auto& p : frontier) {
            for (const auto* e : g.out_edges(path_end(g, p))) {
                Path q = p;
                q.steps.push_back(e->id);
                next.push_back(std::move(q));
            }
        }
        frontier = std::move(next);
    }
    std::sort(frontier.begin(), frontier.end());
    return frontier;
}

std::vector<Path> sections_as_paths(const Graph& g, DiscreteLength n) {
    return paths_of_length(g, n);
}

Path restrict_path(const Graph& g, const Path& p, DiscreteLength offset, DiscreteLength len) {
    if (offset + len > p.length()) {
        throw Error("sub-path [" + std::to_string(offset) + "," + std::to_string(offset + len) +
                    ") exceeds path length " + std::to_string(p.length()));
    }
    Path sub;
    if (offset == 0) {
        sub.start = p.start;
    } else {
        const auto* e = g.find_edge(p.steps[offset - 1]);
        if (!e) throw Error("path step '" + p.steps[offset - 1] + "' is not an edge");
        sub.start = e->tgt;
    }
    sub.steps.assign(p.steps.begin() + offset, p.steps.begin() + offset + len);
    return sub;
}

Path glue_paths(const Graph& g, const Path& a, const Path& b) {
    std::string mid = path_end(g, a);
    if (mid != b.start) {
        throw GlueError("paths do not glue: first ends at '" + mid + "', second starts at '" +
                        b.start + "'");
    }
    Path out = a;
    out.steps.insert(out.steps.end(), b.steps.begin(), b.steps.end());
    return out;
}

Graph graph_from_sections(const Graph& g) {
    Graph out;
    for (const auto& p : sections_as_paths(g, 0)) {
        out.add_vertex(p.start);
    }
    for (const auto& p : sections_as_paths(g, 1)) {
        // Endpoints of a length-1 section are its restrictions to length 0.
        Path left = restrict_path(g, p, 0, 0);
        Path right = restrict_path(g, p, 1, 0);
        const auto* e = g.find_edge(p.steps[0]);
        out.add_edge(p.steps[0], left.start, right.start, e ? e->label : Label{});
    }
    return out;
}

Graph loop_graph(const std::vector<Label>& labels) {
    if (labels.empty()) {
        throw Error("loop graph needs a nonempty alphabet");
    }
    Graph g;
    g.add_vertex("*");
    std::vector<Label> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& l : sorted) {
        g.add_edge(l, "*", "*", l);
    }
    return g;
}

Graph complete_graph(const std::vector<Label>& labels) {
    if (labels.empty()) {
        throw Error("complete graph needs a nonempty label set");
    }
    Graph g;
    std::vector<Label> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& l : sorted) g.add_vertex(l);
    for (const auto& a : sorted) {
        for (const auto& b : sorted) {
            g.add_edge("(" + a + "," + b + ")", a, b);
        }
    }
    return g;
}

}  // namespace ivs
