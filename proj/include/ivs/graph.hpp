#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ivs/errors.hpp"
#include "ivs/intervals.hpp"

namespace ivs {

using Label = std::string;

// Finite directed multigraph with string-keyed vertices and edges.
// Edge and vertex order is kept deterministic (insertion order; the
// constructors below insert lexicographically) so serialization is stable.
class Graph {
  public:
    struct Edge {
        std::string id;
        std::string src;
        std::string tgt;
        Label label;  // optional annotation; equals id for the standard constructions
    };

    void add_vertex(const std::string& v);
    void add_edge(const std::string& id, const std::string& src, const std::string& tgt,
                  const Label& label = {});

    bool has_vertex(const std::string& v) const;
    const Edge* find_edge(const std::string& id) const;

    const std::vector<std::string>& vertices() const { return vertices_; }
    const std::vector<Edge>& edges() const { return edges_; }

    std::vector<const Edge*> out_edges(const std::string& v) const;

    // Structured text: vertex rows then edge rows, lexicographic.
    std::string to_text() const;

    bool operator==(const Graph& o) const;

  private:
    std::vector<std::string> vertices_;
    std::vector<Edge> edges_;
    std::set<std::string> vertex_index_;
    std::set<std::string> edge_index_;
};

// A reflexive graph: every vertex carries a designated self-loop.
struct ReflexiveGraph {
    Graph base;
    std::map<std::string, std::string> ids;  // vertex -> its designated self-loop edge id
};

// Adds a designated self-loop per vertex (edge id "id:<v>"). The base graph's
// edges are untouched.
ReflexiveGraph reflexivize(const Graph& g);

// A path: start vertex plus a list of composable edges. A length-0 path is a
// bare vertex.
struct Path {
    std::string start;
    std::vector<std::string> steps;  // edge ids

    std::size_t length() const { return steps.size(); }
    bool operator==(const Path& o) const { return start == o.start && steps == o.steps; }
    bool operator<(const Path& o) const {
        return start != o.start ? start < o.start : steps < o.steps;
    }
};

// Terminal vertex of a path within g.
std::string path_end(const Graph& g, const Path& p);

// All length-n paths, optionally anchored at a start vertex. Length-0 paths
// are the vertices themselves.
std::vector<Path> paths_of_length(const Graph& g, DiscreteLength n,
                                  const std::optional<std::string>& from = std::nullopt);

// The n-length sections of the discrete-interval sheaf presented by g are
// exactly its length-n paths; restriction is taking a contiguous sub-path.
std::vector<Path> sections_as_paths(const Graph& g, DiscreteLength n);

// Sub-path of p over steps [offset, offset+len). Requires offset+len <= |p|.
Path restrict_path(const Graph& g, const Path& p, DiscreteLength offset, DiscreteLength len);

// Concatenation; requires end(a) == start(b).
Path glue_paths(const Graph& g, const Path& a, const Path& b);

// Rebuilds a graph from the length-0 and length-1 sections of the discrete
// sheaf presented by g (vertices and edges with their endpoint restrictions).
// Composing with the sections functor is the identity up to the obvious
// renaming, which this function applies, so round-tripping returns an equal
// graph.
Graph graph_from_sections(const Graph& g);

// One vertex, one self-loop per label. Rejects an empty alphabet.
Graph loop_graph(const std::vector<Label>& labels);

// Vertex per label, one edge per ordered pair (including self-pairs).
Graph complete_graph(const std::vector<Label>& labels);

}  // namespace ivs
