#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace sbp {

// Directed multigraph stored as adjacency lists with edge multiplicities.
// Neighbor lists are kept sorted by endpoint id so that serialization and
// iteration order are canonical.
struct Graph {
    std::int64_t num_vertices = 0;
    std::int64_t num_edges = 0;  // sum of multiplicities
    // (neighbor, multiplicity), sorted by neighbor id.
    std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>> out_neighbors;
    std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>> in_neighbors;
    // A self-loop counts once toward d_out and once toward d_in.
    std::vector<std::int64_t> d_out;
    std::vector<std::int64_t> d_in;
    std::vector<std::int64_t> d_total;
};

// Builds a graph from (src, dst, multiplicity) triples; duplicates accumulate.
Graph build_graph(std::int64_t num_vertices,
                  std::span<const std::tuple<std::int64_t, std::int64_t, std::int64_t>> edges);

// Parses whitespace/tab-separated "src dst [weight]" lines. base_index is 0
// or 1; ids are rebased to 0. The vertex count is the larger of max id + 1
// and min_vertices (edge lists cannot name trailing isolated vertices).
// Malformed lines raise errors naming the line.
Graph load_edge_list(std::istream& in, int base_index, std::int64_t min_vertices = 0);
Graph load_edge_list_file(const std::string& path, int base_index,
                          std::int64_t min_vertices = 0);

// Canonical serialization: one "src<TAB>dst" line per edge, multiplicities
// above 1 written as a third column, rows sorted by (src, dst).
void write_edge_list(const Graph& g, std::ostream& out);

// "vertex<TAB>community" files (ground truth and emitted partitions).
std::vector<std::int64_t> load_assignment(std::istream& in, int base_index,
                                          std::int64_t num_vertices);
void write_assignment(std::span<const std::int64_t> assignment, std::ostream& out);

// A rank's slice of the graph: local vertex ids are indices into vertex_map,
// which holds the corresponding global ids.
struct Subgraph {
    int owner_rank = 0;
    std::vector<std::int64_t> vertex_map;
    Graph graph;
};

// Assigns vertex v to rank v mod ranks and keeps only edges with both
// endpoints on the same rank. ranks must be in [1, num_vertices].
std::vector<Subgraph> round_robin_split(const Graph& g, int ranks);

// Fraction of all vertices whose local degree within their subgraph is zero.
double island_fraction(std::span<const Subgraph> parts);

}  // namespace sbp
