#include "sbp/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sbp {

namespace {

void add_sorted(std::vector<std::pair<std::int64_t, std::int64_t>>& list, std::int64_t key,
                std::int64_t mult) {
    auto it = std::lower_bound(list.begin(), list.end(), key,
                               [](const auto& e, std::int64_t k) { return e.first < k; });
    if (it != list.end() && it->first == key) {
        it->second += mult;
    } else {
        list.insert(it, {key, mult});
    }
}

}  // namespace

Graph build_graph(std::int64_t num_vertices,
                  std::span<const std::tuple<std::int64_t, std::int64_t, std::int64_t>> edges) {
    if (num_vertices < 0) throw std::invalid_argument("build_graph: negative vertex count");
    Graph g;
    g.num_vertices = num_vertices;
    g.out_neighbors.resize(static_cast<size_t>(num_vertices));
    g.in_neighbors.resize(static_cast<size_t>(num_vertices));
    g.d_out.assign(static_cast<size_t>(num_vertices), 0);
    g.d_in.assign(static_cast<size_t>(num_vertices), 0);
    g.d_total.assign(static_cast<size_t>(num_vertices), 0);
    for (const auto& [src, dst, mult] : edges) {
        if (src < 0 || src >= num_vertices || dst < 0 || dst >= num_vertices)
            throw std::invalid_argument("build_graph: endpoint out of range");
        if (mult <= 0) throw std::invalid_argument("build_graph: non-positive multiplicity");
        add_sorted(g.out_neighbors[static_cast<size_t>(src)], dst, mult);
        add_sorted(g.in_neighbors[static_cast<size_t>(dst)], src, mult);
        g.d_out[static_cast<size_t>(src)] += mult;
        g.d_in[static_cast<size_t>(dst)] += mult;
        g.num_edges += mult;
    }
    for (std::int64_t v = 0; v < num_vertices; ++v)
        g.d_total[static_cast<size_t>(v)] =
            g.d_out[static_cast<size_t>(v)] + g.d_in[static_cast<size_t>(v)];
    return g;
}

Graph load_edge_list(std::istream& in, int base_index, std::int64_t min_vertices) {
    if (base_index != 0 && base_index != 1)
        throw std::invalid_argument("load_edge_list: base_index must be 0 or 1");
    std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> edges;
    std::string line;
    std::int64_t max_id = min_vertices - 1;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::int64_t src, dst;
        if (!(fields >> src)) continue;  // blank line
        if (!(fields >> dst))
            throw std::runtime_error("edge list line " + std::to_string(line_no) +
                                     ": expected two ids");
        std::int64_t mult = 1;
        if (fields >> mult && mult <= 0)
            throw std::runtime_error("edge list line " + std::to_string(line_no) +
                                     ": non-positive weight");
        std::string trailing;
        if (fields >> trailing)
            throw std::runtime_error("edge list line " + std::to_string(line_no) +
                                     ": trailing fields");
        src -= base_index;
        dst -= base_index;
        if (src < 0 || dst < 0)
            throw std::runtime_error("edge list line " + std::to_string(line_no) +
                                     ": id below base index");
        max_id = std::max({max_id, src, dst});
        edges.emplace_back(src, dst, mult);
    }
    return build_graph(max_id + 1, edges);
}

Graph load_edge_list_file(const std::string& path, int base_index, std::int64_t min_vertices) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open edge list: " + path);
    return load_edge_list(in, base_index, min_vertices);
}

void write_edge_list(const Graph& g, std::ostream& out) {
    for (std::int64_t v = 0; v < g.num_vertices; ++v) {
        for (const auto& [u, mult] : g.out_neighbors[static_cast<size_t>(v)]) {
            out << v << '\t' << u;
            if (mult > 1) out << '\t' << mult;
            out << '\n';
        }
    }
}

std::vector<std::int64_t> load_assignment(std::istream& in, int base_index,
                                          std::int64_t num_vertices) {
    if (base_index != 0 && base_index != 1)
        throw std::invalid_argument("load_assignment: base_index must be 0 or 1");
    std::vector<std::int64_t> assignment(static_cast<size_t>(num_vertices), -1);
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::int64_t v, c;
        if (!(fields >> v)) continue;
        if (!(fields >> c))
            throw std::runtime_error("assignment line " + std::to_string(line_no) +
                                     ": expected vertex and community");
        v -= base_index;
        c -= base_index;
        if (v < 0 || v >= num_vertices)
            throw std::runtime_error("assignment line " + std::to_string(line_no) +
                                     ": vertex out of range");
        if (c < 0)
            throw std::runtime_error("assignment line " + std::to_string(line_no) +
                                     ": negative community");
        assignment[static_cast<size_t>(v)] = c;
    }
    for (std::int64_t v = 0; v < num_vertices; ++v)
        if (assignment[static_cast<size_t>(v)] < 0)
            throw std::runtime_error("assignment file missing vertex " + std::to_string(v));
    return assignment;
}

void write_assignment(std::span<const std::int64_t> assignment, std::ostream& out) {
    for (size_t v = 0; v < assignment.size(); ++v)
        out << v << '\t' << assignment[v] << '\n';
}

std::vector<Subgraph> round_robin_split(const Graph& g, int ranks) {
    if (ranks < 1) throw std::invalid_argument("round_robin_split: ranks must be positive");
    if (ranks > g.num_vertices)
        throw std::invalid_argument("round_robin_split: more ranks than vertices");
    std::vector<Subgraph> parts(static_cast<size_t>(ranks));
    std::vector<std::int64_t> local_id(static_cast<size_t>(g.num_vertices));
    for (std::int64_t v = 0; v < g.num_vertices; ++v) {
        auto& part = parts[static_cast<size_t>(v % ranks)];
        local_id[static_cast<size_t>(v)] = static_cast<std::int64_t>(part.vertex_map.size());
        part.vertex_map.push_back(v);
    }
    for (int r = 0; r < ranks; ++r) {
        auto& part = parts[static_cast<size_t>(r)];
        part.owner_rank = r;
        std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> edges;
        for (std::int64_t gv : part.vertex_map) {
            for (const auto& [u, mult] : g.out_neighbors[static_cast<size_t>(gv)]) {
                if (u % ranks == r)
                    edges.emplace_back(local_id[static_cast<size_t>(gv)],
                                       local_id[static_cast<size_t>(u)], mult);
            }
        }
        part.graph = build_graph(static_cast<std::int64_t>(part.vertex_map.size()), edges);
    }
    return parts;
}

double island_fraction(std::span<const Subgraph> parts) {
    std::int64_t total = 0;
    std::int64_t islands = 0;
    for (const auto& part : parts) {
        total += part.graph.num_vertices;
        for (std::int64_t v = 0; v < part.graph.num_vertices; ++v)
            if (part.graph.d_total[static_cast<size_t>(v)] == 0) ++islands;
    }
    if (total == 0) return 0.0;
    return static_cast<double>(islands) / static_cast<double>(total);
}

}  // namespace sbp
