#pragma once

// Small builders shared by the test binaries.

#include <cstdint>
#include <initializer_list>
#include <tuple>
#include <vector>

#include "sbp/graph.hpp"
#include "sbp/random.hpp"

namespace sbp {

// Test-only sugar: lets call sites pass braced edge lists, which do not
// convert to std::span on their own.
inline Graph build_graph(std::int64_t num_vertices,
                         std::initializer_list<std::tuple<std::int64_t, std::int64_t, std::int64_t>>
                             edges) {
    const std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> list(edges);
    return build_graph(num_vertices, list);
}

}  // namespace sbp

namespace testing_helpers {

// Random multigraph with e_count directed edges (multiplicities 1..3).
inline sbp::Graph random_graph(sbp::Rng& rng, std::int64_t v_count, std::int64_t e_count) {
    std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> edges;
    edges.reserve(static_cast<size_t>(e_count));
    for (std::int64_t e = 0; e < e_count; ++e)
        edges.emplace_back(rng.below(v_count), rng.below(v_count), 1 + rng.below(3));
    return sbp::build_graph(v_count, edges);
}

// Random assignment over c_count labels with every label used (so the live
// count is exactly c_count).
inline std::vector<std::int64_t> random_assignment(sbp::Rng& rng, std::int64_t v_count,
                                                   std::int64_t c_count) {
    std::vector<std::int64_t> assignment(static_cast<size_t>(v_count));
    for (auto& a : assignment) a = rng.below(c_count);
    for (std::int64_t c = 0; c < c_count; ++c) assignment[static_cast<size_t>(c)] = c;
    return assignment;
}

// Two planted blocks of `half` vertices each: dense directed ring inside each
// block plus `cross` random cross edges.
inline sbp::Graph two_block_graph(std::int64_t half, std::int64_t intra_per_vertex,
                                  std::int64_t cross, std::uint64_t seed) {
    sbp::Rng rng(seed);
    std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> edges;
    for (std::int64_t b = 0; b < 2; ++b) {
        const std::int64_t base = b * half;
        for (std::int64_t v = 0; v < half; ++v)
            for (std::int64_t k = 1; k <= intra_per_vertex; ++k)
                edges.emplace_back(base + v, base + (v + k) % half, 1);
    }
    for (std::int64_t e = 0; e < cross; ++e)
        edges.emplace_back(rng.below(half), half + rng.below(half), 1);
    return sbp::build_graph(2 * half, edges);
}

}  // namespace testing_helpers
