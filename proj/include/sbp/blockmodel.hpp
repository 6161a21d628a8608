#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sbp/graph.hpp"

namespace sbp {

// h(x) = (1 + x)·ln(1 + x) − x·ln(x), with h(0) = 0.
double entropy_h(double x);

// Description length of the one-community model: E·h(1/E) + E·ln(E).
// Zero when E = 0.
double null_description_length(std::int64_t num_vertices, std::int64_t num_edges);

// v's edges grouped by neighbor community, with self-loops kept separate so
// that a self-edge moves together with the vertex.
struct VertexContext {
    std::int64_t vertex = -1;
    std::int64_t self_loops = 0;  // multiplicity of v->v
    // (community, multiplicity), self-loops excluded, sorted by community.
    std::vector<std::pair<std::int64_t, std::int64_t>> out_comms;
    std::vector<std::pair<std::int64_t, std::int64_t>> in_comms;
    std::int64_t k_out = 0;  // includes self-loops
    std::int64_t k_in = 0;
};

// Sparse change set for moving a vertex or merging a community: cell updates
// confined to rows/cols {from, to}, plus the post-change degrees of the two
// communities involved.
struct CellDelta {
    std::int64_t row;
    std::int64_t col;
    std::int64_t change;
};

struct BlockDelta {
    std::int64_t from = -1;
    std::int64_t to = -1;
    std::vector<CellDelta> cells;  // canonical (row, col) order
    std::int64_t d_out_from = 0, d_in_from = 0;  // degrees after the change
    std::int64_t d_out_to = 0, d_in_to = 0;
};

// Community-pair edge-count matrix M plus its transpose, per-community degree
// sums, and the vertex-to-community assignment. Rows are sparse hash maps;
// merged-away communities leave empty tombstone rows and a forwarding pointer
// until renumber() compacts labels.
class Blockmodel {
  public:
    using Row = std::unordered_map<std::int64_t, std::int64_t>;

    Blockmodel(const Graph& g, std::vector<std::int64_t> assignment,
               std::int64_t num_communities);
    static Blockmodel singleton_partition(const Graph& g);

    std::int64_t community_count() const { return live_count_; }
    std::int64_t allocated_count() const { return static_cast<std::int64_t>(rows_.size()); }
    std::int64_t num_vertices() const { return num_vertices_; }
    std::int64_t num_edges() const { return num_edges_; }

    bool is_live(std::int64_t c) const { return forward_[static_cast<size_t>(c)] == c; }
    // Follows the merge-forwarding chain with path compression.
    std::int64_t resolve(std::int64_t c) const;
    std::int64_t assignment_of(std::int64_t v) const { return resolve(assignment_[static_cast<size_t>(v)]); }
    std::vector<std::int64_t> resolved_assignment() const;

    const Row& row(std::int64_t c) const { return rows_[static_cast<size_t>(c)]; }
    const Row& col(std::int64_t c) const { return cols_[static_cast<size_t>(c)]; }
    std::int64_t get(std::int64_t i, std::int64_t j) const;
    std::int64_t degree_out(std::int64_t c) const { return d_out_[static_cast<size_t>(c)]; }
    std::int64_t degree_in(std::int64_t c) const { return d_in_[static_cast<size_t>(c)]; }
    std::int64_t degree_total(std::int64_t c) const {
        return d_out_[static_cast<size_t>(c)] + d_in_[static_cast<size_t>(c)];
    }

    // Σ_ij M_ij · ln(M_ij / (d_out_i · d_in_j)); zero cells contribute zero.
    double log_likelihood() const;
    // E·h(C²/E) + V·ln(C) − log_likelihood(), C = live community count.
    double description_length() const;

    VertexContext vertex_context(const Graph& g, std::int64_t v) const;

    BlockDelta move_delta(const VertexContext& ctx, std::int64_t to) const;
    BlockDelta merge_delta(std::int64_t c, std::int64_t to) const;

    // DL change if vertex ctx.vertex moved to community `to`. The community
    // count is unchanged, so only the likelihood term moves.
    double delta_dl_move(const VertexContext& ctx, std::int64_t to) const;
    double delta_dl_move(const BlockDelta& d) const;
    // DL change if community c were folded into `to`, evaluated against the
    // current matrix with the live count dropping by one.
    double delta_dl_merge(std::int64_t c, std::int64_t to) const;
    double delta_dl_merge(const BlockDelta& d) const;

    void apply_move(const VertexContext& ctx, std::int64_t to);
    // Folds row/col c into `to`, leaves a tombstone and forwarding entry.
    void apply_merge(std::int64_t c, std::int64_t to);
    // Compacts live communities to [0, C) preserving relative order and
    // rewrites the assignment through the forwarding chain.
    void renumber();

    // Looks up a post-delta cell value without mutating the matrix.
    std::int64_t cell_after(const BlockDelta& d, std::int64_t i, std::int64_t j) const;

    // Order-independent digest over live (i, j, count) triples and degrees.
    std::uint64_t checksum() const;
    // Canonical "i j count" triples for divergence reporting.
    std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> sorted_cells() const;

    // Throws std::logic_error naming the first violated internal invariant
    // (transpose coherence, degree sums, edge conservation, assignment).
    void check_invariants(const Graph& g) const;

  private:
    double affected_likelihood(const BlockDelta& d, bool after) const;

    std::int64_t num_vertices_ = 0;
    std::int64_t num_edges_ = 0;
    std::int64_t live_count_ = 0;
    std::vector<Row> rows_;
    std::vector<Row> cols_;
    std::vector<std::int64_t> d_out_;
    std::vector<std::int64_t> d_in_;
    std::vector<std::int64_t> assignment_;
    mutable std::vector<std::int64_t> forward_;
};

}  // namespace sbp
