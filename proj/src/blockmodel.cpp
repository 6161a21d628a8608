#include "sbp/blockmodel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

namespace sbp {

double entropy_h(double x) {
    if (x < 0.0) throw std::invalid_argument("entropy_h: negative argument");
    if (x == 0.0) return 0.0;
    return (1.0 + x) * std::log1p(x) - x * std::log(x);
}

double null_description_length(std::int64_t num_vertices, std::int64_t num_edges) {
    (void)num_vertices;  // ln(1) community term vanishes
    if (num_edges < 0) throw std::invalid_argument("null_description_length: negative E");
    if (num_edges == 0) return 0.0;
    const double e = static_cast<double>(num_edges);
    return e * entropy_h(1.0 / e) + e * std::log(e);
}

namespace {

// One likelihood term: m·ln(m / (d_out·d_in)), zero when the cell is empty.
double cell_term(std::int64_t m, std::int64_t d_out, std::int64_t d_in) {
    if (m == 0) return 0.0;
    const double md = static_cast<double>(m);
    return md * std::log(md / (static_cast<double>(d_out) * static_cast<double>(d_in)));
}

}  // namespace

Blockmodel::Blockmodel(const Graph& g, std::vector<std::int64_t> assignment,
                       std::int64_t num_communities) {
    if (static_cast<std::int64_t>(assignment.size()) != g.num_vertices)
        throw std::invalid_argument("Blockmodel: assignment size != V");
    if (num_communities < 0) throw std::invalid_argument("Blockmodel: negative community count");
    if (g.num_vertices > 0 && num_communities < 1)
        throw std::invalid_argument("Blockmodel: need at least one community");
    num_vertices_ = g.num_vertices;
    num_edges_ = g.num_edges;
    live_count_ = num_communities;
    rows_.resize(static_cast<size_t>(num_communities));
    cols_.resize(static_cast<size_t>(num_communities));
    d_out_.assign(static_cast<size_t>(num_communities), 0);
    d_in_.assign(static_cast<size_t>(num_communities), 0);
    forward_.resize(static_cast<size_t>(num_communities));
    for (std::int64_t c = 0; c < num_communities; ++c) forward_[static_cast<size_t>(c)] = c;
    assignment_ = std::move(assignment);
    for (std::int64_t v = 0; v < g.num_vertices; ++v) {
        const std::int64_t c = assignment_[static_cast<size_t>(v)];
        if (c < 0 || c >= num_communities)
            throw std::invalid_argument("Blockmodel: community label out of range");
        for (const auto& [u, mult] : g.out_neighbors[static_cast<size_t>(v)]) {
            const std::int64_t cu = assignment_[static_cast<size_t>(u)];
            if (cu < 0 || cu >= num_communities)
                throw std::invalid_argument("Blockmodel: community label out of range");
            rows_[static_cast<size_t>(c)][cu] += mult;
            cols_[static_cast<size_t>(cu)][c] += mult;
        }
        d_out_[static_cast<size_t>(c)] += g.d_out[static_cast<size_t>(v)];
        d_in_[static_cast<size_t>(c)] += g.d_in[static_cast<size_t>(v)];
    }
}

Blockmodel Blockmodel::singleton_partition(const Graph& g) {
    std::vector<std::int64_t> assignment(static_cast<size_t>(g.num_vertices));
    for (std::int64_t v = 0; v < g.num_vertices; ++v) assignment[static_cast<size_t>(v)] = v;
    return Blockmodel(g, std::move(assignment), g.num_vertices);
}

std::int64_t Blockmodel::resolve(std::int64_t c) const {
    if (c < 0 || c >= allocated_count())
        throw std::out_of_range("Blockmodel::resolve: community out of range");
    std::int64_t root = c;
    while (forward_[static_cast<size_t>(root)] != root) root = forward_[static_cast<size_t>(root)];
    while (forward_[static_cast<size_t>(c)] != root) {
        const std::int64_t next = forward_[static_cast<size_t>(c)];
        forward_[static_cast<size_t>(c)] = root;
        c = next;
    }
    return root;
}

std::vector<std::int64_t> Blockmodel::resolved_assignment() const {
    std::vector<std::int64_t> out(assignment_.size());
    for (size_t v = 0; v < assignment_.size(); ++v) out[v] = resolve(assignment_[v]);
    return out;
}

std::int64_t Blockmodel::get(std::int64_t i, std::int64_t j) const {
    const auto& row = rows_[static_cast<size_t>(i)];
    auto it = row.find(j);
    return it == row.end() ? 0 : it->second;
}

double Blockmodel::log_likelihood() const {
    double sum = 0.0;
    std::vector<std::pair<std::int64_t, std::int64_t>> entries;
    for (std::int64_t i = 0; i < allocated_count(); ++i) {
        const auto& row = rows_[static_cast<size_t>(i)];
        if (row.empty()) continue;
        entries.assign(row.begin(), row.end());
        std::sort(entries.begin(), entries.end());
        const std::int64_t di = d_out_[static_cast<size_t>(i)];
        for (const auto& [j, m] : entries) sum += cell_term(m, di, d_in_[static_cast<size_t>(j)]);
    }
    return sum;
}

double Blockmodel::description_length() const {
    if (num_edges_ == 0) return 0.0;
    const double e = static_cast<double>(num_edges_);
    const double c = static_cast<double>(live_count_);
    const double model = e * entropy_h(c * c / e) +
                         static_cast<double>(num_vertices_) * std::log(c);
    return model - log_likelihood();
}

VertexContext Blockmodel::vertex_context(const Graph& g, std::int64_t v) const {
    if (v < 0 || v >= num_vertices_)
        throw std::out_of_range("vertex_context: vertex out of range");
    VertexContext ctx;
    ctx.vertex = v;
    ctx.k_out = g.d_out[static_cast<size_t>(v)];
    ctx.k_in = g.d_in[static_cast<size_t>(v)];
    std::map<std::int64_t, std::int64_t> out_comms, in_comms;
    for (const auto& [u, mult] : g.out_neighbors[static_cast<size_t>(v)]) {
        if (u == v) {
            ctx.self_loops += mult;
        } else {
            out_comms[assignment_of(u)] += mult;
        }
    }
    for (const auto& [u, mult] : g.in_neighbors[static_cast<size_t>(v)]) {
        if (u != v) in_comms[assignment_of(u)] += mult;
    }
    ctx.out_comms.assign(out_comms.begin(), out_comms.end());
    ctx.in_comms.assign(in_comms.begin(), in_comms.end());
    return ctx;
}

BlockDelta Blockmodel::move_delta(const VertexContext& ctx, std::int64_t to) const {
    const std::int64_t from = assignment_of(ctx.vertex);
    if (to == from) throw std::invalid_argument("move_delta: target equals current community");
    if (to < 0 || to >= allocated_count() || !is_live(to))
        throw std::invalid_argument("move_delta: target community not live");
    BlockDelta d;
    d.from = from;
    d.to = to;
    std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> cells;
    if (ctx.self_loops > 0) {
        cells[{from, from}] -= ctx.self_loops;
        cells[{to, to}] += ctx.self_loops;
    }
    for (const auto& [c, mult] : ctx.out_comms) {
        cells[{from, c}] -= mult;
        cells[{to, c}] += mult;
    }
    for (const auto& [c, mult] : ctx.in_comms) {
        cells[{c, from}] -= mult;
        cells[{c, to}] += mult;
    }
    for (const auto& [key, change] : cells)
        if (change != 0) d.cells.push_back({key.first, key.second, change});
    d.d_out_from = d_out_[static_cast<size_t>(from)] - ctx.k_out;
    d.d_in_from = d_in_[static_cast<size_t>(from)] - ctx.k_in;
    d.d_out_to = d_out_[static_cast<size_t>(to)] + ctx.k_out;
    d.d_in_to = d_in_[static_cast<size_t>(to)] + ctx.k_in;
    return d;
}

BlockDelta Blockmodel::merge_delta(std::int64_t c, std::int64_t to) const {
    if (!is_live(c)) throw std::invalid_argument("merge_delta: source community is dead");
    if (!is_live(to)) throw std::invalid_argument("merge_delta: target community is dead");
    if (c == to) throw std::invalid_argument("merge_delta: source equals target");
    BlockDelta d;
    d.from = c;
    d.to = to;
    std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> cells;
    for (const auto& [x, m] : rows_[static_cast<size_t>(c)]) {
        cells[{c, x}] -= m;
        cells[{to, x == c ? to : x}] += m;
    }
    for (const auto& [y, m] : cols_[static_cast<size_t>(c)]) {
        if (y == c) continue;  // diagonal handled through the row
        cells[{y, c}] -= m;
        cells[{y == to ? to : y, to}] += m;
    }
    for (const auto& [key, change] : cells)
        if (change != 0) d.cells.push_back({key.first, key.second, change});
    d.d_out_from = 0;
    d.d_in_from = 0;
    d.d_out_to = d_out_[static_cast<size_t>(to)] + d_out_[static_cast<size_t>(c)];
    d.d_in_to = d_in_[static_cast<size_t>(to)] + d_in_[static_cast<size_t>(c)];
    return d;
}

std::int64_t Blockmodel::cell_after(const BlockDelta& d, std::int64_t i, std::int64_t j) const {
    std::int64_t value = get(i, j);
    for (const auto& cell : d.cells)
        if (cell.row == i && cell.col == j) value += cell.change;
    return value;
}

double Blockmodel::affected_likelihood(const BlockDelta& d, bool after) const {
    // Union of nonzero cells in rows/cols {from, to} before and after the
    // change; std::map keeps the accumulation order canonical.
    std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> cells;
    for (const auto& [j, m] : rows_[static_cast<size_t>(d.from)]) cells[{d.from, j}] = m;
    for (const auto& [j, m] : rows_[static_cast<size_t>(d.to)]) cells[{d.to, j}] = m;
    for (const auto& [i, m] : cols_[static_cast<size_t>(d.from)])
        if (i != d.from && i != d.to) cells[{i, d.from}] = m;
    for (const auto& [i, m] : cols_[static_cast<size_t>(d.to)])
        if (i != d.from && i != d.to) cells[{i, d.to}] = m;
    if (after) {
        for (const auto& cell : d.cells) cells[{cell.row, cell.col}] += cell.change;
    }
    double sum = 0.0;
    for (const auto& [key, m] : cells) {
        if (m < 0) throw std::logic_error("affected_likelihood: negative cell");
        const auto [i, j] = key;
        std::int64_t dout = d_out_[static_cast<size_t>(i)];
        std::int64_t din = d_in_[static_cast<size_t>(j)];
        if (after) {
            if (i == d.from) dout = d.d_out_from;
            if (i == d.to) dout = d.d_out_to;
            if (j == d.from) din = d.d_in_from;
            if (j == d.to) din = d.d_in_to;
        }
        sum += cell_term(m, dout, din);
    }
    return sum;
}

double Blockmodel::delta_dl_move(const VertexContext& ctx, std::int64_t to) const {
    return delta_dl_move(move_delta(ctx, to));
}

double Blockmodel::delta_dl_move(const BlockDelta& d) const {
    // The community count is unchanged, so only the likelihood term moves.
    return affected_likelihood(d, false) - affected_likelihood(d, true);
}

double Blockmodel::delta_dl_merge(std::int64_t c, std::int64_t to) const {
    return delta_dl_merge(merge_delta(c, resolve(to)));
}

double Blockmodel::delta_dl_merge(const BlockDelta& d) const {
    if (live_count_ < 2) throw std::logic_error("delta_dl_merge: fewer than two live communities");
    if (num_edges_ == 0) return 0.0;
    const double e = static_cast<double>(num_edges_);
    const double c_old = static_cast<double>(live_count_);
    const double c_new = c_old - 1.0;
    const double model_delta = e * (entropy_h(c_new * c_new / e) - entropy_h(c_old * c_old / e)) +
                               static_cast<double>(num_vertices_) * (std::log(c_new) - std::log(c_old));
    const double likelihood_delta = affected_likelihood(d, true) - affected_likelihood(d, false);
    return model_delta - likelihood_delta;
}

namespace {

void apply_cell(std::vector<Blockmodel::Row>& rows, std::vector<Blockmodel::Row>& cols,
                std::int64_t i, std::int64_t j, std::int64_t change) {
    auto& row = rows[static_cast<size_t>(i)];
    auto it = row.find(j);
    const std::int64_t value = (it == row.end() ? 0 : it->second) + change;
    if (value < 0) throw std::logic_error("Blockmodel: cell driven negative");
    if (value == 0) {
        if (it != row.end()) row.erase(it);
        cols[static_cast<size_t>(j)].erase(i);
    } else {
        row[j] = value;
        cols[static_cast<size_t>(j)][i] = value;
    }
}

}  // namespace

void Blockmodel::apply_move(const VertexContext& ctx, std::int64_t to) {
    const BlockDelta d = move_delta(ctx, to);
    for (const auto& cell : d.cells) apply_cell(rows_, cols_, cell.row, cell.col, cell.change);
    d_out_[static_cast<size_t>(d.from)] = d.d_out_from;
    d_in_[static_cast<size_t>(d.from)] = d.d_in_from;
    d_out_[static_cast<size_t>(d.to)] = d.d_out_to;
    d_in_[static_cast<size_t>(d.to)] = d.d_in_to;
    assignment_[static_cast<size_t>(ctx.vertex)] = to;
}

void Blockmodel::apply_merge(std::int64_t c, std::int64_t to) {
    if (!is_live(c)) throw std::invalid_argument("apply_merge: source already merged");
    const std::int64_t target = resolve(to);
    if (target == c) throw std::invalid_argument("apply_merge: target resolves to source");
    const BlockDelta d = merge_delta(c, target);
    for (const auto& cell : d.cells) apply_cell(rows_, cols_, cell.row, cell.col, cell.change);
    d_out_[static_cast<size_t>(c)] = 0;
    d_in_[static_cast<size_t>(c)] = 0;
    d_out_[static_cast<size_t>(target)] = d.d_out_to;
    d_in_[static_cast<size_t>(target)] = d.d_in_to;
    forward_[static_cast<size_t>(c)] = target;
    --live_count_;
}

void Blockmodel::renumber() {
    std::vector<std::int64_t> new_id(static_cast<size_t>(allocated_count()), -1);
    std::int64_t next = 0;
    for (std::int64_t c = 0; c < allocated_count(); ++c)
        if (is_live(c)) new_id[static_cast<size_t>(c)] = next++;
    if (next != live_count_) throw std::logic_error("renumber: live count mismatch");
    std::vector<Row> rows(static_cast<size_t>(next)), cols(static_cast<size_t>(next));
    std::vector<std::int64_t> d_out(static_cast<size_t>(next), 0), d_in(static_cast<size_t>(next), 0);
    for (std::int64_t c = 0; c < allocated_count(); ++c) {
        const std::int64_t nc = new_id[static_cast<size_t>(c)];
        if (nc < 0) continue;
        auto& row = rows[static_cast<size_t>(nc)];
        for (const auto& [j, m] : rows_[static_cast<size_t>(c)]) {
            const std::int64_t nj = new_id[static_cast<size_t>(j)];
            if (nj < 0) throw std::logic_error("renumber: edge into dead community");
            row[nj] = m;
            cols[static_cast<size_t>(nj)][nc] = m;
        }
        d_out[static_cast<size_t>(nc)] = d_out_[static_cast<size_t>(c)];
        d_in[static_cast<size_t>(nc)] = d_in_[static_cast<size_t>(c)];
    }
    for (auto& a : assignment_) a = new_id[static_cast<size_t>(resolve(a))];
    rows_ = std::move(rows);
    cols_ = std::move(cols);
    d_out_ = std::move(d_out);
    d_in_ = std::move(d_in);
    forward_.resize(static_cast<size_t>(next));
    for (std::int64_t c = 0; c < next; ++c) forward_[static_cast<size_t>(c)] = c;
}

std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> Blockmodel::sorted_cells() const {
    std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> cells;
    for (std::int64_t i = 0; i < allocated_count(); ++i)
        for (const auto& [j, m] : rows_[static_cast<size_t>(i)]) cells.emplace_back(i, j, m);
    std::sort(cells.begin(), cells.end());
    return cells;
}

std::uint64_t Blockmodel::checksum() const {
    // FNV-1a over the canonical cell listing, degrees, and assignment.
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t x) {
        for (int b = 0; b < 8; ++b) {
            h ^= (x >> (8 * b)) & 0xff;
            h *= 1099511628211ULL;
        }
    };
    mix(static_cast<std::uint64_t>(live_count_));
    mix(static_cast<std::uint64_t>(num_edges_));
    for (const auto& [i, j, m] : sorted_cells()) {
        mix(static_cast<std::uint64_t>(i));
        mix(static_cast<std::uint64_t>(j));
        mix(static_cast<std::uint64_t>(m));
    }
    for (std::int64_t c = 0; c < allocated_count(); ++c) {
        mix(static_cast<std::uint64_t>(d_out_[static_cast<size_t>(c)]));
        mix(static_cast<std::uint64_t>(d_in_[static_cast<size_t>(c)]));
    }
    for (std::int64_t v = 0; v < num_vertices_; ++v)
        mix(static_cast<std::uint64_t>(resolve(assignment_[static_cast<size_t>(v)])));
    return h;
}

void Blockmodel::check_invariants(const Graph& g) const {
    std::int64_t total = 0, total_out = 0, total_in = 0;
    for (std::int64_t i = 0; i < allocated_count(); ++i) {
        std::int64_t row_sum = 0;
        for (const auto& [j, m] : rows_[static_cast<size_t>(i)]) {
            if (m <= 0) throw std::logic_error("invariant: non-positive stored cell");
            const auto& col = cols_[static_cast<size_t>(j)];
            auto it = col.find(i);
            if (it == col.end() || it->second != m)
                throw std::logic_error("invariant: transpose mismatch");
            row_sum += m;
            total += m;
        }
        std::int64_t col_sum = 0;
        for (const auto& [j, m] : cols_[static_cast<size_t>(i)]) {
            auto it = rows_[static_cast<size_t>(j)].find(i);
            if (it == rows_[static_cast<size_t>(j)].end() || it->second != m)
                throw std::logic_error("invariant: transpose mismatch (col side)");
            col_sum += m;
        }
        if (!is_live(i)) {
            if (row_sum != 0 || col_sum != 0 || d_out_[static_cast<size_t>(i)] != 0 ||
                d_in_[static_cast<size_t>(i)] != 0)
                throw std::logic_error("invariant: dead community not empty");
        }
        total_out += d_out_[static_cast<size_t>(i)];
        total_in += d_in_[static_cast<size_t>(i)];
    }
    if (total != num_edges_) throw std::logic_error("invariant: cell sum != E");
    if (total_out != num_edges_ || total_in != num_edges_)
        throw std::logic_error("invariant: degree sum != E");
    // Degree coherence per community against the graph.
    std::vector<std::int64_t> out_check(static_cast<size_t>(allocated_count()), 0);
    std::vector<std::int64_t> in_check(static_cast<size_t>(allocated_count()), 0);
    for (std::int64_t v = 0; v < num_vertices_; ++v) {
        const std::int64_t c = resolve(assignment_[static_cast<size_t>(v)]);
        if (!is_live(c)) throw std::logic_error("invariant: assignment resolves to dead community");
        out_check[static_cast<size_t>(c)] += g.d_out[static_cast<size_t>(v)];
        in_check[static_cast<size_t>(c)] += g.d_in[static_cast<size_t>(v)];
    }
    for (std::int64_t c = 0; c < allocated_count(); ++c) {
        if (out_check[static_cast<size_t>(c)] != d_out_[static_cast<size_t>(c)] ||
            in_check[static_cast<size_t>(c)] != d_in_[static_cast<size_t>(c)])
            throw std::logic_error("invariant: community degree mismatch");
    }
    // Rebuilding from the resolved assignment must reproduce the matrix.
    Blockmodel rebuilt(g, resolved_assignment(), allocated_count());
    if (rebuilt.sorted_cells() != sorted_cells())
        throw std::logic_error("invariant: rebuild does not reproduce matrix");
}

}  // namespace sbp
