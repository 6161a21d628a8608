#include "sbp/dcsbp.hpp"

#include <algorithm>
#include <unordered_map>

#include "sbp/blockmodel.hpp"
#include "wire.hpp"

namespace sbp {

namespace {

constexpr std::uint64_t kChildSeedTag = 0xDC5B;

}  // namespace

std::string serialize_partial(const PartialResult& p) {
    if (p.vertex_map.size() != p.assignment.size())
        throw std::invalid_argument("serialize_partial: vertex_map/assignment size mismatch");
    std::string out;
    out.reserve(24 + p.vertex_map.size() * 16);
    wire::put_u64(out, static_cast<std::uint64_t>(p.rank));
    wire::put_u64(out, p.vertex_map.size());
    for (const std::int64_t v : p.vertex_map) wire::put_i64(out, v);
    for (const std::int64_t a : p.assignment) wire::put_i64(out, a);
    wire::put_i64(out, p.community_count);
    return out;
}

PartialResult deserialize_partial(std::string_view bytes) {
    wire::Reader reader(bytes, "partial partition");
    PartialResult p;
    p.rank = static_cast<int>(reader.u64());
    const std::uint64_t count = reader.count(16);
    p.vertex_map.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) p.vertex_map.push_back(reader.i64());
    p.assignment.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) p.assignment.push_back(reader.i64());
    p.community_count = reader.i64();
    reader.expect_done();
    if (p.community_count < 0 || (count > 0 && p.community_count == 0))
        throw CommError("partial partition: implausible community count");
    for (const std::int64_t a : p.assignment)
        if (a < 0 || a >= p.community_count)
            throw CommError("partial partition: label out of range");
    return p;
}

PartialResult combine_pair(const PartialResult& pa, const PartialResult& pb, const Graph& g) {
    const std::int64_t na = static_cast<std::int64_t>(pa.vertex_map.size());
    const std::int64_t nb = static_cast<std::int64_t>(pb.vertex_map.size());
    const std::int64_t n = na + nb;

    std::vector<std::int64_t> vertex_map;
    vertex_map.reserve(static_cast<size_t>(n));
    vertex_map.insert(vertex_map.end(), pa.vertex_map.begin(), pa.vertex_map.end());
    vertex_map.insert(vertex_map.end(), pb.vertex_map.begin(), pb.vertex_map.end());

    std::unordered_map<std::int64_t, std::int64_t> local_of;
    local_of.reserve(static_cast<size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        if (!local_of.emplace(vertex_map[static_cast<size_t>(i)], i).second)
            throw std::invalid_argument("combine_pair: partials share a vertex");
    }

    // Union subgraph over both vertex sets, cross edges included: the merge
    // deltas must see the links between the two halves.
    std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> edges;
    for (std::int64_t i = 0; i < n; ++i) {
        const std::int64_t global = vertex_map[static_cast<size_t>(i)];
        for (const auto& [dst, mult] : g.out_neighbors[static_cast<size_t>(global)]) {
            const auto it = local_of.find(dst);
            if (it != local_of.end()) edges.emplace_back(i, it->second, mult);
        }
    }
    const Graph sub = build_graph(n, edges);

    const std::int64_t ca = pa.community_count;
    const std::int64_t cb = pb.community_count;
    std::vector<std::int64_t> labels(static_cast<size_t>(n));
    for (std::int64_t i = 0; i < na; ++i)
        labels[static_cast<size_t>(i)] = pa.assignment[static_cast<size_t>(i)];
    for (std::int64_t i = 0; i < nb; ++i)
        labels[static_cast<size_t>(na + i)] = ca + pb.assignment[static_cast<size_t>(i)];
    Blockmodel bm(sub, std::move(labels), ca + cb);

    // Fold each pb community into its best pa community, refreshing deltas
    // after every merge so later folds see earlier ones.
    for (std::int64_t j = 0; j < cb; ++j) {
        const std::int64_t source = ca + j;
        std::int64_t best = 0;
        double best_delta = bm.delta_dl_merge(source, 0);
        for (std::int64_t a = 1; a < ca; ++a) {
            const double delta = bm.delta_dl_merge(source, a);
            if (delta < best_delta) {
                best_delta = delta;
                best = a;
            }
        }
        bm.apply_merge(source, best);
    }

    PartialResult out;
    out.rank = pa.rank;
    out.vertex_map = std::move(vertex_map);
    out.assignment = bm.resolved_assignment();
    out.community_count = ca;
    return out;
}

std::optional<SbpResult> dcsbp_run(const Graph& g, const SbpConfig& cfg, Communicator& comm,
                                   int workers, DcsbpStats* stats) {
    cfg.validate();
    const int ranks = comm.size();
    if (ranks == 1) {
        // One rank degenerates to plain single-process inference.
        if (stats) {
            stats->pairwise_combines = 0;
            const auto parts = round_robin_split(g, 1);
            stats->island_fraction = island_fraction(parts);
        }
        return sbp(g, cfg, workers);
    }

    const auto parts = round_robin_split(g, ranks);
    const Subgraph& mine = parts[static_cast<size_t>(comm.rank())];

    SbpConfig local_cfg = cfg;
    local_cfg.seed = Rng::derive_seed(cfg.seed, {kChildSeedTag, static_cast<std::uint64_t>(comm.rank())});
    const SbpResult local = sbp(mine.graph, local_cfg, workers);

    PartialResult partial;
    partial.rank = comm.rank();
    partial.vertex_map = mine.vertex_map;
    partial.assignment = local.partition;
    partial.community_count = local.community_count;

    if (comm.rank() != 0) {
        comm.send_to_root(serialize_partial(partial));
        return std::nullopt;
    }

    std::vector<PartialResult> remaining;
    remaining.reserve(static_cast<size_t>(ranks));
    remaining.push_back(std::move(partial));
    const auto payloads = comm.receive_at_root();
    for (int r = 1; r < ranks; ++r) {
        PartialResult p = deserialize_partial(payloads[static_cast<size_t>(r)]);
        if (p.rank != r) throw CommError("protocol error: partial arrived under the wrong rank");
        remaining.push_back(std::move(p));
    }

    // Pairwise rounds; a round stops combining once enough pairs are folded
    // to land exactly on the threshold.
    std::int64_t combines = 0;
    while (static_cast<std::int64_t>(remaining.size()) > cfg.combine_threshold) {
        std::vector<PartialResult> next;
        next.reserve((remaining.size() + 1) / 2);
        size_t i = 0;
        while (i < remaining.size()) {
            const std::int64_t left =
                static_cast<std::int64_t>(next.size() + (remaining.size() - i));
            if (i + 1 < remaining.size() && left > cfg.combine_threshold) {
                next.push_back(combine_pair(remaining[i], remaining[i + 1], g));
                ++combines;
                i += 2;
            } else {
                next.push_back(std::move(remaining[i]));
                ++i;
            }
        }
        remaining = std::move(next);
    }

    // Concatenate with disjoint label ranges, then fine-tune globally.
    std::vector<std::int64_t> assignment(static_cast<size_t>(g.num_vertices), -1);
    std::int64_t offset = 0;
    for (const auto& p : remaining) {
        for (size_t i = 0; i < p.vertex_map.size(); ++i)
            assignment[static_cast<size_t>(p.vertex_map[i])] = offset + p.assignment[i];
        offset += p.community_count;
    }
    for (const std::int64_t label : assignment)
        if (label < 0) throw CommError("protocol error: partials do not cover every vertex");

    if (stats) {
        stats->pairwise_combines = combines;
        stats->island_fraction = island_fraction(parts);
    }
    return sbp_from(g, cfg, std::move(assignment), workers);
}

}  // namespace sbp
