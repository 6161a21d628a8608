#include "sbp/edist.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "wire.hpp"

namespace sbp {

std::vector<std::vector<std::int64_t>> degree_balanced_schedule(
    std::span<const std::int64_t> d_total, int ranks) {
    if (ranks < 1) throw std::invalid_argument("degree_balanced_schedule: ranks must be positive");
    const std::int64_t n = static_cast<std::int64_t>(d_total.size());
    std::vector<std::int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        if (d_total[static_cast<size_t>(a)] != d_total[static_cast<size_t>(b)])
            return d_total[static_cast<size_t>(a)] > d_total[static_cast<size_t>(b)];
        return a < b;
    });
    std::vector<std::vector<std::int64_t>> owned(static_cast<size_t>(ranks));
    const std::int64_t cycle = 2 * static_cast<std::int64_t>(ranks);
    for (std::int64_t p = 0; p < n; ++p) {
        const std::int64_t slot = p % cycle;
        const std::int64_t r = slot < ranks ? slot : cycle - 1 - slot;
        owned[static_cast<size_t>(r)].push_back(order[static_cast<size_t>(p)]);
    }
    for (auto& list : owned) std::sort(list.begin(), list.end());
    return owned;
}

std::string serialize_merge_proposals(std::span<const MergeProposal> proposals) {
    std::string out;
    out.reserve(8 + proposals.size() * 24);
    wire::put_u64(out, proposals.size());
    for (const auto& p : proposals) {
        wire::put_i64(out, p.community);
        wire::put_i64(out, p.target);
        wire::put_u64(out, std::bit_cast<std::uint64_t>(p.delta_dl));
    }
    return out;
}

std::vector<MergeProposal> deserialize_merge_proposals(std::string_view bytes) {
    wire::Reader reader(bytes, "merge proposals");
    const std::uint64_t count = reader.count(24);
    std::vector<MergeProposal> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        MergeProposal p;
        p.community = reader.i64();
        p.target = reader.i64();
        p.delta_dl = std::bit_cast<double>(reader.u64());
        out.push_back(p);
    }
    reader.expect_done();
    return out;
}

std::string serialize_move_records(std::span<const MoveRecord> records) {
    std::string out;
    out.reserve(8 + records.size() * 16);
    wire::put_u64(out, records.size());
    for (const auto& r : records) {
        wire::put_i64(out, r.vertex);
        wire::put_i64(out, r.destination);
    }
    return out;
}

std::vector<MoveRecord> deserialize_move_records(std::string_view bytes) {
    wire::Reader reader(bytes, "move records");
    const std::uint64_t count = reader.count(16);
    std::vector<MoveRecord> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        MoveRecord r;
        r.vertex = reader.i64();
        r.destination = reader.i64();
        out.push_back(r);
    }
    reader.expect_done();
    return out;
}

namespace {

std::string serialize_cells(
    const std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>>& cells) {
    std::string out;
    out.reserve(8 + cells.size() * 24);
    wire::put_u64(out, cells.size());
    for (const auto& [i, j, m] : cells) {
        wire::put_i64(out, i);
        wire::put_i64(out, j);
        wire::put_i64(out, m);
    }
    return out;
}

std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> deserialize_cells(
    std::string_view bytes) {
    wire::Reader reader(bytes, "matrix cells");
    const std::uint64_t count = reader.count(24);
    std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::int64_t row = reader.i64();
        const std::int64_t col = reader.i64();
        const std::int64_t m = reader.i64();
        out.emplace_back(row, col, m);
    }
    reader.expect_done();
    return out;
}

// Cross-checks replica digests; on mismatch gathers full matrices and names
// the first cell where some replica disagrees with rank 0.
void verify_replica_checksums(const Blockmodel& b, Communicator& comm) {
    std::string digest;
    wire::put_u64(digest, b.checksum());
    const auto digests = comm.allgather(digest);
    bool diverged = false;
    for (const auto& d : digests)
        if (d != digests[0]) diverged = true;
    if (!diverged) return;

    const auto gathered = comm.allgather(serialize_cells(b.sorted_cells()));
    const auto reference = deserialize_cells(gathered[0]);
    for (int r = 1; r < comm.size(); ++r) {
        const auto cells = deserialize_cells(gathered[static_cast<size_t>(r)]);
        const size_t n = std::min(reference.size(), cells.size());
        for (size_t i = 0; i < n; ++i) {
            if (cells[i] == reference[i]) continue;
            const auto& [row, col, m] = cells[i];
            throw CommError("replica divergence at cell (" + std::to_string(row) + ", " +
                            std::to_string(col) + "): rank " + std::to_string(r) + " holds " +
                            std::to_string(m) + ", rank 0 holds " +
                            std::to_string(std::get<2>(reference[i])) + " at its slot");
        }
        if (cells.size() != reference.size())
            throw CommError("replica divergence: rank " + std::to_string(r) + " holds " +
                            std::to_string(cells.size()) + " nonzero cells, rank 0 holds " +
                            std::to_string(reference.size()));
    }
    throw CommError("replica divergence: checksums differ away from rank 0");
}

}  // namespace

void distributed_block_merge(const Graph& g, Blockmodel& b, const SbpConfig& cfg,
                             std::int64_t target_count, std::int64_t phase_index,
                             Communicator& comm) {
    (void)g;
    if (target_count < 1 || target_count >= b.community_count())
        throw std::invalid_argument("distributed_block_merge: target must be in [1, C)");
    const auto local = collect_merge_proposals(b, cfg, phase_index, comm.rank(), comm.size());
    const auto gathered = comm.allgather(serialize_merge_proposals(local));
    std::vector<MergeProposal> all;
    for (const auto& payload : gathered) {
        auto part = deserialize_merge_proposals(payload);
        all.insert(all.end(), part.begin(), part.end());
    }
    apply_merge_proposals(b, std::move(all), target_count);
    if (cfg.verify_replicas) verify_replica_checksums(b, comm);
}

McmcStats distributed_mcmc_phase(const Graph& g, Blockmodel& b, const SbpConfig& cfg,
                                 std::span<const std::int64_t> owned_vertices, int workers,
                                 double threshold, std::int64_t phase_index,
                                 Communicator& comm) {
    McmcStats stats;
    stats.final_dl = b.description_length();
    if (b.community_count() < 2) return stats;
    double dl = stats.final_dl;
    ConvergenceTracker tracker(threshold);
    for (std::int64_t sweep = 0; sweep < cfg.max_mcmc_sweeps; ++sweep) {
        const SweepResult res =
            hybrid_sweep(g, b, cfg, owned_vertices, workers, phase_index, sweep, comm.rank());
        const auto gathered = comm.allgather(serialize_move_records(res.accepted));
        std::vector<MoveRecord> moves;
        for (const auto& payload : gathered) {
            auto part = deserialize_move_records(payload);
            moves.insert(moves.end(), part.begin(), part.end());
        }
        std::sort(moves.begin(), moves.end(), [](const MoveRecord& a, const MoveRecord& b2) {
            return a.vertex < b2.vertex;
        });
        std::vector<std::int64_t> assignment = b.resolved_assignment();
        const std::int64_t alloc = b.allocated_count();
        std::int64_t previous = -1;
        for (const auto& move : moves) {
            if (move.vertex == previous)
                throw CommError("protocol error: vertex " + std::to_string(move.vertex) +
                                " moved by two ranks in one sweep");
            previous = move.vertex;
            if (move.vertex < 0 || move.vertex >= g.num_vertices || move.destination < 0 ||
                move.destination >= alloc)
                throw CommError("protocol error: move record out of range");
            assignment[static_cast<size_t>(move.vertex)] = move.destination;
        }
        // Rebuild so every sweep starts from a canonical matrix.
        b = Blockmodel(g, std::move(assignment), alloc);
        if (cfg.verify_replicas) verify_replica_checksums(b, comm);
        const double new_dl = b.description_length();
        stats.accepted += static_cast<std::int64_t>(moves.size());
        ++stats.sweeps;
        const double improvement = dl - new_dl;
        dl = new_dl;
        if (tracker.update(improvement, dl)) break;
    }
    stats.final_dl = dl;
    return stats;
}

SbpResult edist_run(const Graph& g, const SbpConfig& cfg, Communicator& comm, int workers) {
    cfg.validate();
    const auto schedule = degree_balanced_schedule(g.d_total, comm.size());
    const auto& owned = schedule[static_cast<size_t>(comm.rank())];
    PhaseHooks hooks;
    hooks.merge = [&](Blockmodel& b, std::int64_t target, std::int64_t phase) {
        distributed_block_merge(g, b, cfg, target, phase, comm);
    };
    hooks.mcmc = [&](Blockmodel& b, double threshold, std::int64_t phase) {
        return distributed_mcmc_phase(g, b, cfg, owned, workers, threshold, phase, comm);
    };
    return run_golden_driver(g, cfg, Blockmodel::singleton_partition(g), hooks);
}

}  // namespace sbp
