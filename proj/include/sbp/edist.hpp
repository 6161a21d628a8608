#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sbp/comm.hpp"
#include "sbp/inference.hpp"

namespace sbp {

// Exact distributed inference: every rank keeps a full blockmodel replica and
// owns a slice of the work. Merge proposals for community c belong to rank
// c mod N; vertex ownership follows the degree-balanced schedule below.

// Vertices sorted by (total degree desc, id asc); sorted position p goes to
// rank r iff p mod 2N is r or 2N−1−r (boustrophedon dealing). Returns the
// owned vertex ids per rank, each list ascending.
std::vector<std::vector<std::int64_t>> degree_balanced_schedule(
    std::span<const std::int64_t> d_total, int ranks);

// Wire encodings: 64-bit little-endian words, count-prefixed; delta_dl
// travels as raw IEEE-754 bits so gathers are bit-exact.
std::string serialize_merge_proposals(std::span<const MergeProposal> proposals);
std::vector<MergeProposal> deserialize_merge_proposals(std::string_view bytes);
std::string serialize_move_records(std::span<const MoveRecord> records);
std::vector<MoveRecord> deserialize_move_records(std::string_view bytes);

// Synchronized block-merge phase: local best-of-x proposals for owned
// communities, an allgather, then the same sorted greedy application on every
// replica.
void distributed_block_merge(const Graph& g, Blockmodel& b, const SbpConfig& cfg,
                             std::int64_t target_count, std::int64_t phase_index,
                             Communicator& comm);

// Synchronized MCMC phase: each sweep proposes moves for owned vertices only,
// allgathers accepted MoveRecords, applies them in ascending vertex order,
// and rebuilds the replica from the synchronized assignment.
McmcStats distributed_mcmc_phase(const Graph& g, Blockmodel& b, const SbpConfig& cfg,
                                 std::span<const std::int64_t> owned_vertices, int workers,
                                 double threshold, std::int64_t phase_index,
                                 Communicator& comm);

// Full inference over comm. All replicas finish with identical partitions;
// with cfg.verify_replicas set, checksums are cross-checked at every
// synchronization point and a mismatch raises naming the first diverging
// cell.
SbpResult edist_run(const Graph& g, const SbpConfig& cfg, Communicator& comm,
                    int workers = 1);

}  // namespace sbp
