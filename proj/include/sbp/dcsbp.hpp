#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sbp/comm.hpp"
#include "sbp/inference.hpp"

namespace sbp {

// Divide-and-conquer inference: ranks partition the vertices round-robin,
// solve their induced subgraphs independently, and the root stitches the
// partial partitions back together.

struct PartialResult {
    int rank = 0;
    std::vector<std::int64_t> vertex_map;   // local index -> global vertex id
    std::vector<std::int64_t> assignment;   // per local vertex, dense labels
    std::int64_t community_count = 0;
};

std::string serialize_partial(const PartialResult& p);
PartialResult deserialize_partial(std::string_view bytes);

// Merges pb's communities (ascending id) one at a time into whichever pa
// community currently minimizes the merge DL delta on the union subgraph of
// g (cross edges included), re-evaluating deltas after every merge. The
// result keeps pa's community count and labels.
PartialResult combine_pair(const PartialResult& pa, const PartialResult& pb, const Graph& g);

struct DcsbpStats {
    std::int64_t pairwise_combines = 0;
    double island_fraction = 0.0;
};

// Full divide-and-conquer run. Only the root returns a result; other ranks
// return nullopt after shipping their partials. With one rank this is
// exactly single-process inference. The root pairwise-combines partials
// until at most cfg.combine_threshold remain, concatenates them with
// disjoint label ranges, and fine-tunes from the merged partition.
std::optional<SbpResult> dcsbp_run(const Graph& g, const SbpConfig& cfg, Communicator& comm,
                                   int workers = 1, DcsbpStats* stats = nullptr);

}  // namespace sbp
