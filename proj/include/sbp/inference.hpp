#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sbp/blockmodel.hpp"
#include "sbp/graph.hpp"
#include "sbp/random.hpp"

namespace sbp {

struct SbpConfig {
    std::int64_t merge_proposals_per_community = 10;
    std::int64_t max_mcmc_sweeps = 100;
    // Convergence threshold t: a phase stops when the smoothed per-sweep DL
    // improvement drops below t·|DL|. Before the golden-ratio bracket is
    // established a 10× looser threshold is used.
    double convergence_threshold = 1e-4;
    double beta = 3.0;
    double community_reduction_rate = 0.5;
    double high_degree_fraction = 0.07;
    std::uint64_t seed = 0;
    // When set, replicated runs cross-check blockmodel checksums at every
    // synchronization point.
    bool verify_replicas = false;
    // Divide-and-conquer combination stops once this many partials remain.
    std::int64_t combine_threshold = 4;

    void validate() const;  // throws std::invalid_argument
};

struct Proposal {
    std::int64_t candidate = -1;
    double forward_prob = 0.0;  // exact probability the mechanism yields candidate
};

// Candidate community for moving vertex v, drawn via a random incident edge:
// the neighbor's community t seeds either a uniform draw (with probability
// C/(d_t + C)) or a draw proportional to M[t][s] + M[s][t] over s != current.
Proposal propose_move_target(const Graph& g, const Blockmodel& b, std::int64_t v, Rng& rng);
// Same mechanism with a community as the source; used by the merge phase.
Proposal propose_merge_target(const Blockmodel& b, std::int64_t community, Rng& rng);

// Probability that, in the post-move state described by `delta`, the reverse
// move (back to delta.from) would be proposed for the same vertex.
double move_backward_probability(const Blockmodel& b, const VertexContext& ctx,
                                 const BlockDelta& delta);

struct AcceptOutcome {
    bool accepted = false;
    bool numeric_warning = false;  // non-finite delta_dl was rejected
};

// Metropolis-Hastings test: accept iff u < min(1, exp(−beta·delta_dl)·p_b/p_f)
// with u uniform in [0, 1). Probabilities must lie in (0, 1].
AcceptOutcome accept_move(double delta_dl, double p_forward, double p_backward,
                          double beta, Rng& rng);

struct MergeProposal {
    std::int64_t community = -1;
    std::int64_t target = -1;
    double delta_dl = 0.0;
};

struct MoveRecord {
    std::int64_t vertex = -1;
    std::int64_t destination = -1;
};

// Best-of-x merge proposal per community whose id satisfies
// id mod ranks == rank, evaluated against the current (pre-phase) matrix.
std::vector<MergeProposal> collect_merge_proposals(const Blockmodel& b, const SbpConfig& cfg,
                                                   std::int64_t phase_index, int rank, int ranks);

// Sorts proposals by (delta_dl, community), resolves targets through the
// forwarding chain, applies merges until `target_count` live communities
// remain (self-merges skipped), then renumbers. Returns merges applied.
std::int64_t apply_merge_proposals(Blockmodel& b, std::vector<MergeProposal> proposals,
                                   std::int64_t target_count);

// One agglomerative phase: propose, sort, greedily apply down to target_count.
void block_merge_phase(const Graph& g, Blockmodel& b, const SbpConfig& cfg,
                       std::int64_t target_count, std::int64_t phase_index);

struct SweepResult {
    std::vector<MoveRecord> accepted;  // ascending vertex order not guaranteed
    std::int64_t proposals = 0;
    std::int64_t numeric_warnings = 0;
};

// One Metropolis-Hastings pass over `vertices`. The top high_degree_fraction
// of them (by total degree) is processed sequentially; the rest is processed
// in batches, each batch split across `workers` threads that read the
// frozen pre-batch state, with accepted moves applied serially in vertex
// order at batch end. workers == 1 runs everything on the calling thread.
// Randomness comes from streams keyed by (seed, rank, phase, sweep, worker).
SweepResult hybrid_sweep(const Graph& g, Blockmodel& b, const SbpConfig& cfg,
                         std::span<const std::int64_t> vertices, int workers,
                         std::int64_t phase_index, std::int64_t sweep_index, int rank);

struct McmcStats {
    std::int64_t sweeps = 0;
    std::int64_t accepted = 0;
    double final_dl = 0.0;
};

// Tracks exponentially smoothed (factor 1/3) per-sweep DL improvement and
// signals convergence once |smoothed| < threshold·|DL|.
class ConvergenceTracker {
  public:
    explicit ConvergenceTracker(double threshold) : threshold_(threshold) {}
    bool update(double improvement, double dl);

  private:
    double threshold_;
    double smoothed_ = 0.0;
    bool seeded_ = false;
};

// Repeated full sweeps until convergence or cfg.max_mcmc_sweeps. The matrix
// is rebuilt from the assignment after every sweep.
McmcStats mcmc_phase(const Graph& g, Blockmodel& b, const SbpConfig& cfg, int workers,
                     double threshold, std::int64_t phase_index);

struct PhaseTraceRow {
    std::string kind;  // "merge" or "mcmc"
    std::int64_t phase_index = 0;
    std::int64_t communities = 0;
    double dl = 0.0;
    std::int64_t accepted = 0;
    double seconds = 0.0;
};

struct BracketPoint {
    std::int64_t communities = 0;
    double dl = 0.0;
};

struct SbpResult {
    std::vector<std::int64_t> partition;  // densely renumbered
    std::int64_t community_count = 0;
    double dl = 0.0;
    std::vector<BracketPoint> bracket;  // final (high, mid, low) when formed
    std::vector<PhaseTraceRow> trace;
};

// Phase implementations a driver alternates between; distributed runs swap in
// synchronized versions.
struct PhaseHooks {
    std::function<void(Blockmodel&, std::int64_t target, std::int64_t phase_index)> merge;
    std::function<McmcStats(Blockmodel&, double threshold, std::int64_t phase_index)> mcmc;
};

// Golden-ratio search over the community count: halve until a DL minimum is
// bracketed, then probe golden-section interior points of the wider
// sub-interval (ratio 0.618, up to three stored blockmodels) until no
// untested count remains between the endpoints.
SbpResult run_golden_driver(const Graph& g, const SbpConfig& cfg, Blockmodel start,
                            PhaseHooks& hooks);

// Full single-process inference from the singleton partition.
SbpResult sbp(const Graph& g, const SbpConfig& cfg, int workers = 1);
// Continuation from an existing assignment (used by the divide-and-conquer
// fine-tune step).
SbpResult sbp_from(const Graph& g, const SbpConfig& cfg,
                   std::vector<std::int64_t> init_assignment, int workers = 1);

}  // namespace sbp
