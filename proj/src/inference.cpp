#include "sbp/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace sbp {

namespace {

constexpr std::uint64_t kMergeStreamTag = 0xB16D;
constexpr std::uint64_t kSweepStreamTag = 0x3C3C;
// Low-degree vertices are processed in this many frozen-state batches per
// sweep; accepted moves land at batch end.
constexpr std::int64_t kSweepBatches = 4;
constexpr double kGoldenRatio = 0.618;
// Looser convergence multiplier used until the golden bracket is formed.
constexpr double kPreBracketSlack = 10.0;

// Read-only view of the blockmodel, optionally overlaid with a pending
// change; lets the proposal law be evaluated before and after a move through
// one code path.
class StateView {
  public:
    StateView(const Blockmodel& b, const BlockDelta* delta) : b_(b), delta_(delta) {
        if (delta_ == nullptr) return;
        for (const auto& cell : delta_->cells) {
            if (cell.row == delta_->from) row_from_[cell.col] += cell.change;
            else if (cell.row == delta_->to) row_to_[cell.col] += cell.change;
            if (cell.col == delta_->from) col_from_[cell.row] += cell.change;
            else if (cell.col == delta_->to) col_to_[cell.row] += cell.change;
        }
    }

    std::int64_t cell(std::int64_t i, std::int64_t j) const {
        std::int64_t value = b_.get(i, j);
        if (delta_ == nullptr) return value;
        const std::unordered_map<std::int64_t, std::int64_t>* overlay = nullptr;
        std::int64_t key = j;
        if (i == delta_->from) overlay = &row_from_;
        else if (i == delta_->to) overlay = &row_to_;
        else if (j == delta_->from) { overlay = &col_from_; key = i; }
        else if (j == delta_->to) { overlay = &col_to_; key = i; }
        if (overlay != nullptr) {
            auto it = overlay->find(key);
            if (it != overlay->end()) value += it->second;
        }
        return value;
    }

    std::int64_t degree_total(std::int64_t c) const {
        if (delta_ != nullptr) {
            if (c == delta_->from) return delta_->d_out_from + delta_->d_in_from;
            if (c == delta_->to) return delta_->d_out_to + delta_->d_in_to;
        }
        return b_.degree_total(c);
    }

  private:
    const Blockmodel& b_;
    const BlockDelta* delta_;
    std::unordered_map<std::int64_t, std::int64_t> row_from_, row_to_, col_from_, col_to_;
};

// Exact probability that the edge-seeded mechanism proposes `candidate` for a
// source currently in `current`, given the source's incident mass over
// neighbor communities. wt must be sorted by community; k = total mass.
double mechanism_probability(const StateView& view, std::int64_t live_count,
                             std::span<const std::pair<std::int64_t, std::int64_t>> wt,
                             std::int64_t k, std::int64_t current, std::int64_t candidate) {
    const double c = static_cast<double>(live_count);
    const double uniform = 1.0 / (c - 1.0);
    if (k == 0) return uniform;  // degree-zero source: pure uniform fallback
    double prob = 0.0;
    for (const auto& [t, mass] : wt) {
        const double q = static_cast<double>(mass) / static_cast<double>(k);
        const std::int64_t d_t = view.degree_total(t);
        const double smooth = c / (static_cast<double>(d_t) + c);
        const std::int64_t w_total = d_t - (view.cell(t, current) + view.cell(current, t));
        double kernel;
        if (w_total > 0) {
            kernel = static_cast<double>(view.cell(t, candidate) + view.cell(candidate, t)) /
                     static_cast<double>(w_total);
        } else {
            kernel = uniform;
        }
        prob += q * (smooth * uniform + (1.0 - smooth) * kernel);
    }
    return prob;
}

// Incident mass per neighbor community for a vertex (self-loop mass counts
// on both sides, landing on the current community).
std::vector<std::pair<std::int64_t, std::int64_t>> vertex_mass(const VertexContext& ctx,
                                                               std::int64_t current) {
    std::map<std::int64_t, std::int64_t> acc;
    for (const auto& [c, m] : ctx.out_comms) acc[c] += m;
    for (const auto& [c, m] : ctx.in_comms) acc[c] += m;
    if (ctx.self_loops > 0) acc[current] += 2 * ctx.self_loops;
    return {acc.begin(), acc.end()};
}

std::vector<std::pair<std::int64_t, std::int64_t>> community_mass(const Blockmodel& b,
                                                                  std::int64_t c) {
    std::map<std::int64_t, std::int64_t> acc;
    for (const auto& [t, m] : b.row(c)) acc[t] += m;
    for (const auto& [t, m] : b.col(c)) acc[t] += m;
    return {acc.begin(), acc.end()};
}

// Shared sampler. Draws a seed community from wt, then either a uniform
// community (probability C/(d_t + C)) or one proportional to
// M[t][s] + M[s][t] over s != current.
Proposal propose_from_mass(const Blockmodel& b,
                           std::span<const std::pair<std::int64_t, std::int64_t>> wt,
                           std::int64_t k, std::int64_t current, Rng& rng) {
    const std::int64_t live = b.community_count();
    if (live < 2) throw std::invalid_argument("propose: need at least two live communities");
    if (live != b.allocated_count())
        throw std::logic_error("propose: model must be renumbered (dense labels)");
    StateView view(b, nullptr);
    auto uniform_other = [&]() {
        std::int64_t idx = rng.below(live - 1);
        return idx >= current ? idx + 1 : idx;
    };
    Proposal p;
    if (k == 0) {
        p.candidate = uniform_other();
        p.forward_prob = 1.0 / static_cast<double>(live - 1);
        return p;
    }
    // Seed community t: weighted pick over incident mass.
    std::int64_t x = rng.below(k);
    std::int64_t t = -1;
    for (const auto& [comm, mass] : wt) {
        if (x < mass) {
            t = comm;
            break;
        }
        x -= mass;
    }
    if (t < 0) throw std::logic_error("propose: incident mass inconsistent with k");
    const std::int64_t d_t = b.degree_total(t);
    const double smooth = static_cast<double>(live) / (static_cast<double>(d_t) + static_cast<double>(live));
    if (rng.uniform() < smooth) {
        p.candidate = uniform_other();
    } else {
        const std::int64_t w_total = d_t - (b.get(t, current) + b.get(current, t));
        if (w_total <= 0) {
            p.candidate = uniform_other();
        } else {
            std::int64_t y = rng.below(w_total);
            std::map<std::int64_t, std::int64_t> merged;
            for (const auto& [s, m] : b.row(t)) merged[s] += m;
            for (const auto& [s, m] : b.col(t)) merged[s] += m;
            std::int64_t chosen = -1;
            for (const auto& [s, m] : merged) {
                if (s == current) continue;
                if (y < m) {
                    chosen = s;
                    break;
                }
                y -= m;
            }
            if (chosen < 0) throw std::logic_error("propose: kernel mass inconsistent");
            p.candidate = chosen;
        }
    }
    p.forward_prob = mechanism_probability(view, live, wt, k, current, p.candidate);
    return p;
}

}  // namespace

void SbpConfig::validate() const {
    if (merge_proposals_per_community < 1)
        throw std::invalid_argument("config: merge_proposals_per_community must be positive");
    if (max_mcmc_sweeps < 1) throw std::invalid_argument("config: max_mcmc_sweeps must be positive");
    if (!(convergence_threshold > 0.0))
        throw std::invalid_argument("config: convergence_threshold must be positive");
    if (beta <= 0.0) throw std::invalid_argument("config: beta must be positive");
    if (!(community_reduction_rate > 0.0) || community_reduction_rate >= 1.0)
        throw std::invalid_argument("config: community_reduction_rate must be in (0, 1)");
    if (high_degree_fraction < 0.0 || high_degree_fraction > 1.0)
        throw std::invalid_argument("config: high_degree_fraction must be in [0, 1]");
    if (combine_threshold < 1) throw std::invalid_argument("config: combine_threshold must be positive");
}

Proposal propose_move_target(const Graph& g, const Blockmodel& b, std::int64_t v, Rng& rng) {
    const VertexContext ctx = b.vertex_context(g, v);
    const std::int64_t current = b.assignment_of(v);
    const auto wt = vertex_mass(ctx, current);
    return propose_from_mass(b, wt, ctx.k_out + ctx.k_in, current, rng);
}

Proposal propose_merge_target(const Blockmodel& b, std::int64_t community, Rng& rng) {
    const auto wt = community_mass(b, community);
    return propose_from_mass(b, wt, b.degree_total(community), community, rng);
}

double move_backward_probability(const Blockmodel& b, const VertexContext& ctx,
                                 const BlockDelta& delta) {
    const std::int64_t live = b.community_count();
    if (live < 2) throw std::invalid_argument("backward: need at least two live communities");
    const std::int64_t k = ctx.k_out + ctx.k_in;
    if (k == 0) return 1.0 / static_cast<double>(live - 1);
    // After the move the vertex sits in delta.to; only its self-loop mass
    // changes seed community.
    const auto wt = vertex_mass(ctx, delta.to);
    StateView view(b, &delta);
    return mechanism_probability(view, live, wt, k, delta.to, delta.from);
}

AcceptOutcome accept_move(double delta_dl, double p_forward, double p_backward, double beta,
                          Rng& rng) {
    if (!(p_forward > 0.0) || p_forward > 1.0 || !(p_backward > 0.0) || p_backward > 1.0)
        throw std::invalid_argument("accept_move: probabilities must be in (0, 1]");
    AcceptOutcome out;
    if (!std::isfinite(delta_dl)) {
        out.numeric_warning = true;
        return out;
    }
    const double log_ratio = -beta * delta_dl + std::log(p_backward) - std::log(p_forward);
    const double u = rng.uniform();
    const double threshold = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
    out.accepted = u < threshold;
    return out;
}

std::vector<MergeProposal> collect_merge_proposals(const Blockmodel& b, const SbpConfig& cfg,
                                                   std::int64_t phase_index, int rank, int ranks) {
    if (ranks < 1 || rank < 0 || rank >= ranks)
        throw std::invalid_argument("collect_merge_proposals: bad rank");
    Rng rng = Rng::stream(cfg.seed, {kMergeStreamTag, static_cast<std::uint64_t>(phase_index),
                                     static_cast<std::uint64_t>(rank)});
    std::vector<MergeProposal> proposals;
    for (std::int64_t c = rank; c < b.allocated_count(); c += ranks) {
        std::map<std::int64_t, double> evaluated;
        MergeProposal best;
        for (std::int64_t i = 0; i < cfg.merge_proposals_per_community; ++i) {
            const Proposal p = propose_merge_target(b, c, rng);
            auto it = evaluated.find(p.candidate);
            double dl;
            if (it != evaluated.end()) {
                dl = it->second;
            } else {
                dl = b.delta_dl_merge(c, p.candidate);
                evaluated.emplace(p.candidate, dl);
            }
            if (best.target < 0 || dl < best.delta_dl) {
                best.community = c;
                best.target = p.candidate;
                best.delta_dl = dl;
            }
        }
        proposals.push_back(best);
    }
    return proposals;
}

std::int64_t apply_merge_proposals(Blockmodel& b, std::vector<MergeProposal> proposals,
                                   std::int64_t target_count) {
    std::sort(proposals.begin(), proposals.end(), [](const MergeProposal& a, const MergeProposal& x) {
        if (a.delta_dl != x.delta_dl) return a.delta_dl < x.delta_dl;
        if (a.community != x.community) return a.community < x.community;
        return a.target < x.target;
    });
    std::int64_t applied = 0;
    for (const auto& p : proposals) {
        if (b.community_count() <= target_count) break;
        const std::int64_t destination = b.resolve(p.target);
        if (destination == p.community) continue;  // chain collapsed onto itself
        b.apply_merge(p.community, destination);
        ++applied;
    }
    b.renumber();
    return applied;
}

void block_merge_phase(const Graph& g, Blockmodel& b, const SbpConfig& cfg,
                       std::int64_t target_count, std::int64_t phase_index) {
    (void)g;  // merges are evaluated and applied on the matrix alone
    if (target_count < 1 || target_count >= b.community_count())
        throw std::invalid_argument("block_merge_phase: target must be in [1, C)");
    auto proposals = collect_merge_proposals(b, cfg, phase_index, 0, 1);
    apply_merge_proposals(b, std::move(proposals), target_count);
}

namespace {

struct SweepDecision {
    std::int64_t vertex;
    std::int64_t destination;
};

// Propose-and-test for one vertex against the (possibly stale) state.
std::optional<SweepDecision> evaluate_vertex(const Graph& g, const Blockmodel& b,
                                             const SbpConfig& cfg, std::int64_t v, Rng& rng,
                                             std::int64_t* warnings) {
    const VertexContext ctx = b.vertex_context(g, v);
    const std::int64_t current = b.assignment_of(v);
    const auto wt = vertex_mass(ctx, current);
    const Proposal p = propose_from_mass(b, wt, ctx.k_out + ctx.k_in, current, rng);
    const BlockDelta delta = b.move_delta(ctx, p.candidate);
    const double delta_dl = b.delta_dl_move(delta);
    const double backward = move_backward_probability(b, ctx, delta);
    const AcceptOutcome out = accept_move(delta_dl, p.forward_prob, backward, cfg.beta, rng);
    if (out.numeric_warning) ++*warnings;
    if (!out.accepted) return std::nullopt;
    return SweepDecision{v, p.candidate};
}

}  // namespace

SweepResult hybrid_sweep(const Graph& g, Blockmodel& b, const SbpConfig& cfg,
                         std::span<const std::int64_t> vertices, int workers,
                         std::int64_t phase_index, std::int64_t sweep_index, int rank) {
    if (workers < 1) throw std::invalid_argument("hybrid_sweep: workers must be positive");
    SweepResult result;
    result.proposals = static_cast<std::int64_t>(vertices.size());
    if (b.community_count() < 2 || vertices.empty()) return result;

    // Degree ranking: the top fraction runs sequentially, the rest in
    // frozen-state batches.
    std::vector<std::int64_t> order(vertices.begin(), vertices.end());
    std::sort(order.begin(), order.end(), [&g](std::int64_t a, std::int64_t v) {
        const std::int64_t da = g.d_total[static_cast<size_t>(a)];
        const std::int64_t dv = g.d_total[static_cast<size_t>(v)];
        if (da != dv) return da > dv;
        return a < v;
    });
    const std::int64_t n = static_cast<std::int64_t>(order.size());
    const std::int64_t n_high = std::min<std::int64_t>(
        n, static_cast<std::int64_t>(std::ceil(cfg.high_degree_fraction * static_cast<double>(n))));
    std::vector<std::int64_t> low(order.begin() + n_high, order.end());
    std::sort(low.begin(), low.end());

    auto stream_for = [&](std::uint64_t worker_tag) {
        return Rng::stream(cfg.seed, {kSweepStreamTag, static_cast<std::uint64_t>(phase_index),
                                      static_cast<std::uint64_t>(sweep_index),
                                      static_cast<std::uint64_t>(rank), worker_tag});
    };

    auto sequential_pass = [&](std::span<const std::int64_t> span, Rng& rng) {
        for (const std::int64_t v : span) {
            const auto decision = evaluate_vertex(g, b, cfg, v, rng, &result.numeric_warnings);
            if (decision) {
                const VertexContext ctx = b.vertex_context(g, decision->vertex);
                b.apply_move(ctx, decision->destination);
                result.accepted.push_back({decision->vertex, decision->destination});
            }
        }
    };

    // Sequential high-degree pass: moves apply immediately.
    {
        Rng rng = stream_for(0);
        sequential_pass({order.data(), static_cast<size_t>(n_high)}, rng);
    }

    // One worker degenerates to the plain sequential sweep: every decision
    // sees every earlier move.
    if (workers == 1) {
        Rng rng = stream_for(1);
        sequential_pass(low, rng);
        return result;
    }

    // Low-degree batches: workers read the frozen pre-batch state; accepted
    // moves are applied serially in ascending vertex order at batch end.
    if (!low.empty()) {
        std::vector<Rng> worker_rngs;
        worker_rngs.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w) worker_rngs.push_back(stream_for(static_cast<std::uint64_t>(1 + w)));
        const std::int64_t total = static_cast<std::int64_t>(low.size());
        for (std::int64_t batch = 0; batch < kSweepBatches; ++batch) {
            const std::int64_t begin = total * batch / kSweepBatches;
            const std::int64_t end = total * (batch + 1) / kSweepBatches;
            if (begin == end) continue;
            const std::int64_t len = end - begin;
            std::vector<std::vector<SweepDecision>> accepted(static_cast<size_t>(workers));
            std::vector<std::int64_t> warnings(static_cast<size_t>(workers), 0);
            auto run_span = [&](int w) {
                const std::int64_t s = begin + len * w / workers;
                const std::int64_t e = begin + len * (w + 1) / workers;
                for (std::int64_t i = s; i < e; ++i) {
                    const auto decision = evaluate_vertex(g, b, cfg, low[static_cast<size_t>(i)],
                                                          worker_rngs[static_cast<size_t>(w)],
                                                          &warnings[static_cast<size_t>(w)]);
                    if (decision) accepted[static_cast<size_t>(w)].push_back(*decision);
                }
            };
            std::vector<std::thread> threads;
            threads.reserve(static_cast<size_t>(workers));
            for (int w = 0; w < workers; ++w) threads.emplace_back(run_span, w);
            for (auto& th : threads) th.join();
            std::vector<SweepDecision> batch_moves;
            for (auto& list : accepted)
                batch_moves.insert(batch_moves.end(), list.begin(), list.end());
            std::sort(batch_moves.begin(), batch_moves.end(),
                      [](const SweepDecision& a, const SweepDecision& x) { return a.vertex < x.vertex; });
            for (const auto& move : batch_moves) {
                // Fresh context: neighbors may have moved earlier this batch.
                const VertexContext ctx = b.vertex_context(g, move.vertex);
                if (b.assignment_of(move.vertex) == move.destination) continue;
                b.apply_move(ctx, move.destination);
                result.accepted.push_back({move.vertex, move.destination});
            }
            for (std::int64_t w : warnings) result.numeric_warnings += w;
        }
    }
    return result;
}

bool ConvergenceTracker::update(double improvement, double dl) {
    if (!seeded_) {
        smoothed_ = improvement;
        seeded_ = true;
    } else {
        smoothed_ = smoothed_ * (2.0 / 3.0) + improvement * (1.0 / 3.0);
    }
    return std::abs(smoothed_) < threshold_ * std::abs(dl);
}

McmcStats mcmc_phase(const Graph& g, Blockmodel& b, const SbpConfig& cfg, int workers,
                     double threshold, std::int64_t phase_index) {
    McmcStats stats;
    stats.final_dl = b.description_length();
    if (b.community_count() < 2) return stats;
    std::vector<std::int64_t> all(static_cast<size_t>(g.num_vertices));
    for (std::int64_t v = 0; v < g.num_vertices; ++v) all[static_cast<size_t>(v)] = v;
    double dl = stats.final_dl;
    ConvergenceTracker tracker(threshold);
    for (std::int64_t sweep = 0; sweep < cfg.max_mcmc_sweeps; ++sweep) {
        const SweepResult res = hybrid_sweep(g, b, cfg, all, workers, phase_index, sweep, 0);
        // Rebuild so every sweep starts from a canonical matrix.
        b = Blockmodel(g, b.resolved_assignment(), b.allocated_count());
        const double new_dl = b.description_length();
        stats.accepted += static_cast<std::int64_t>(res.accepted.size());
        ++stats.sweeps;
        const double improvement = dl - new_dl;
        dl = new_dl;
        if (tracker.update(improvement, dl)) break;
    }
    stats.final_dl = dl;
    return stats;
}

namespace {

struct Snapshot {
    Blockmodel model;
    double dl;
    std::int64_t communities;
};

}  // namespace

SbpResult run_golden_driver(const Graph& g, const SbpConfig& cfg, Blockmodel start,
                            PhaseHooks& hooks) {
    cfg.validate();
    SbpResult result;
    if (g.num_vertices == 0) return result;

    std::optional<Snapshot> high, mid, low;
    // The untouched start state seeds the high endpoint: it is an evaluated
    // point, and keeps the bracket sane if the first probe worsens.
    high = Snapshot{start, start.description_length(), start.community_count()};
    Blockmodel b = std::move(start);
    std::int64_t to_merge = static_cast<std::int64_t>(
        static_cast<double>(b.community_count()) * cfg.community_reduction_rate);
    to_merge = std::min(to_merge, b.community_count() - 1);

    auto record = [&result](const char* kind, std::int64_t phase, const Blockmodel& model,
                            std::int64_t accepted, double seconds) {
        result.trace.push_back({kind, phase, model.community_count(), model.description_length(),
                                accepted, seconds});
    };

    std::int64_t phase = 0;
    bool done = b.community_count() <= 1 || to_merge == 0;
    while (!done) {
        if (phase > 100000)
            throw std::runtime_error("golden driver: phase budget exhausted without convergence");
        const bool bracket_complete = low.has_value();
        if (to_merge > 0) {
            const auto t0 = std::chrono::steady_clock::now();
            hooks.merge(b, b.community_count() - to_merge, phase);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            record("merge", phase, b, 0, secs);
            ++phase;
        }
        {
            const auto t0 = std::chrono::steady_clock::now();
            const double threshold =
                cfg.convergence_threshold * (bracket_complete ? 1.0 : kPreBracketSlack);
            const McmcStats stats = hooks.mcmc(b, threshold, phase);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            record("mcmc", phase, b, stats.accepted, secs);
            ++phase;
        }
        Snapshot cur{b, b.description_length(), b.community_count()};

        // Bracket insertion; exact count collisions replace in place.
        if (mid && cur.communities == mid->communities) {
            if (cur.dl <= mid->dl) mid = std::move(cur);
        } else if (high && cur.communities == high->communities) {
            if (cur.dl <= high->dl) high = std::move(cur);
        } else if (low && cur.communities == low->communities) {
            if (cur.dl <= low->dl) low = std::move(cur);
        } else if (!mid || cur.dl <= mid->dl) {
            if (mid) {
                if (mid->communities > cur.communities) high = std::move(mid);
                else low = std::move(mid);
            }
            mid = std::move(cur);
        } else {
            if (mid->communities > cur.communities) low = std::move(cur);
            else high = std::move(cur);
        }

        if (!low) {
            // No lower endpoint yet: keep halving from the best point.
            to_merge = static_cast<std::int64_t>(
                static_cast<double>(mid->communities) * cfg.community_reduction_rate);
            to_merge = std::min(to_merge, mid->communities - 1);
            if (to_merge <= 0) {
                done = true;
            } else {
                b = mid->model;
            }
        } else if (high->communities - low->communities <= 2) {
            // No untested interior count remains.
            done = true;
        } else {
            const std::int64_t upper_gap = high->communities - mid->communities;
            const std::int64_t lower_gap = mid->communities - low->communities;
            if (upper_gap >= lower_gap) {
                std::int64_t next = mid->communities +
                                    static_cast<std::int64_t>(std::llround(kGoldenRatio * static_cast<double>(upper_gap)));
                next = std::clamp(next, mid->communities + 1, high->communities - 1);
                b = high->model;
                to_merge = high->communities - next;
            } else {
                std::int64_t next = low->communities +
                                    static_cast<std::int64_t>(std::llround(kGoldenRatio * static_cast<double>(lower_gap)));
                next = std::clamp(next, low->communities + 1, mid->communities - 1);
                b = mid->model;
                to_merge = mid->communities - next;
            }
        }
    }

    const Snapshot& final_snapshot = mid ? *mid : *high;
    result.partition = final_snapshot.model.resolved_assignment();
    result.community_count = final_snapshot.communities;
    result.dl = final_snapshot.dl;
    if (high) result.bracket.push_back({high->communities, high->dl});
    if (mid) result.bracket.push_back({mid->communities, mid->dl});
    if (low) result.bracket.push_back({low->communities, low->dl});
    return result;
}

SbpResult sbp(const Graph& g, const SbpConfig& cfg, int workers) {
    return sbp_from(g, cfg, {}, workers);
}

SbpResult sbp_from(const Graph& g, const SbpConfig& cfg, std::vector<std::int64_t> init_assignment,
                   int workers) {
    cfg.validate();
    Blockmodel start = [&]() {
        if (init_assignment.empty()) return Blockmodel::singleton_partition(g);
        // Compact the labels so every community is populated.
        std::map<std::int64_t, std::int64_t> relabel;
        for (std::int64_t label : init_assignment) relabel.emplace(label, 0);
        std::int64_t next = 0;
        for (auto& [label, dense] : relabel) dense = next++;
        for (auto& label : init_assignment) label = relabel.at(label);
        return Blockmodel(g, std::move(init_assignment), next);
    }();
    PhaseHooks hooks;
    hooks.merge = [&g, &cfg](Blockmodel& b, std::int64_t target, std::int64_t phase) {
        block_merge_phase(g, b, cfg, target, phase);
    };
    hooks.mcmc = [&g, &cfg, workers](Blockmodel& b, double threshold, std::int64_t phase) {
        return mcmc_phase(g, b, cfg, workers, threshold, phase);
    };
    return run_golden_driver(g, cfg, std::move(start), hooks);
}

}  // namespace sbp
