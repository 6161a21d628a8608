#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sbp/graph.hpp"

namespace sbp {

struct GeneratorParams {
    std::int64_t num_vertices = 0;
    std::int64_t num_communities = 0;
    // Degree-sequence knobs. The truncate flags choose conventional bounds
    // (min 10, max 100); otherwise the bounds are 1 and max(2, V/20).
    bool truncate_min_degree = false;
    bool truncate_max_degree = false;
    bool duplicate_degree_sequence = false;
    std::int64_t d_min = 0;  // 0 = derive from flags
    std::int64_t d_max = 0;  // 0 = derive from flags
    // P(d) ∝ d^powerlaw_exponent on [d_min, d_max].
    double powerlaw_exponent = -2.5;
    // Odds of a stub staying inside its own community (2.0 → 2/3 intra).
    double intra_ratio = 2.0;
    // Community size concentration; larger = more even sizes.
    double dirichlet_alpha = 2.0;
    std::uint64_t seed = 0;
    // Presets calibrate powerlaw_exponent so generated E lands near this.
    std::optional<std::int64_t> target_edges;
    std::string preset_name;  // empty when hand-built

    void validate() const;  // throws std::invalid_argument
    // Degree bounds after resolving flags/defaults.
    std::int64_t resolved_d_min() const;
    std::int64_t resolved_d_max() const;
};

struct GeneratedGraph {
    Graph graph;
    std::vector<std::int64_t> truth;  // planted community per vertex
    GeneratorParams params;           // with the exponent actually used
};

// Deterministic per (params, seed). Every community receives at least one
// vertex; drawn degrees honor [d_min, d_max], while realized in-degrees track
// the drawn sequence only in aggregate.
GeneratedGraph generate(const GeneratorParams& params);

// Named parameter rows. Letter presets (e.g. "TTT33", "FFF150") follow the
// truncate-min/truncate-max/duplicate flag encoding with recorded V, C, and
// edge targets; "tiny-" prefixed variants scale V and the edge target by 10.
// "tiny-easy" is a small low-overlap benchmark row. Unknown names throw.
GeneratorParams preset(const std::string& name);
std::vector<std::string> preset_names();

// key=value manifest describing one generated dataset (used alongside the
// emitted edge list and truth files).
void write_manifest(const GeneratorParams& params, const Graph& g, std::ostream& out);

// Parses key=value lines naming GeneratorParams fields.
void apply_params_file(GeneratorParams& params, std::istream& in);

// Solves for the exponent whose discrete power-law mean over [d_min, d_max]
// matches `target_mean`.
double calibrate_powerlaw_exponent(std::int64_t d_min, std::int64_t d_max, double target_mean);

}  // namespace sbp
