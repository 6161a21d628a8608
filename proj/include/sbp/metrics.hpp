#pragma once

#include <cstdint>
#include <span>

namespace sbp {

// Normalized mutual information 2·I(A;B)/(H(A)+H(B)) with natural logs.
// Defined as 1 when both entropies are zero and 0 when exactly one is.
double nmi(std::span<const std::int64_t> a, std::span<const std::int64_t> b);

// dl divided by the one-community description length for (V, E). E must be
// positive.
double normalized_dl(double dl, std::int64_t num_vertices, std::int64_t num_edges);

}  // namespace sbp
