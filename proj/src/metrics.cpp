#include "sbp/metrics.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "sbp/blockmodel.hpp"

namespace sbp {

double nmi(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
    if (a.size() != b.size()) throw std::invalid_argument("nmi: partition lengths differ");
    if (a.empty()) throw std::invalid_argument("nmi: empty partitions");
    const double n = static_cast<double>(a.size());
    std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> joint;
    std::map<std::int64_t, std::int64_t> count_a, count_b;
    for (size_t i = 0; i < a.size(); ++i) {
        ++joint[{a[i], b[i]}];
        ++count_a[a[i]];
        ++count_b[b[i]];
    }
    double h_a = 0.0, h_b = 0.0;
    for (const auto& [label, c] : count_a) {
        const double p = static_cast<double>(c) / n;
        h_a -= p * std::log(p);
    }
    for (const auto& [label, c] : count_b) {
        const double p = static_cast<double>(c) / n;
        h_b -= p * std::log(p);
    }
    if (h_a == 0.0 && h_b == 0.0) return 1.0;
    if (h_a == 0.0 || h_b == 0.0) return 0.0;
    double mi = 0.0;
    for (const auto& [labels, c] : joint) {
        const double p = static_cast<double>(c) / n;
        const double pa = static_cast<double>(count_a[labels.first]) / n;
        const double pb = static_cast<double>(count_b[labels.second]) / n;
        mi += p * std::log(p / (pa * pb));
    }
    return 2.0 * mi / (h_a + h_b);
}

double normalized_dl(double dl, std::int64_t num_vertices, std::int64_t num_edges) {
    if (num_edges <= 0) throw std::invalid_argument("normalized_dl: E must be positive");
    return dl / null_description_length(num_vertices, num_edges);
}

}  // namespace sbp
