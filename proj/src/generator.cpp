#include "sbp/generator.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "sbp/random.hpp"

namespace sbp {

namespace {

constexpr std::uint64_t kGeneratorTag = 0x6E47;

struct PresetRow {
    bool t_min, t_max, dup;
    std::int64_t communities, vertices, edges;
};

// Ablation rows (flag triple + recorded sizes) and the large scaling rows.
const std::map<std::string, PresetRow>& preset_table() {
    static const std::map<std::string, PresetRow> table = {
        {"TTT33", {true, true, true, 33, 22599, 899283}},
        {"TTT150", {true, true, true, 150, 22599, 826861}},
        {"TTF33", {true, true, false, 33, 22599, 452232}},
        {"TTF150", {true, true, false, 150, 22599, 421317}},
        {"TFT33", {true, false, true, 33, 22599, 1059970}},
        {"TFT150", {true, false, true, 150, 22599, 912644}},
        {"TFF33", {true, false, false, 33, 22599, 540410}},
        {"TFF150", {true, false, false, 150, 22598, 471071}},
        {"FTT33", {false, true, true, 33, 21896, 79683}},
        {"FTT150", {false, true, true, 150, 22036, 78226}},
        {"FTF33", {false, true, false, 33, 19220, 39719}},
        {"FTF150", {false, true, false, 150, 19221, 38408}},
        {"FFT33", {false, false, true, 33, 22157, 83939}},
        {"FFT150", {false, false, true, 150, 21958, 81298}},
        {"FFF33", {false, false, false, 33, 19516, 41378}},
        {"FFF150", {false, false, false, 150, 19358, 40835}},
        {"1M", {true, true, true, 1075, 1051218, 11056834}},
        {"2M", {true, true, true, 1521, 2103554, 23987218}},
        {"4M", {true, true, true, 2151, 4221264, 53175026}},
    };
    return table;
}

double discrete_powerlaw_mean(std::int64_t lo, std::int64_t hi, double exponent) {
    double total = 0.0, weighted = 0.0;
    for (std::int64_t d = lo; d <= hi; ++d) {
        const double w = std::pow(static_cast<double>(d), exponent);
        total += w;
        weighted += static_cast<double>(d) * w;
    }
    return weighted / total;
}

}  // namespace

double calibrate_powerlaw_exponent(std::int64_t d_min, std::int64_t d_max, double target_mean) {
    if (d_min < 1 || d_max < d_min)
        throw std::invalid_argument("calibrate_powerlaw_exponent: bad degree bounds");
    if (target_mean <= static_cast<double>(d_min) || target_mean >= static_cast<double>(d_max))
        throw std::invalid_argument("calibrate_powerlaw_exponent: target mean outside bounds");
    double lo = -10.0, hi = 10.0;  // mean is increasing in the exponent
    for (int iter = 0; iter < 100; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (discrete_powerlaw_mean(d_min, d_max, mid) < target_mean) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

void GeneratorParams::validate() const {
    if (num_vertices < 1) throw std::invalid_argument("generator: num_vertices must be positive");
    if (num_communities < 1 || num_communities > num_vertices)
        throw std::invalid_argument("generator: num_communities must be in [1, V]");
    if (intra_ratio < 0.0) throw std::invalid_argument("generator: negative intra_ratio");
    if (dirichlet_alpha <= 0.0) throw std::invalid_argument("generator: dirichlet_alpha must be positive");
    if (resolved_d_min() < 1 || resolved_d_max() < resolved_d_min())
        throw std::invalid_argument("generator: bad degree bounds");
}

std::int64_t GeneratorParams::resolved_d_min() const {
    if (d_min > 0) return d_min;
    return truncate_min_degree ? 10 : 1;
}

std::int64_t GeneratorParams::resolved_d_max() const {
    if (d_max > 0) return d_max;
    if (truncate_max_degree) return 100;
    return std::max<std::int64_t>(2, num_vertices / 20);
}

GeneratorParams preset(const std::string& name) {
    GeneratorParams p;
    p.preset_name = name;
    if (name == "tiny-easy") {
        // Small low-overlap benchmark: tight community sizes, strong intra
        // preference, truncated degrees.
        p.num_vertices = 2000;
        p.num_communities = 11;
        p.truncate_min_degree = p.truncate_max_degree = p.duplicate_degree_sequence = true;
        p.intra_ratio = 5.0;
        p.dirichlet_alpha = 10.0;
        p.target_edges = 47391;
    } else {
        std::string key = name;
        bool tiny = false;
        if (key.rfind("tiny-", 0) == 0) {
            tiny = true;
            key = key.substr(5);
        }
        auto it = preset_table().find(key);
        if (it == preset_table().end()) throw std::invalid_argument("unknown preset: " + name);
        const PresetRow& row = it->second;
        p.truncate_min_degree = row.t_min;
        p.truncate_max_degree = row.t_max;
        p.duplicate_degree_sequence = row.dup;
        p.num_communities = row.communities;
        p.num_vertices = tiny ? (row.vertices + 5) / 10 : row.vertices;
        p.target_edges = tiny ? (row.edges + 5) / 10 : row.edges;
    }
    // Pin the exponent so the expected edge count lands on the target: the
    // drawn value is the per-side degree when duplicated (E = Σd) and the
    // total degree otherwise (E ≈ Σd/2).
    const double mean_drawn = p.duplicate_degree_sequence
                                  ? static_cast<double>(*p.target_edges) / static_cast<double>(p.num_vertices)
                                  : 2.0 * static_cast<double>(*p.target_edges) / static_cast<double>(p.num_vertices);
    p.powerlaw_exponent =
        calibrate_powerlaw_exponent(p.resolved_d_min(), p.resolved_d_max(), mean_drawn);
    p.validate();
    return p;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [key, row] : preset_table()) {
        names.push_back(key);
        if (row.vertices >= 1000000) continue;  // no tiny variants of scaling rows
        names.push_back("tiny-" + key);
    }
    names.push_back("tiny-easy");
    std::sort(names.begin(), names.end());
    return names;
}

GeneratedGraph generate(const GeneratorParams& params) {
    params.validate();
    GeneratorParams used = params;
    const std::int64_t V = params.num_vertices;
    const std::int64_t C = params.num_communities;
    const std::int64_t d_lo = params.resolved_d_min();
    const std::int64_t d_hi = params.resolved_d_max();
    used.d_min = d_lo;
    used.d_max = d_hi;
    Rng rng = Rng::stream(params.seed, {kGeneratorTag});

    // Community sizes: Dirichlet(alpha) proportions scaled to V, each >= 1,
    // drift fixed by largest remainder.
    std::vector<double> gammas(static_cast<size_t>(C));
    std::gamma_distribution<double> gamma(params.dirichlet_alpha, 1.0);
    double gamma_total = 0.0;
    for (auto& gv : gammas) {
        gv = gamma(rng.engine());
        gamma_total += gv;
    }
    std::vector<std::int64_t> sizes(static_cast<size_t>(C));
    std::vector<std::pair<double, std::int64_t>> remainders;
    std::int64_t assigned = 0;
    for (std::int64_t c = 0; c < C; ++c) {
        const double raw = gammas[static_cast<size_t>(c)] / gamma_total * static_cast<double>(V);
        std::int64_t base = std::max<std::int64_t>(1, static_cast<std::int64_t>(raw));
        sizes[static_cast<size_t>(c)] = base;
        assigned += base;
        remainders.push_back({raw - static_cast<double>(base), c});
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    size_t cursor = 0;
    while (assigned < V) {
        sizes[static_cast<size_t>(remainders[cursor % remainders.size()].second)] += 1;
        ++cursor;
        ++assigned;
    }
    cursor = 0;
    while (assigned > V) {
        auto& s = sizes[static_cast<size_t>(remainders[remainders.size() - 1 - cursor % remainders.size()].second)];
        if (s > 1) {
            --s;
            --assigned;
        }
        ++cursor;
    }

    // Vertices take contiguous community blocks.
    std::vector<std::int64_t> truth(static_cast<size_t>(V));
    std::vector<std::int64_t> start(static_cast<size_t>(C) + 1, 0);
    {
        std::int64_t v = 0;
        for (std::int64_t c = 0; c < C; ++c) {
            start[static_cast<size_t>(c)] = v;
            for (std::int64_t i = 0; i < sizes[static_cast<size_t>(c)]; ++i)
                truth[static_cast<size_t>(v++)] = c;
        }
        start[static_cast<size_t>(C)] = v;
    }

    // Degree sequence: discrete power law on [d_lo, d_hi].
    std::vector<double> cumulative(static_cast<size_t>(d_hi - d_lo + 1));
    {
        double acc = 0.0;
        for (std::int64_t d = d_lo; d <= d_hi; ++d) {
            acc += std::pow(static_cast<double>(d), params.powerlaw_exponent);
            cumulative[static_cast<size_t>(d - d_lo)] = acc;
        }
    }
    const double weight_total = cumulative.back();
    auto draw_degree = [&]() {
        const double u = rng.uniform() * weight_total;
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
        return d_lo + static_cast<std::int64_t>(it - cumulative.begin());
    };
    std::vector<std::int64_t> out_degree(static_cast<size_t>(V)), in_degree(static_cast<size_t>(V));
    for (std::int64_t v = 0; v < V; ++v) {
        const std::int64_t drawn = draw_degree();
        if (params.duplicate_degree_sequence) {
            out_degree[static_cast<size_t>(v)] = drawn;
            in_degree[static_cast<size_t>(v)] = drawn;
        } else {
            // Split the drawn total: each unit lands on the out side with
            // probability 1/2.
            std::int64_t out = 0;
            for (std::int64_t i = 0; i < drawn; ++i) out += static_cast<std::int64_t>(rng.next() & 1);
            out_degree[static_cast<size_t>(v)] = out;
            in_degree[static_cast<size_t>(v)] = drawn - out;
        }
    }

    // In-stub pools per community: drawing with swap-remove is proportional
    // to remaining in-degree; the frozen copy backs the with-replacement
    // fallback once a pool runs dry.
    std::vector<std::vector<std::int64_t>> pool(static_cast<size_t>(C));
    for (std::int64_t v = 0; v < V; ++v) {
        auto& p = pool[static_cast<size_t>(truth[static_cast<size_t>(v)])];
        for (std::int64_t i = 0; i < in_degree[static_cast<size_t>(v)]; ++i) p.push_back(v);
    }
    const std::vector<std::vector<std::int64_t>> frozen = pool;

    const double intra_prob = params.intra_ratio / (params.intra_ratio + 1.0);
    std::vector<std::pair<std::int64_t, std::int64_t>> edge_pairs;
    edge_pairs.reserve(static_cast<size_t>(std::accumulate(
        out_degree.begin(), out_degree.end(), static_cast<std::int64_t>(0))));
    auto pick_target = [&](std::int64_t community) {
        auto& p = pool[static_cast<size_t>(community)];
        if (!p.empty()) {
            const std::int64_t idx = rng.below(static_cast<std::int64_t>(p.size()));
            const std::int64_t target = p[static_cast<size_t>(idx)];
            p[static_cast<size_t>(idx)] = p.back();
            p.pop_back();
            return target;
        }
        const auto& f = frozen[static_cast<size_t>(community)];
        if (!f.empty()) return f[static_cast<size_t>(rng.below(static_cast<std::int64_t>(f.size())))];
        // Community drew no in-stubs at all: fall back to any member.
        const std::int64_t span = start[static_cast<size_t>(community) + 1] -
                                  start[static_cast<size_t>(community)];
        return start[static_cast<size_t>(community)] + rng.below(span);
    };
    for (std::int64_t v = 0; v < V; ++v) {
        const std::int64_t own = truth[static_cast<size_t>(v)];
        for (std::int64_t s = 0; s < out_degree[static_cast<size_t>(v)]; ++s) {
            std::int64_t community = own;
            if (C > 1 && rng.uniform() >= intra_prob) {
                // Choosing a different community proportionally to size is a
                // uniform draw over the vertices outside `own`.
                std::int64_t u = rng.below(V - sizes[static_cast<size_t>(own)]);
                if (u >= start[static_cast<size_t>(own)]) u += sizes[static_cast<size_t>(own)];
                community = truth[static_cast<size_t>(u)];
            }
            edge_pairs.emplace_back(v, pick_target(community));
        }
    }

    std::sort(edge_pairs.begin(), edge_pairs.end());
    std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> edges;
    for (size_t i = 0; i < edge_pairs.size();) {
        size_t j = i;
        while (j < edge_pairs.size() && edge_pairs[j] == edge_pairs[i]) ++j;
        edges.emplace_back(edge_pairs[i].first, edge_pairs[i].second,
                           static_cast<std::int64_t>(j - i));
        i = j;
    }

    GeneratedGraph result;
    result.graph = build_graph(V, edges);
    result.truth = std::move(truth);
    result.params = used;
    return result;
}

void write_manifest(const GeneratorParams& params, const Graph& g, std::ostream& out) {
    out << "preset=" << (params.preset_name.empty() ? "none" : params.preset_name) << '\n';
    out << "num_vertices=" << params.num_vertices << '\n';
    out << "num_communities=" << params.num_communities << '\n';
    out << "truncate_min_degree=" << (params.truncate_min_degree ? 1 : 0) << '\n';
    out << "truncate_max_degree=" << (params.truncate_max_degree ? 1 : 0) << '\n';
    out << "duplicate_degree_sequence=" << (params.duplicate_degree_sequence ? 1 : 0) << '\n';
    out << "d_min=" << params.resolved_d_min() << '\n';
    out << "d_max=" << params.resolved_d_max() << '\n';
    out << "powerlaw_exponent=" << params.powerlaw_exponent << '\n';
    out << "intra_ratio=" << params.intra_ratio << '\n';
    out << "dirichlet_alpha=" << params.dirichlet_alpha << '\n';
    out << "seed=" << params.seed << '\n';
    if (params.target_edges) out << "target_edges=" << *params.target_edges << '\n';
    out << "generated_edges=" << g.num_edges << '\n';
}

void apply_params_file(GeneratorParams& params, std::istream& in) {
    std::string line;
    std::int64_t line_no = 0;
    auto parse_bool = [](const std::string& value, std::int64_t line_no) {
        if (value == "1" || value == "true") return true;
        if (value == "0" || value == "false") return false;
        throw std::runtime_error("params line " + std::to_string(line_no) + ": bad boolean");
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("params line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        try {
            if (key == "num_vertices") params.num_vertices = std::stoll(value);
            else if (key == "num_communities") params.num_communities = std::stoll(value);
            else if (key == "truncate_min_degree") params.truncate_min_degree = parse_bool(value, line_no);
            else if (key == "truncate_max_degree") params.truncate_max_degree = parse_bool(value, line_no);
            else if (key == "duplicate_degree_sequence")
                params.duplicate_degree_sequence = parse_bool(value, line_no);
            else if (key == "d_min") params.d_min = std::stoll(value);
            else if (key == "d_max") params.d_max = std::stoll(value);
            else if (key == "powerlaw_exponent") params.powerlaw_exponent = std::stod(value);
            else if (key == "intra_ratio") params.intra_ratio = std::stod(value);
            else if (key == "dirichlet_alpha") params.dirichlet_alpha = std::stod(value);
            else if (key == "seed") params.seed = std::stoull(value);
            else if (key == "target_edges") params.target_edges = std::stoll(value);
            else if (key == "preset" || key == "generated_edges") { /* manifest echo */ }
            else
                throw std::runtime_error("params line " + std::to_string(line_no) +
                                         ": unknown key " + key);
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("params line " + std::to_string(line_no) + ": bad value");
        }
    }
}

}  // namespace sbp
