#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "sbp/blockmodel.hpp"

using namespace sbp;

TEST_CASE("entropy_h fixed points") {
    CHECK(entropy_h(0.0) == 0.0);
    // h(1) = 2·ln 2
    CHECK(entropy_h(1.0) == doctest::Approx(1.3862943611198906).epsilon(1e-15));
    CHECK_THROWS_AS(entropy_h(-0.5), std::invalid_argument);
    for (double x : {0.25, 1.0, 3.5, 100.0})
        CHECK(entropy_h(x) == doctest::Approx(oracle::entropy_h_ref(x)).epsilon(1e-14));
}

TEST_CASE("null description length formula") {
    CHECK(null_description_length(10, 0) == 0.0);
    const double e = 64.0;
    CHECK(null_description_length(50, 64) ==
          doctest::Approx(e * oracle::entropy_h_ref(1.0 / e) + e * std::log(e)).epsilon(1e-14));
    CHECK_THROWS_AS(null_description_length(5, -1), std::invalid_argument);
}

TEST_CASE("description length matches the dense recomputation") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        Rng rng(seed);
        const std::int64_t v = 20 + rng.below(120);
        Graph g = testing_helpers::random_graph(rng, v, 4 * v);
        const std::int64_t c = 2 + rng.below(9);
        auto assignment = testing_helpers::random_assignment(rng, v, c);
        Blockmodel b(g, assignment, c);
        const double ref = oracle::dl_ref(g, assignment, c, c);
        CHECK(b.description_length() == doctest::Approx(ref).epsilon(1e-10));
    }
}

TEST_CASE("empty graph has zero description length") {
    Graph g = build_graph(3, {});
    Blockmodel b(g, {0, 1, 0}, 2);
    CHECK(b.description_length() == 0.0);
}

TEST_CASE("move and merge deltas match full recomputation") {
    Rng rng(42);
    const std::int64_t v = 80;
    Graph g = testing_helpers::random_graph(rng, v, 320);
    const std::int64_t c = 6;
    auto assignment = testing_helpers::random_assignment(rng, v, c);
    Blockmodel b(g, assignment, c);
    const double base = oracle::dl_ref(g, assignment, c, c);

    for (int trial = 0; trial < 200; ++trial) {
        const std::int64_t vertex = rng.below(v);
        const std::int64_t cur = b.assignment_of(vertex);
        std::int64_t to = rng.below(c - 1);
        if (to >= cur) ++to;
        VertexContext ctx = b.vertex_context(g, vertex);
        auto moved = assignment;
        moved[static_cast<size_t>(vertex)] = to;
        const double ref = oracle::dl_ref(g, moved, c, c) - base;
        CHECK(b.delta_dl_move(ctx, to) == doctest::Approx(ref).epsilon(1e-8));
    }
    for (std::int64_t from = 0; from < c; ++from) {
        for (std::int64_t to = 0; to < c; ++to) {
            if (from == to) continue;
            auto merged = assignment;
            for (auto& a : merged)
                if (a == from) a = to;
            const double ref = oracle::dl_ref(g, merged, c, c - 1) - base;
            CHECK(b.delta_dl_merge(from, to) == doctest::Approx(ref).epsilon(1e-8));
        }
    }
}

TEST_CASE("merging a degree-zero community only moves the model term") {
    Graph g = build_graph(6, {{0, 1, 2}, {1, 2, 1}, {2, 0, 1}});
    // community 2 holds only isolated vertices
    Blockmodel b(g, {0, 0, 1, 1, 2, 2}, 3);
    const double e = static_cast<double>(g.num_edges);
    const double expected = e * (entropy_h(4.0 / e) - entropy_h(9.0 / e)) +
                            6.0 * (std::log(2.0) - std::log(3.0));
    CHECK(b.delta_dl_merge(2, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("vertex context separates self-loops") {
    Graph g = build_graph(4, {{0, 0, 2}, {0, 1, 1}, {2, 0, 3}, {1, 2, 1}});
    Blockmodel b(g, {0, 1, 1, 0}, 2);
    VertexContext ctx = b.vertex_context(g, 0);
    CHECK(ctx.vertex == 0);
    CHECK(ctx.self_loops == 2);
    REQUIRE(ctx.out_comms.size() == 1);
    CHECK(ctx.out_comms[0] == std::pair<std::int64_t, std::int64_t>{1, 1});
    REQUIRE(ctx.in_comms.size() == 1);
    CHECK(ctx.in_comms[0] == std::pair<std::int64_t, std::int64_t>{1, 3});
    CHECK(ctx.k_out == 3);
    CHECK(ctx.k_in == 5);
}

TEST_CASE("apply_move keeps the matrix coherent with a rebuild") {
    Rng rng(5);
    const std::int64_t v = 60;
    Graph g = testing_helpers::random_graph(rng, v, 240);
    const std::int64_t c = 5;
    auto assignment = testing_helpers::random_assignment(rng, v, c);
    Blockmodel b(g, assignment, c);
    for (int trial = 0; trial < 300; ++trial) {
        const std::int64_t vertex = rng.below(v);
        const std::int64_t cur = b.assignment_of(vertex);
        std::int64_t to = rng.below(c - 1);
        if (to >= cur) ++to;
        b.apply_move(b.vertex_context(g, vertex), to);
    }
    b.check_invariants(g);
    Blockmodel fresh(g, b.resolved_assignment(), c);
    CHECK(b.checksum() == fresh.checksum());
    CHECK(b.description_length() ==
          doctest::Approx(fresh.description_length()).epsilon(1e-9));
}

TEST_CASE("apply_merge forwards labels and renumber compacts them") {
    Rng rng(9);
    Graph g = testing_helpers::random_graph(rng, 40, 160);
    auto assignment = testing_helpers::random_assignment(rng, 40, 8);
    Blockmodel b(g, assignment, 8);
    b.apply_merge(3, 5);
    b.apply_merge(5, 0);  // chain: 3 -> 5 -> 0
    CHECK(b.community_count() == 6);
    CHECK(b.resolve(3) == 0);
    CHECK_FALSE(b.is_live(3));
    b.renumber();
    CHECK(b.allocated_count() == 6);
    b.check_invariants(g);
    // labels stay dense and relative order of survivors is preserved
    for (std::int64_t v = 0; v < 40; ++v) CHECK(b.assignment_of(v) < 6);
    Blockmodel fresh(g, b.resolved_assignment(), 6);
    CHECK(b.checksum() == fresh.checksum());
}

TEST_CASE("long random walk of moves and merges stays exact") {
    Rng rng(1234);
    const std::int64_t v = 120;
    Graph g = testing_helpers::random_graph(rng, v, 480);
    std::int64_t c = 12;
    auto assignment = testing_helpers::random_assignment(rng, v, c);
    Blockmodel b(g, assignment, c);
    double dl = b.description_length();
    for (int op = 0; op < 1000; ++op) {
        if (b.community_count() > 3 && rng.below(10) == 0) {
            const std::int64_t from = b.resolve(rng.below(b.allocated_count()));
            std::int64_t to = from;
            while (to == from) to = b.resolve(rng.below(b.allocated_count()));
            dl += b.delta_dl_merge(from, to);
            b.apply_merge(from, to);
            b.renumber();
        } else {
            const std::int64_t vertex = rng.below(v);
            const std::int64_t cur = b.assignment_of(vertex);
            std::int64_t to = rng.below(b.allocated_count() - 1);
            if (to >= cur) ++to;
            VertexContext ctx = b.vertex_context(g, vertex);
            dl += b.delta_dl_move(ctx, to);
            b.apply_move(ctx, to);
        }
    }
    b.check_invariants(g);
    // accumulated deltas track the true description length
    CHECK(dl == doctest::Approx(b.description_length()).epsilon(1e-8));
}

TEST_CASE("cell_after previews the post-delta matrix") {
    Rng rng(21);
    Graph g = testing_helpers::random_graph(rng, 30, 150);
    auto assignment = testing_helpers::random_assignment(rng, 30, 4);
    Blockmodel b(g, assignment, 4);
    const std::int64_t vertex = 17;
    const std::int64_t cur = b.assignment_of(vertex);
    const std::int64_t to = (cur + 1) % 4;
    VertexContext ctx = b.vertex_context(g, vertex);
    BlockDelta d = b.move_delta(ctx, to);
    Blockmodel after = b;
    after.apply_move(ctx, to);
    for (std::int64_t i = 0; i < 4; ++i)
        for (std::int64_t j = 0; j < 4; ++j)
            CHECK(b.cell_after(d, i, j) == after.get(i, j));
}

TEST_CASE("singleton partition starts with one community per vertex") {
    Rng rng(2);
    Graph g = testing_helpers::random_graph(rng, 25, 100);
    Blockmodel b = Blockmodel::singleton_partition(g);
    CHECK(b.community_count() == 25);
    b.check_invariants(g);
    for (std::int64_t v = 0; v < 25; ++v) CHECK(b.assignment_of(v) == v);
}

TEST_CASE("checksum is order-independent but content-sensitive") {
    Rng rng(31);
    Graph g = testing_helpers::random_graph(rng, 50, 200);
    auto assignment = testing_helpers::random_assignment(rng, 50, 5);
    Blockmodel a(g, assignment, 5);
    Blockmodel same(g, assignment, 5);
    CHECK(a.checksum() == same.checksum());
    auto other = assignment;
    other[49] = (other[49] + 1) % 5;
    Blockmodel changed(g, other, 5);
    CHECK(a.checksum() != changed.checksum());
}
