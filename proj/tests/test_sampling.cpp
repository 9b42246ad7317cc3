#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "kge/sampling.hpp"
#include "support/oracles.hpp"

using namespace kge;

namespace {

EdgeSet dbg_edges(std::vector<Edge> edges) {
    EdgeSet set;
    set.kind = EdgeKind::Dbg;
    set.edges = std::move(edges);
    return set;
}

EdgeSet kf_edges(std::vector<Edge> edges) {
    EdgeSet set;
    set.kind = EdgeKind::Kf;
    set.sub_k = 2;
    set.edges = std::move(edges);
    return set;
}

}  // namespace

TEST_CASE("walks follow a deterministic chain and truncate at sinks") {
    auto dbg = dbg_edges({{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
    WalkConfig cfg;
    cfg.walk_length = 4;
    cfg.walks_per_node = 1;
    auto walks = biased_random_walks(dbg, 4, cfg, 42);
    REQUIRE(walks.size() == 4);
    CHECK(walks[0] == std::vector<int>{0, 1, 2, 3});
    CHECK(walks[1] == std::vector<int>{1, 2, 3});
    CHECK(walks[2] == std::vector<int>{2, 3});
    CHECK(walks[3] == std::vector<int>{3});  // sink
}

TEST_CASE("walk config validation") {
    auto dbg = dbg_edges({{0, 1, 1.0}});
    WalkConfig cfg;
    cfg.p = 0;
    CHECK_THROWS_AS(biased_random_walks(dbg, 2, cfg, 1), validation_error);
    cfg = WalkConfig{};
    cfg.walk_length = 1;
    CHECK_THROWS_AS(biased_random_walks(dbg, 2, cfg, 1), validation_error);
    cfg = WalkConfig{};
    CHECK_THROWS_AS(biased_random_walks(dbg_edges(std::vector<Edge>{}), 2, cfg, 1),
                    validation_error);
}

TEST_CASE("first walk step follows edge weights") {
    // out of node 0: weight 2/3 to node 1, 1/3 to node 2
    auto dbg = dbg_edges({{0, 1, 2.0 / 3.0}, {0, 2, 1.0 / 3.0}});
    WalkConfig cfg;
    cfg.walk_length = 2;
    cfg.walks_per_node = 10000;
    auto walks = biased_random_walks(dbg, 3, cfg, 7);
    std::vector<int64_t> counts(2, 0);
    for (const auto& w : walks) {
        if (w.front() != 0) continue;
        REQUIRE(w.size() == 2);
        ++counts[w[1] == 1 ? 0 : 1];
    }
    CHECK(counts[0] + counts[1] == 10000);
    CHECK(oracle::chi_square_p_value(counts, {2.0 / 3.0, 1.0 / 3.0}) > 0.01);
}

TEST_CASE("return bias p and in-out bias q steer the second step") {
    // 0→1 then from 1: back to 0 (distance-0) or on to 2 (distance-2, no edge 0→2)
    auto dbg = dbg_edges({{0, 1, 1.0}, {1, 0, 0.5}, {1, 2, 0.5}, {2, 1, 1.0}});
    auto second_step_share = [&](double p, double q, int target) {
        WalkConfig cfg;
        cfg.p = p;
        cfg.q = q;
        cfg.walk_length = 3;
        cfg.walks_per_node = 2000;
        auto walks = biased_random_walks(dbg, 3, cfg, 11);
        int hits = 0, total = 0;
        for (const auto& w : walks) {
            if (w.front() != 0) continue;
            REQUIRE(w.size() == 3);
            ++total;
            if (w[2] == target) ++hits;
        }
        REQUIRE(total == 2000);
        return static_cast<double>(hits) / total;
    };
    CHECK(second_step_share(1e9, 1.0, 2) > 0.99);   // huge p stops backtracking
    CHECK(second_step_share(1.0, 1e9, 0) > 0.99);   // huge q keeps the walk local
    // α = 1 branch: give the previous node an edge to the far candidate
    auto dbg2 = dbg_edges({{0, 1, 0.5}, {0, 2, 0.5}, {1, 0, 0.5}, {1, 2, 0.5}, {2, 1, 1.0}});
    WalkConfig cfg;
    cfg.p = 1e9;
    cfg.q = 1e9;
    cfg.walk_length = 3;
    cfg.walks_per_node = 500;
    auto walks = biased_random_walks(dbg2, 3, cfg, 13);
    for (const auto& w : walks)
        if (w.front() == 0 && w[1] == 1) CHECK(w[2] == 2);  // only x=2 keeps α = 1
}

TEST_CASE("window pairs with m=1 are exactly the adjacent pairs") {
    auto set = window_pairs({0, 1, 2, 3}, 1, 5);
    REQUIRE(set.kind == PairKind::PositiveContext);
    std::vector<std::pair<int, int>> want = {{0, 1}, {1, 0}, {1, 2}, {2, 1}, {2, 3}, {3, 2}};
    CHECK(set.pairs == want);
}

TEST_CASE("window radius is uniform on {1..m}") {
    // interior position of a distinct-id walk contributes 2δ pairs
    std::vector<int> walk(12);
    for (int i = 0; i < 12; ++i) walk[static_cast<size_t>(i)] = i;
    std::vector<int64_t> counts(3, 0);
    for (uint64_t seed = 0; seed < 3000; ++seed) {
        auto set = window_pairs(walk, 3, seed);
        int c = 0;
        for (const auto& [a, b] : set.pairs)
            if (a == 5) ++c;
        REQUIRE(c % 2 == 0);
        REQUIRE(c >= 2);
        REQUIRE(c <= 6);
        ++counts[static_cast<size_t>(c / 2 - 1)];
    }
    CHECK(oracle::chi_square_p_value(counts, {1.0 / 3, 1.0 / 3, 1.0 / 3}) > 0.01);
}

TEST_CASE("per-walk pair generation is deterministic") {
    std::vector<std::vector<int>> walks = {{0, 1, 2, 3, 4}, {4, 3, 2, 1, 0}};
    auto a = walk_window_pairs(walks, 3, 9);
    auto b = walk_window_pairs(walks, 3, 9);
    auto c = walk_window_pairs(walks, 3, 10);
    CHECK(a.pairs == b.pairs);
    CHECK(a.pairs != c.pairs);
    CHECK(a.size() >= walks[0].size() * 2 - 2 + walks[1].size() * 2 - 2);
}

TEST_CASE("structural pairs hit edges proportionally with random orientation") {
    // eight equal-weight edges → sixteen equally likely ordered pairs
    std::vector<Edge> edges;
    for (int e = 0; e < 8; ++e) edges.push_back({e, e + 8, 0.5});
    auto kf = kf_edges(edges);
    auto set = structural_pairs(kf, 10000, 3);
    REQUIRE(set.kind == PairKind::PositiveStructural);
    REQUIRE(set.size() == 10000);

    std::map<std::pair<int, int>, int64_t> hist;
    for (const auto& pr : set.pairs) ++hist[pr];
    REQUIRE(hist.size() == 16);
    std::vector<int64_t> counts;
    for (const auto& [key, n] : hist) counts.push_back(n);
    CHECK(oracle::chi_square_p_value(counts, std::vector<double>(16, 1.0 / 16)) > 0.01);
}

TEST_CASE("structural pairs follow edge weights") {
    auto kf = kf_edges({{0, 1, 0.9}, {2, 3, 0.1}});
    auto set = structural_pairs(kf, 10000, 17);
    int64_t heavy = 0;
    for (const auto& [a, b] : set.pairs)
        if (a == 0 || a == 1) ++heavy;
    CHECK(oracle::chi_square_p_value({heavy, 10000 - heavy}, {0.9, 0.1}) > 0.01);

    CHECK_THROWS_AS(structural_pairs(kf_edges({}), 10, 1), validation_error);
    CHECK_THROWS_AS(structural_pairs(kf, -1, 1), validation_error);
}

TEST_CASE("negative pairs are uniform ordered non-self pairs") {
    auto set = negative_pairs(5, 10000, 23);
    REQUIRE(set.kind == PairKind::Negative);
    std::map<std::pair<int, int>, int64_t> hist;
    for (const auto& [a, b] : set.pairs) {
        REQUIRE(a != b);
        REQUIRE(a >= 0);
        REQUIRE(a < 5);
        REQUIRE(b >= 0);
        REQUIRE(b < 5);
        ++hist[{a, b}];
    }
    REQUIRE(hist.size() == 20);
    std::vector<int64_t> counts;
    for (const auto& [key, n] : hist) counts.push_back(n);
    CHECK(oracle::chi_square_p_value(counts, std::vector<double>(20, 1.0 / 20)) > 0.01);

    CHECK_THROWS_AS(negative_pairs(1, 10, 1), validation_error);
}

TEST_CASE("sequence window pairs read the k-mer stream") {
    auto corpus = parse_fasta("ACTG");
    KmerVocab vocab = build_vocab(corpus, 3);  // ACT, CTG
    auto set = sequence_window_pairs(corpus, vocab, 1, 4);
    int a = vocab.id_of("ACT");
    int b = vocab.id_of("CTG");
    std::vector<std::pair<int, int>> want = {{a, b}, {b, a}};
    CHECK(set.pairs == want);

    auto multi = parse_fasta("ACTGACT\nTGACTGC");
    KmerVocab v2 = build_vocab(multi, 3);
    auto s1 = sequence_window_pairs(multi, v2, 3, 8);
    auto s2 = sequence_window_pairs(multi, v2, 3, 8);
    auto s3 = sequence_window_pairs(multi, v2, 3, 9);
    CHECK(s1.pairs == s2.pairs);
    CHECK(s1.pairs != s3.pairs);
}

TEST_CASE("neighborhood sampling keeps block invariants") {
    auto adj = sym_normalize(
        SparseAdjacency::from_triplets(
            6, 6, {{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 0.5}, {2, 1, 0.5}, {2, 3, 1.0}, {3, 2, 1.0},
                   {3, 4, 1.0}, {4, 3, 1.0}, {4, 5, 1.0}, {5, 4, 1.0}}),
        1.0);
    std::vector<SparseAdjacency> adjs = {adj, adj};
    auto blocks = neighborhood_sample(adjs, {2, 5}, {2, 2}, 77);
    REQUIRE(blocks.size() == 2);

    // final outputs are the sorted seeds; every output list prefixes its inputs
    CHECK(blocks.back().output_nodes == std::vector<int>{2, 5});
    for (size_t l = 0; l < blocks.size(); ++l) {
        const auto& b = blocks[l];
        REQUIRE(b.output_nodes.size() <= b.input_nodes.size());
        for (size_t r = 0; r < b.output_nodes.size(); ++r)
            CHECK(b.output_nodes[r] == b.input_nodes[r]);
        CHECK(b.adj.n_rows == static_cast<int>(b.output_nodes.size()));
        CHECK(b.adj.n_cols == static_cast<int>(b.input_nodes.size()));
    }
    // chaining: layer l's inputs are layer l-1's outputs
    CHECK(blocks[1].input_nodes == blocks[0].output_nodes);

    CHECK_THROWS_AS(neighborhood_sample(adjs, {2, 2}, {2, 2}, 1), validation_error);
    CHECK_THROWS_AS(neighborhood_sample(adjs, {9}, {2, 2}, 1), validation_error);
    CHECK_THROWS_AS(neighborhood_sample(adjs, {1}, {2}, 1), validation_error);
    CHECK_THROWS_AS(neighborhood_sample(adjs, {}, {2, 2}, 1), validation_error);
}

TEST_CASE("walks are seed deterministic") {
    auto dbg = dbg_edges({{0, 1, 0.5}, {0, 2, 0.5}, {1, 0, 0.5}, {1, 2, 0.5},
                          {2, 0, 0.5}, {2, 1, 0.5}});
    WalkConfig cfg;
    cfg.walk_length = 10;
    cfg.walks_per_node = 4;
    auto a = biased_random_walks(dbg, 3, cfg, 5);
    auto b = biased_random_walks(dbg, 3, cfg, 5);
    auto c = biased_random_walks(dbg, 3, cfg, 6);
    CHECK(a == b);
    CHECK(a != c);
}
