#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "kge/ann.hpp"
#include "kge/graph.hpp"
#include "support/oracles.hpp"

using namespace kge;

namespace {

std::vector<double> random_vectors(int n, int dim, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> v(static_cast<size_t>(n) * dim);
    for (auto& x : v) x = ann::uniform_double(rng) + 0.05;  // strictly positive, like counts
    return v;
}

}  // namespace

TEST_CASE("kmeans objective never increases") {
    auto vecs = random_vectors(200, 8, 11);
    auto km = ann::kmeans(vecs, 200, 8, 12, 15, 3);
    REQUIRE(km.objective_history.size() == 15);
    for (size_t i = 1; i < km.objective_history.size(); ++i)
        CHECK(km.objective_history[i] <= km.objective_history[i - 1] + 1e-9);
    CHECK(km.centroids.size() == 12u * 8u);
}

TEST_CASE("kmeans validation") {
    auto vecs = random_vectors(10, 4, 1);
    CHECK_THROWS_AS(ann::kmeans(vecs, 10, 4, 0, 5, 1), validation_error);
    CHECK_THROWS_AS(ann::kmeans(vecs, 10, 4, 11, 5, 1), validation_error);
    CHECK_THROWS_AS(ann::kmeans(vecs, 10, 4, 2, 0, 1), validation_error);
}

TEST_CASE("kmeans handles duplicate-heavy input without empty clusters") {
    // 3 distinct points, many repeats, nlist = 3
    std::vector<double> vecs;
    for (int i = 0; i < 30; ++i) {
        int g = i % 3;
        vecs.push_back(g == 0 ? 1.0 : 0.0);
        vecs.push_back(g == 1 ? 1.0 : 0.0);
        vecs.push_back(g == 2 ? 1.0 : 0.0);
    }
    auto km = ann::kmeans(vecs, 30, 3, 3, 10, 7);
    CHECK(km.objective_history.back() == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("index stores unit vectors and rejects zeros") {
    auto vecs = random_vectors(50, 6, 2);
    auto index = ann::build(vecs, 50, 6, 8, 1);
    CHECK(index.nlist == 8);
    for (int i = 0; i < index.n; ++i) {
        double n2 = ann::detail::dot(index.vectors.data() + static_cast<size_t>(i) * index.dim,
                                     index.vectors.data() + static_cast<size_t>(i) * index.dim,
                                     index.dim);
        CHECK(n2 == Catch::Approx(1.0).margin(1e-12));
    }
    size_t indexed = 0;
    for (const auto& cell : index.postings) indexed += cell.size();
    CHECK(indexed == 50u);

    std::vector<double> with_zero(vecs);
    std::fill_n(with_zero.begin() + 12, 6, 0.0);
    CHECK_THROWS_AS(ann::build(with_zero, 50, 6, 8, 1), data_error);
}

TEST_CASE("identical inputs collapse to one cell") {
    std::vector<double> vecs;
    for (int i = 0; i < 20; ++i) {
        vecs.push_back(3.0);
        vecs.push_back(4.0);
    }
    auto index = ann::build(vecs, 20, 2, 5, 9);
    CHECK(index.nlist == 1);
    auto hits = ann::search(index, vecs.data(), 4, 1, 0);
    REQUIRE(hits.size() == 4);
    // all ties at cosine 1, so ids ascend from 1 (0 excluded)
    for (int i = 0; i < 4; ++i) {
        CHECK(hits[static_cast<size_t>(i)].id == i + 1);
        CHECK(hits[static_cast<size_t>(i)].score == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("default parameter formulas") {
    CHECK(ann::IvfIndex::default_nlist(1) == 1);
    CHECK(ann::IvfIndex::default_nlist(100) == 10);
    CHECK(ann::IvfIndex::default_nlist(101) == 11);
    CHECK(ann::IvfIndex::default_nlist(4096) == 64);
    ann::IvfIndex idx;
    idx.nlist = 64;
    CHECK(idx.default_nprobe() == 8);
    idx.nlist = 1;
    CHECK(idx.default_nprobe() == 1);
    idx.nlist = 9;
    CHECK(idx.default_nprobe() == 2);
}

TEST_CASE("exhaustive probing equals brute force") {
    const int n = 120, dim = 10;
    auto vecs = random_vectors(n, dim, 21);
    auto index = ann::build(vecs, n, dim, 11, 4);
    for (int q : {0, 17, 63, 119}) {
        auto hits = ann::search(index, vecs.data() + static_cast<size_t>(q) * dim, 10, index.nlist, q);
        auto expect = oracle::brute_force_top_cosine(vecs, n, dim, q, 10);
        REQUIRE(hits.size() == expect.size());
        for (size_t i = 0; i < hits.size(); ++i) CHECK(hits[i].id == expect[i]);
        for (size_t i = 1; i < hits.size(); ++i) CHECK(hits[i].score <= hits[i - 1].score + 1e-12);
    }
}

TEST_CASE("search validates arguments and handles small n") {
    auto vecs = random_vectors(10, 3, 4);
    auto index = ann::build(vecs, 10, 3, 3, 4);
    CHECK_THROWS_AS(ann::search(index, vecs.data(), 0, 1), validation_error);
    CHECK_THROWS_AS(ann::search(index, vecs.data(), 5, 0), validation_error);
    CHECK_THROWS_AS(ann::search(index, vecs.data(), 5, index.nlist + 1), validation_error);

    // asking for more hits than exist returns what's reachable
    auto hits = ann::search(index, vecs.data(), 50, index.nlist, 0);
    CHECK(hits.size() == 9);
}

TEST_CASE("partial probing keeps good recall on clustered data") {
    // 16 well-separated clusters of 32 points each
    std::mt19937_64 rng(33);
    const int n = 512, dim = 8;
    std::vector<double> vecs(static_cast<size_t>(n) * dim);
    for (int i = 0; i < n; ++i) {
        int c = i / 32;
        for (int d = 0; d < dim; ++d) {
            double center = (c >> (d % 4)) & 1 ? 5.0 : 1.0;
            vecs[static_cast<size_t>(i) * dim + d] = center + 0.1 * ann::uniform_double(rng);
        }
    }
    auto index = ann::build(vecs, n, dim, 16, 5);
    int found = 0, total = 0;
    for (int q = 0; q < n; q += 16) {
        auto hits = ann::search(index, vecs.data() + static_cast<size_t>(q) * dim, 10, 4, q);
        auto expect = oracle::brute_force_top_cosine(vecs, n, dim, q, 10);
        std::set<int> got;
        for (const auto& h : hits) got.insert(h.id);
        for (int e : expect) {
            ++total;
            found += got.count(e) != 0;
        }
    }
    CHECK(static_cast<double>(found) / total >= 0.8);
}

TEST_CASE("index build is deterministic in the seed") {
    auto vecs = random_vectors(80, 5, 6);
    auto a = ann::build(vecs, 80, 5, 9, 42);
    auto b = ann::build(vecs, 80, 5, 9, 42);
    CHECK(a.centroids == b.centroids);
    CHECK(a.postings == b.postings);
    auto c = ann::build(vecs, 80, 5, 9, 43);
    CHECK(a.centroids != c.centroids);  // different seed, different quantizer
}
