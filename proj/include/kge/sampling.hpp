#pragma once

// Positive/negative pair producers (biased walks over dBG edges, structural
// similarity draws over KF edges, uniform negatives) and layer-wise
// neighborhood sampling for mini-batch training.

#include <algorithm>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "kge/ann.hpp"  // uniform_double
#include "kge/corpus.hpp"
#include "kge/encoder.hpp"
#include "kge/graph.hpp"

namespace kge {

enum class PairKind { PositiveContext, PositiveStructural, Negative };

struct PairSet {
    PairKind kind = PairKind::PositiveContext;
    std::vector<std::pair<int, int>> pairs;

    size_t size() const { return pairs.size(); }
};

struct WalkConfig {
    double p = 1.0;
    double q = 1.0;
    int walk_length = 20;    // nodes per walk
    int walks_per_node = 10;
    int window = 5;          // m
};

inline void validate_walk_config(const WalkConfig& cfg) {
    if (cfg.p <= 0 || cfg.q <= 0) throw validation_error("walk biases p, q must be positive");
    if (cfg.walk_length < 2) throw validation_error("walk_length must be >= 2");
    if (cfg.walks_per_node < 1) throw validation_error("walks_per_node must be >= 1");
    if (cfg.window < 1) throw validation_error("window must be >= 1");
}

namespace detail {

struct OutAdjacency {
    std::vector<std::vector<std::pair<int, double>>> out;  // sorted by neighbor id

    explicit OutAdjacency(const EdgeSet& edges, int n) : out(static_cast<size_t>(n)) {
        for (const auto& e : edges.edges) out[static_cast<size_t>(e.i)].push_back({e.j, e.w});
        for (auto& row : out) std::sort(row.begin(), row.end());
    }

    bool has_edge(int i, int j) const {
        const auto& row = out[static_cast<size_t>(i)];
        auto it = std::lower_bound(row.begin(), row.end(), std::make_pair(j, 0.0));
        return it != row.end() && it->first == j;
    }
};

inline int weighted_pick(const std::vector<std::pair<int, double>>& choices, std::mt19937_64& rng) {
    double total = 0;
    for (const auto& [id, w] : choices) total += w;
    double r = ann::uniform_double(rng) * total;
    double acc = 0;
    for (const auto& [id, w] : choices) {
        acc += w;
        if (acc >= r) return id;
    }
    return choices.back().first;
}

}  // namespace detail

// Second-order biased walks: step weight w(v,x) · α where α = 1/p if x is the
// previous node, 1 if the previous node has an edge to x, 1/q otherwise.
// Walks truncate at sinks. One derived seed per (start node, walk index).
inline std::vector<std::vector<int>> biased_random_walks(const EdgeSet& dbg, int n_nodes,
                                                         const WalkConfig& cfg, uint64_t seed) {
    validate_walk_config(cfg);
    if (dbg.edges.empty()) throw validation_error("walks need a non-empty dBG edge set");
    detail::OutAdjacency adj(dbg, n_nodes);

    std::vector<std::vector<int>> walks;
    walks.reserve(static_cast<size_t>(n_nodes) * cfg.walks_per_node);
    std::vector<std::pair<int, double>> biased;
    for (int node = 0; node < n_nodes; ++node) {
        for (int wi = 0; wi < cfg.walks_per_node; ++wi) {
            std::mt19937_64 rng(derive_seed(seed, static_cast<uint64_t>(node), static_cast<uint64_t>(wi)));
            std::vector<int> walk = {node};
            int prev = -1;
            while (static_cast<int>(walk.size()) < cfg.walk_length) {
                int cur = walk.back();
                const auto& row = adj.out[static_cast<size_t>(cur)];
                if (row.empty()) break;  // sink
                int next;
                if (prev < 0) {
                    next = detail::weighted_pick(row, rng);
                } else {
                    biased.clear();
                    for (const auto& [x, w] : row) {
                        double alpha = x == prev            ? 1.0 / cfg.p
                                       : adj.has_edge(prev, x) ? 1.0
                                                               : 1.0 / cfg.q;
                        biased.push_back({x, w * alpha});
                    }
                    next = detail::weighted_pick(biased, rng);
                }
                prev = cur;
                walk.push_back(next);
            }
            walks.push_back(std::move(walk));
        }
    }
    return walks;
}

// Shrunk-window context pairs: at each position draw δ ~ U{1..m} and emit
// (v_i, v_j) for j ∈ [i-δ, i+δ], j ≠ i, in bounds.
inline void window_pairs_into(const std::vector<int>& walk, int m, std::mt19937_64& rng,
                              std::vector<std::pair<int, int>>& out) {
    if (m < 1) throw validation_error("window must be >= 1");
    int len = static_cast<int>(walk.size());
    for (int i = 0; i < len; ++i) {
        int delta = 1 + static_cast<int>(rng() % static_cast<uint64_t>(m));
        for (int j = std::max(0, i - delta); j <= std::min(len - 1, i + delta); ++j)
            if (j != i) out.push_back({walk[static_cast<size_t>(i)], walk[static_cast<size_t>(j)]});
    }
}

inline PairSet window_pairs(const std::vector<int>& walk, int m, uint64_t seed) {
    PairSet set;
    set.kind = PairKind::PositiveContext;
    std::mt19937_64 rng(derive_seed(seed, 0x77696e));
    window_pairs_into(walk, m, rng, set.pairs);
    return set;
}

inline PairSet walk_window_pairs(const std::vector<std::vector<int>>& walks, int m, uint64_t seed) {
    PairSet set;
    set.kind = PairKind::PositiveContext;
    for (size_t w = 0; w < walks.size(); ++w) {
        std::mt19937_64 rng(derive_seed(seed, 0x77696e, w));
        window_pairs_into(walks[w], m, rng, set.pairs);
    }
    return set;
}

// Draws with replacement, P(i,j) = w_ij / Σ w; orientation randomized.
inline PairSet structural_pairs(const EdgeSet& kf, int n_pairs, uint64_t seed) {
    if (kf.edges.empty()) throw validation_error("structural sampling needs KF edges");
    if (n_pairs < 0) throw validation_error("n_pairs must be non-negative");
    std::vector<double> cum(kf.edges.size());
    double total = 0;
    for (size_t e = 0; e < kf.edges.size(); ++e) {
        total += kf.edges[e].w;
        cum[e] = total;
    }
    if (total <= 0) throw numeric_error("KF edge weights sum to zero");

    PairSet set;
    set.kind = PairKind::PositiveStructural;
    std::mt19937_64 rng(derive_seed(seed, 0x737472));
    for (int t = 0; t < n_pairs; ++t) {
        double r = ann::uniform_double(rng) * total;
        size_t e = static_cast<size_t>(std::lower_bound(cum.begin(), cum.end(), r) - cum.begin());
        if (e >= kf.edges.size()) e = kf.edges.size() - 1;
        const auto& edge = kf.edges[e];
        bool flip = (rng() & 1) != 0;
        set.pairs.push_back(flip ? std::make_pair(edge.j, edge.i) : std::make_pair(edge.i, edge.j));
    }
    return set;
}

// Uniform over ordered pairs (i, j), i ≠ j, with replacement.
inline PairSet negative_pairs(int n_nodes, int n_pairs, uint64_t seed) {
    if (n_nodes < 2) throw validation_error("negative sampling needs at least two nodes");
    if (n_pairs < 0) throw validation_error("n_pairs must be non-negative");
    PairSet set;
    set.kind = PairKind::Negative;
    std::mt19937_64 rng(derive_seed(seed, 0x6e6567));
    for (int t = 0; t < n_pairs; ++t) {
        int i = static_cast<int>(rng() % static_cast<uint64_t>(n_nodes));
        int j = static_cast<int>(rng() % static_cast<uint64_t>(n_nodes - 1));
        if (j >= i) ++j;
        set.pairs.push_back({i, j});
    }
    return set;
}

// Context pairs drawn directly over each sequence's k-mer stream.
inline PairSet sequence_window_pairs(const Corpus& corpus, const KmerVocab& vocab, int m,
                                     uint64_t seed) {
    PairSet set;
    set.kind = PairKind::PositiveContext;
    for (size_t s = 0; s < corpus.sequences.size(); ++s) {
        std::vector<int> stream;
        for (const auto& kmer : extract_kmers(corpus.sequences[s].bases, vocab.k))
            stream.push_back(vocab.id_of(kmer));
        std::mt19937_64 rng(derive_seed(seed, 0x736571, s));
        window_pairs_into(stream, m, rng, set.pairs);
    }
    return set;
}

constexpr int kFanoutAll = -1;

// Layer-wise sampled receptive fields over precomputed normalized adjacencies
// (one per encoder layer, full-graph degrees). The diagonal term is kept
// exactly; sampled off-diagonal neighbors are reweighted by count/sampled so
// each row is an unbiased estimate of the full propagation row.
inline std::vector<SampledBlock> neighborhood_sample(const std::vector<SparseAdjacency>& adjs,
                                                     const std::vector<int>& seeds,
                                                     const std::vector<int>& fanouts,
                                                     uint64_t seed) {
    if (adjs.empty()) throw validation_error("neighborhood sampling needs adjacencies");
    if (fanouts.size() != adjs.size())
        throw validation_error("fanout list length must match encoder depth");
    if (seeds.empty()) throw validation_error("no seed nodes");
    const int n = adjs.front().n_rows;
    for (int s : seeds)
        if (s < 0 || s >= n) throw validation_error("seed node out of range");
    std::vector<int> sorted_seeds = seeds;
    std::sort(sorted_seeds.begin(), sorted_seeds.end());
    if (std::adjacent_find(sorted_seeds.begin(), sorted_seeds.end()) != sorted_seeds.end())
        throw validation_error("duplicate seed nodes");

    size_t depth = adjs.size();
    std::vector<SampledBlock> blocks(depth);
    std::vector<int> needed = seeds;
    for (size_t l = depth; l-- > 0;) {
        const auto& adj = adjs[l];
        std::mt19937_64 rng(derive_seed(seed, 0x6e6273, l));
        SampledBlock block;
        block.output_nodes = needed;
        block.input_nodes = needed;
        std::map<int, int> local;
        for (size_t t = 0; t < block.input_nodes.size(); ++t)
            local[block.input_nodes[t]] = static_cast<int>(t);

        std::vector<std::tuple<int, int, double>> triplets;
        std::vector<std::pair<int, double>> others;
        for (size_t r = 0; r < block.output_nodes.size(); ++r) {
            int i = block.output_nodes[r];
            others.clear();
            double self_w = 0;
            for (int p = adj.row_ptr[static_cast<size_t>(i)]; p < adj.row_ptr[static_cast<size_t>(i) + 1]; ++p) {
                int j = adj.col_idx[static_cast<size_t>(p)];
                double w = adj.values[static_cast<size_t>(p)];
                if (j == i)
                    self_w = w;
                else
                    others.push_back({j, w});
            }
            int fanout = fanouts[l];
            double boost = 1.0;
            if (fanout != kFanoutAll && static_cast<int>(others.size()) > fanout) {
                // partial Fisher-Yates: first `fanout` entries become the sample
                for (int t = 0; t < fanout; ++t) {
                    size_t pick = static_cast<size_t>(t) +
                                  static_cast<size_t>(rng() % static_cast<uint64_t>(others.size() - static_cast<size_t>(t)));
                    std::swap(others[static_cast<size_t>(t)], others[pick]);
                }
                boost = static_cast<double>(others.size()) / fanout;
                others.resize(static_cast<size_t>(fanout));
            }
            if (self_w != 0) triplets.push_back({static_cast<int>(r), static_cast<int>(r), self_w});
            for (const auto& [j, w] : others) {
                auto it = local.find(j);
                int col;
                if (it == local.end()) {
                    col = static_cast<int>(block.input_nodes.size());
                    local[j] = col;
                    block.input_nodes.push_back(j);
                } else {
                    col = it->second;
                }
                triplets.push_back({static_cast<int>(r), col, w * boost});
            }
        }
        block.adj = SparseAdjacency::from_triplets(static_cast<int>(block.output_nodes.size()),
                                                   static_cast<int>(block.input_nodes.size()),
                                                   std::move(triplets));
        needed = block.input_nodes;
        blocks[l] = std::move(block);
    }
    return blocks;
}

}  // namespace kge
