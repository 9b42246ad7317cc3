#pragma once

// Heterogeneous metagenomic graph: De Bruijn transition edges over k-mers
// plus sub-k-mer frequency similarity edges (exact cosine or ANN-backed).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kge/ann.hpp"
#include "kge/common.hpp"
#include "kge/corpus.hpp"

namespace kge {

struct TransitionCounts {
    // (i, j) -> number of times k-mer i directly precedes k-mer j
    std::map<std::pair<int, int>, int64_t> counts;

    bool empty() const { return counts.empty(); }
    int64_t at(int i, int j) const {
        auto it = counts.find({i, j});
        return it == counts.end() ? 0 : it->second;
    }
};

enum class EdgeKind { Dbg, Kf };

struct Edge {
    int i, j;
    double w;
};

// dBG sets are directed; KF sets hold each unordered pair once (i < j)
// with symmetric semantics.
struct EdgeSet {
    EdgeKind kind = EdgeKind::Dbg;
    int sub_k = 0;          // KF only
    double threshold = 0;   // KF exact-mode t
    std::vector<Edge> edges;

    size_t size() const { return edges.size(); }

    // Both directions of every KF edge; dBG edges as stored.
    std::vector<Edge> directed_view() const {
        if (kind == EdgeKind::Dbg) return edges;
        std::vector<Edge> out;
        out.reserve(edges.size() * 2);
        for (const auto& e : edges) {
            out.push_back(e);
            out.push_back({e.j, e.i, e.w});
        }
        return out;
    }
};

struct SubKmerFrequencyMatrix {
    int sub_k = 0;
    int n_rows = 0;
    int dim = 0;  // 4^sub_k
    std::vector<uint32_t> data;  // row-major counts

    const uint32_t* row(int i) const { return data.data() + static_cast<size_t>(i) * dim; }
};

// Counts of the k-sub_k+1 windows of `kmer`, indexed in packed-code order.
inline std::vector<uint32_t> subkmer_frequency(std::string_view kmer, int sub_k) {
    if (sub_k < 1 || static_cast<size_t>(sub_k) > kmer.size())
        throw validation_error("sub_k must lie in [1, k]");
    std::vector<uint32_t> freq(static_cast<size_t>(1) << (2 * sub_k), 0);
    for (size_t i = 0; i + static_cast<size_t>(sub_k) <= kmer.size(); ++i)
        freq[encode_kmer(kmer.substr(i, static_cast<size_t>(sub_k)))]++;
    return freq;
}

inline SubKmerFrequencyMatrix build_features(const KmerVocab& vocab, int sub_k) {
    SubKmerFrequencyMatrix m;
    m.sub_k = sub_k;
    m.n_rows = vocab.size();
    m.dim = 1 << (2 * sub_k);
    m.data.resize(static_cast<size_t>(m.n_rows) * m.dim);
    for (int i = 0; i < m.n_rows; ++i) {
        auto freq = subkmer_frequency(vocab.kmer_of[static_cast<size_t>(i)], sub_k);
        std::copy(freq.begin(), freq.end(), m.data.begin() + static_cast<size_t>(i) * m.dim);
    }
    return m;
}

// Cosine similarity between two sub-k-mer count vectors.
inline double kf_similarity(const uint32_t* a, const uint32_t* b, int dim) {
    double dot = 0, na = 0, nb = 0;
    for (int i = 0; i < dim; ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0 || nb == 0) throw numeric_error("cosine of zero vector");
    // sqrt of the product: exact for integer counts (e.g. sqrt(4) = 2), so a
    // mathematical cosine of 1/2 compares as exactly 0.5 against the threshold
    return dot / std::sqrt(na * nb);
}

inline double kf_similarity(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
    if (a.size() != b.size()) throw validation_error("frequency vector dimension mismatch");
    return kf_similarity(a.data(), b.data(), static_cast<int>(a.size()));
}

inline TransitionCounts count_transitions(const Corpus& corpus, const KmerVocab& vocab) {
    TransitionCounts t;
    const int k = vocab.k;
    for (const auto& seq : corpus.sequences) {
        if (seq.bases.size() < static_cast<size_t>(k))
            throw validation_error("sequence " + seq.id + " shorter than k");
        std::string_view sv(seq.bases);
        int prev = -1;
        for (size_t i = 0; i + static_cast<size_t>(k) <= sv.size(); ++i) {
            int cur = vocab.id_of(sv.substr(i, static_cast<size_t>(k)));
            if (prev >= 0) t.counts[{prev, cur}]++;
            prev = cur;
        }
    }
    return t;
}

// w_ij = T(i,j) / sum_l T(i,l); per-node outgoing weights sum to 1.
inline EdgeSet dbg_edges(const TransitionCounts& counts) {
    EdgeSet set;
    set.kind = EdgeKind::Dbg;
    std::map<int, int64_t> out_total;
    for (const auto& [key, c] : counts.counts) out_total[key.first] += c;
    set.edges.reserve(counts.counts.size());
    for (const auto& [key, c] : counts.counts)
        set.edges.push_back({key.first, key.second,
                             static_cast<double>(c) / static_cast<double>(out_total[key.first])});
    return set;
}

// All unordered pairs with cosine >= t (inclusive). O(N^2 * dim).
inline EdgeSet kf_edges_exact(const SubKmerFrequencyMatrix& features, double t) {
    if (t <= 0 || t > 1) throw validation_error("threshold must lie in (0, 1]");
    if (features.n_rows < 2) throw validation_error("KF edges need at least two nodes");
    EdgeSet set;
    set.kind = EdgeKind::Kf;
    set.sub_k = features.sub_k;
    set.threshold = t;

    std::vector<double> norm2(static_cast<size_t>(features.n_rows));
    for (int i = 0; i < features.n_rows; ++i) {
        const uint32_t* r = features.row(i);
        double s = 0;
        for (int d = 0; d < features.dim; ++d) s += static_cast<double>(r[d]) * r[d];
        norm2[static_cast<size_t>(i)] = s;
    }
    for (int i = 0; i < features.n_rows; ++i) {
        const uint32_t* ri = features.row(i);
        for (int j = i + 1; j < features.n_rows; ++j) {
            const uint32_t* rj = features.row(j);
            double dot = 0;
            for (int d = 0; d < features.dim; ++d) dot += static_cast<double>(ri[d]) * rj[d];
            double w = dot / std::sqrt(norm2[static_cast<size_t>(i)] * norm2[static_cast<size_t>(j)]);
            if (w >= t) set.edges.push_back({i, j, w});
        }
    }
    return set;
}

struct AnnParams {
    int nlist = 0;   // 0 = ceil(sqrt(N))
    int nprobe = 0;  // 0 = ceil(nlist / 8)
    int kmeans_iters = 10;
    uint64_t seed = 0;
};

// Per-node approximate top-n_neighbors by cosine, symmetrized by union.
// Weights are recomputed from the normalized vectors so exact and ANN paths
// share one scale.
inline EdgeSet kf_edges_ann(const SubKmerFrequencyMatrix& features, int n_neighbors,
                            const AnnParams& params = {}) {
    const int n = features.n_rows;
    if (n_neighbors < 1 || n_neighbors >= n)
        throw validation_error("n_neighbors must lie in [1, N)");
    std::vector<double> raw(static_cast<size_t>(n) * features.dim);
    for (size_t i = 0; i < raw.size(); ++i) raw[i] = features.data[i];

    int nlist = params.nlist > 0 ? params.nlist : ann::IvfIndex::default_nlist(n);
    auto index = ann::build(raw, n, features.dim, nlist, params.seed, params.kmeans_iters);
    int nprobe = params.nprobe > 0 ? std::min(params.nprobe, index.nlist) : index.default_nprobe();

    EdgeSet set;
    set.kind = EdgeKind::Kf;
    set.sub_k = features.sub_k;
    std::map<std::pair<int, int>, double> pairs;
    for (int i = 0; i < n; ++i) {
        auto hits = ann::search(index, index.vectors.data() + static_cast<size_t>(i) * index.dim,
                                n_neighbors, nprobe, i);
        for (const auto& h : hits) {
            int a = std::min(i, h.id), b = std::max(i, h.id);
            // store the same exact cosine the exact mode computes
            double w = kf_similarity(features.row(a), features.row(b), features.dim);
            if (w > 0.0) pairs.emplace(std::make_pair(a, b), w);
        }
    }
    set.edges.reserve(pairs.size());
    for (const auto& [key, w] : pairs) set.edges.push_back({key.first, key.second, w});
    return set;
}

enum class KfMode { Exact, Ann };

struct GraphConfig {
    int k = 3;
    std::vector<int> kf_sub_ks = {2};
    std::vector<int> feature_sub_ks;  // empty: {1} + kf_sub_ks
    KfMode mode = KfMode::Exact;
    double threshold = 0.5;  // exact mode
    int n_neighbors = 10;    // ann mode
    AnnParams ann;

    std::vector<int> resolved_feature_sub_ks() const {
        std::vector<int> out = feature_sub_ks;
        if (out.empty()) {
            out.push_back(1);
            out.insert(out.end(), kf_sub_ks.begin(), kf_sub_ks.end());
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
};

struct MetagenomicGraph {
    KmerVocab vocab;
    GraphConfig config;
    uint64_t corpus_fingerprint = 0;
    EdgeSet dbg;
    std::vector<EdgeSet> kf;                      // one per kf sub_k
    std::vector<SubKmerFrequencyMatrix> features; // per feature sub_k (superset of kf sub_ks)

    int n_nodes() const { return vocab.size(); }

    const EdgeSet& kf_for(int sub_k) const {
        for (const auto& set : kf)
            if (set.sub_k == sub_k) return set;
        throw validation_error("graph has no KF edge set for sub_k=" + std::to_string(sub_k));
    }

    bool has_kf(int sub_k) const {
        for (const auto& set : kf)
            if (set.sub_k == sub_k) return true;
        return false;
    }

    const SubKmerFrequencyMatrix& features_for(int sub_k) const {
        for (const auto& m : features)
            if (m.sub_k == sub_k) return m;
        throw validation_error("graph has no feature matrix for sub_k=" + std::to_string(sub_k));
    }
};

inline MetagenomicGraph assemble_graph(const Corpus& corpus, const GraphConfig& config) {
    for (int sub_k : config.kf_sub_ks)
        if (sub_k < 1 || sub_k > config.k)
            throw validation_error("kf sub_k must lie in [1, k]");
    MetagenomicGraph g;
    g.config = config;
    g.corpus_fingerprint = corpus.fingerprint();
    g.vocab = build_vocab(corpus, config.k);
    g.dbg = dbg_edges(count_transitions(corpus, g.vocab));

    auto feature_sub_ks = config.resolved_feature_sub_ks();
    for (int sub_k : feature_sub_ks) {
        if (sub_k < 1 || sub_k > config.k)
            throw validation_error("feature sub_k must lie in [1, k]");
        g.features.push_back(build_features(g.vocab, sub_k));
    }
    for (int sub_k : config.kf_sub_ks) {
        const auto& feats = g.features_for(sub_k);
        g.kf.push_back(config.mode == KfMode::Exact
                           ? kf_edges_exact(feats, config.threshold)
                           : kf_edges_ann(feats, config.n_neighbors, config.ann));
    }
    return g;
}

}  // namespace kge
