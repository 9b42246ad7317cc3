#pragma once

// Downstream tasks: exact edit distance, Poincaré-ball distance head for edit
// distance approximation (%RMSE), and closest-string retrieval (top-n%).

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kge/corpus.hpp"
#include "kge/tensor.hpp"

namespace kge {

// Levenshtein distance, two-row table.
inline int edit_distance(const std::string& a, const std::string& b) {
    const size_t m = a.size(), n = b.size();
    std::vector<int> prev(n + 1), cur(n + 1);
    for (size_t j = 0; j <= n; ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= m; ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= n; ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                               prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[n];
}

constexpr double kBallLimit = 1.0 - 1e-5;

// x ↦ x / (1 + ‖x‖), then clamp the norm to ≤ 1 - 1e-5
inline std::vector<double> project_to_ball(std::vector<double> x) {
    double n2 = 0;
    for (double v : x) n2 += v * v;
    double norm = std::sqrt(n2);
    double f = 1.0 / (1.0 + norm);
    if (norm * f > kBallLimit) f = kBallLimit / norm;
    for (auto& v : x) v *= f;
    return x;
}

// Poincaré distance; the arccosh argument is clamped to ≥ 1.
inline double hyperbolic_distance(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size()) throw validation_error("hyperbolic operands must match");
    double q = 0, nu = 0, nv = 0;
    for (size_t t = 0; t < u.size(); ++t) {
        double d = u[t] - v[t];
        q += d * d;
        nu += u[t] * u[t];
        nv += v[t] * v[t];
    }
    if (nu > 1.0 || nv > 1.0) throw validation_error("hyperbolic points must lie in the unit ball");
    double arg = 1.0 + 2.0 * q / ((1.0 - nu) * (1.0 - nv));
    return std::acosh(std::max(arg, 1.0));
}

// ---- sequence embedding aggregation ----

enum class Aggregation { Mean, Concat };

// Concat mode pads shorter sequences by repeating the last k-mer embedding up
// to target_kmers rows so every sequence lands in one vector space.
inline std::vector<double> embed_sequence(const std::string& bases, const KmerVocab& vocab,
                                          const DenseMatrix& emb, Aggregation mode,
                                          int target_kmers = 0) {
    auto kmers = extract_kmers(bases, vocab.k);
    if (kmers.empty()) throw validation_error("sequence shorter than k");
    std::vector<int> ids;
    for (const auto& kmer : kmers) ids.push_back(vocab.id_of(kmer));
    for (int id : ids)
        if (id < 0 || id >= emb.rows) throw validation_error("embedding row out of range");

    int d = emb.cols;
    if (mode == Aggregation::Mean) {
        std::vector<double> out(static_cast<size_t>(d), 0.0);
        for (int id : ids)
            for (int t = 0; t < d; ++t) out[static_cast<size_t>(t)] += emb.at(id, t);
        for (auto& v : out) v /= static_cast<double>(ids.size());
        return out;
    }
    if (target_kmers == 0) target_kmers = static_cast<int>(ids.size());
    if (static_cast<int>(ids.size()) > target_kmers)
        throw validation_error("sequence exceeds the concat target length");
    std::vector<double> out;
    out.reserve(static_cast<size_t>(target_kmers) * d);
    for (int r = 0; r < target_kmers; ++r) {
        int id = ids[static_cast<size_t>(std::min<int>(r, static_cast<int>(ids.size()) - 1))];
        for (int t = 0; t < d; ++t) out.push_back(emb.at(id, t));
    }
    return out;
}

// All sequences of a corpus into one S x D matrix (concat pads to the longest).
inline DenseMatrix embed_corpus(const Corpus& corpus, const KmerVocab& vocab,
                                const DenseMatrix& emb, Aggregation mode) {
    if (corpus.sequences.empty()) throw data_error("empty corpus");
    int target = 0;
    for (const auto& s : corpus.sequences) {
        int n_kmers = static_cast<int>(s.bases.size()) - vocab.k + 1;
        if (n_kmers < 1) throw validation_error("sequence shorter than k");
        target = std::max(target, n_kmers);
    }
    int dim = mode == Aggregation::Mean ? emb.cols : target * emb.cols;
    DenseMatrix out(static_cast<int>(corpus.sequences.size()), dim);
    for (size_t s = 0; s < corpus.sequences.size(); ++s) {
        auto v = embed_sequence(corpus.sequences[s].bases, vocab, emb, mode, target);
        std::copy(v.begin(), v.end(), out.row(static_cast<int>(s)));
    }
    return out;
}

constexpr int kOneHotCap = 1 << 14;  // 4^7

inline DenseMatrix one_hot_embedding(int n, bool allow_large = false) {
    if (n < 1) throw validation_error("one-hot needs at least one k-mer");
    if (n > kOneHotCap && !allow_large)
        throw validation_error("one-hot embedding exceeds the 4^7 capacity cap (pass the override)");
    DenseMatrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

// ---- pair datasets ----

struct SequencePair {
    int a;
    int b;
    int ed;
};

struct SequencePairDataset {
    std::vector<SequencePair> pairs;
    int max_length = 0;  // l in the %RMSE normalization
};

inline SequencePairDataset build_pair_dataset(const Corpus& corpus, int n_pairs, uint64_t seed) {
    if (corpus.sequences.size() < 2) throw data_error("pair dataset needs at least two sequences");
    if (n_pairs < 1) throw validation_error("n_pairs must be >= 1");
    SequencePairDataset ds;
    for (const auto& s : corpus.sequences)
        ds.max_length = std::max(ds.max_length, static_cast<int>(s.bases.size()));
    std::mt19937_64 rng(derive_seed(seed, 0x706472));
    int n = static_cast<int>(corpus.sequences.size());
    for (int t = 0; t < n_pairs; ++t) {
        int a = static_cast<int>(rng() % static_cast<uint64_t>(n));
        int b = static_cast<int>(rng() % static_cast<uint64_t>(n - 1));
        if (b >= a) ++b;
        ds.pairs.push_back(
            {a, b, edit_distance(corpus.sequences[static_cast<size_t>(a)].bases,
                                 corpus.sequences[static_cast<size_t>(b)].bases)});
    }
    return ds;
}

// ---- distance head ----

struct DistanceHead {
    DenseMatrix w;  // D x head_dim
    DenseMatrix b;  // 1 x head_dim
};

struct HeadConfig {
    int head_dim = 16;
    int epochs = 200;
    AdamConfig adam{.lr = 1e-2};
    uint64_t seed = 0;
};

namespace detail {

// tape pipeline: pred = l · poincare(project(gather_a(ZW + b)), project(gather_b(...)))
struct HeadGraph {
    int w_node, b_node, loss_node;
};

inline HeadGraph head_loss_tape(Tape& tape, const DenseMatrix& seq_emb,
                                const SequencePairDataset& ds, const DenseMatrix& w,
                                const DenseMatrix& b, bool as_params) {
    if (ds.pairs.empty()) throw validation_error("head needs at least one pair");
    if (w.rows != seq_emb.cols) throw validation_error("head weight shape mismatch");
    HeadGraph g;
    g.w_node = as_params ? tape.param(w) : tape.input(w);
    g.b_node = as_params ? tape.param(b) : tape.input(b);
    int proj = tape.project_ball(
        tape.add_row_bias(tape.matmul(tape.input(seq_emb), g.w_node), g.b_node));
    std::vector<int> rows_a, rows_b;
    DenseMatrix target(static_cast<int>(ds.pairs.size()), 1);
    for (size_t t = 0; t < ds.pairs.size(); ++t) {
        rows_a.push_back(ds.pairs[t].a);
        rows_b.push_back(ds.pairs[t].b);
        target.at(static_cast<int>(t), 0) = static_cast<double>(ds.pairs[t].ed);
    }
    int h = tape.poincare_rows(tape.gather_rows(proj, rows_a), tape.gather_rows(proj, rows_b));
    int pred = tape.scale(h, static_cast<double>(ds.max_length));
    g.loss_node = tape.scale(tape.mse_sum(pred, std::move(target)),
                             1.0 / static_cast<double>(ds.pairs.size()));
    return g;
}

}  // namespace detail

// Mean squared error between l·h(f(z_a), f(z_b)) and the true edit distance.
inline double head_mse(const DistanceHead& head, const SequencePairDataset& ds,
                       const DenseMatrix& seq_emb) {
    Tape tape;
    return tape.value(detail::head_loss_tape(tape, seq_emb, ds, head.w, head.b, false).loss_node)
        .data[0];
}

struct HeadTrainResult {
    DistanceHead head;
    std::vector<std::pair<double, double>> history;  // per epoch: train mse, val mse
};

// Full-batch Adam on the train pairs; returns the best-validation checkpoint.
inline HeadTrainResult train_distance_head(const DenseMatrix& seq_emb,
                                           const SequencePairDataset& train,
                                           const SequencePairDataset& val, const HeadConfig& cfg) {
    if (cfg.head_dim < 1) throw validation_error("head_dim must be >= 1");
    if (cfg.epochs < 1) throw validation_error("epochs must be >= 1");
    DistanceHead cur;
    cur.w = glorot_uniform(seq_emb.cols, cfg.head_dim, derive_seed(cfg.seed, 0x686561));
    cur.b = DenseMatrix(1, cfg.head_dim);

    HeadTrainResult result;
    result.head = cur;
    double best_val = std::numeric_limits<double>::infinity();
    AdamState opt;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Tape tape;
        auto g = detail::head_loss_tape(tape, seq_emb, train, cur.w, cur.b, true);
        double train_mse = tape.value(g.loss_node).data[0];
        if (!std::isfinite(train_mse))
            throw numeric_error("head loss diverged at epoch " + std::to_string(epoch));
        tape.backward(g.loss_node);
        adam_step({&cur.w, &cur.b}, {&tape.grad(g.w_node), &tape.grad(g.b_node)}, opt, cfg.adam,
                  {"head_w", "head_b"});

        double val_mse = head_mse(cur, val, seq_emb);
        result.history.push_back({train_mse, val_mse});
        if (val_mse < best_val) {
            best_val = val_mse;
            result.head = cur;
        }
    }
    return result;
}

// Projected head outputs for every sequence row.
inline std::vector<std::vector<double>> head_points(const DistanceHead& head,
                                                    const DenseMatrix& seq_emb) {
    if (head.w.rows != seq_emb.cols) throw validation_error("head weight shape mismatch");
    DenseMatrix e = matmul(seq_emb, head.w);
    std::vector<std::vector<double>> points;
    points.reserve(static_cast<size_t>(e.rows));
    for (int i = 0; i < e.rows; ++i) {
        std::vector<double> row(e.row(i), e.row(i) + e.cols);
        for (int j = 0; j < e.cols; ++j) row[static_cast<size_t>(j)] += head.b.at(0, j);
        points.push_back(project_to_ball(std::move(row)));
    }
    return points;
}

// (100/l) · sqrt(mean (ED - l·h)²); paper_literal keeps the plain sum of
// squares under the root instead of the mean.
inline double percent_rmse(const DistanceHead& head, const SequencePairDataset& ds,
                           const DenseMatrix& seq_emb, int l, bool paper_literal = false) {
    if (ds.pairs.empty()) throw validation_error("percent_rmse needs pairs");
    if (l < 1) throw validation_error("l must be >= 1");
    auto points = head_points(head, seq_emb);
    double sum_sq = 0;
    for (const auto& p : ds.pairs) {
        double pred = static_cast<double>(l) *
                      hyperbolic_distance(points[static_cast<size_t>(p.a)], points[static_cast<size_t>(p.b)]);
        double diff = static_cast<double>(p.ed) - pred;
        sum_sq += diff * diff;
    }
    if (!paper_literal) sum_sq /= static_cast<double>(ds.pairs.size());
    return 100.0 / static_cast<double>(l) * std::sqrt(sum_sq);
}

// ---- retrieval ----

// Per query: every reference achieving the minimum edit distance.
inline std::vector<std::vector<int>> true_nearest_refs(const Corpus& queries, const Corpus& refs) {
    if (refs.sequences.empty()) throw data_error("empty reference set");
    std::vector<std::vector<int>> out;
    for (const auto& q : queries.sequences) {
        int best = std::numeric_limits<int>::max();
        std::vector<int> ties;
        for (size_t r = 0; r < refs.sequences.size(); ++r) {
            int d = edit_distance(q.bases, refs.sequences[r].bases);
            if (d < best) {
                best = d;
                ties.assign(1, static_cast<int>(r));
            } else if (d == best) {
                ties.push_back(static_cast<int>(r));
            }
        }
        out.push_back(std::move(ties));
    }
    return out;
}

// Fraction (as a percentage) of queries whose true nearest reference ranks
// within the top ⌈n%·|refs|⌉ by hyperbolic distance between projected rows.
inline double retrieval_topn(const DenseMatrix& query_emb, const DenseMatrix& ref_emb,
                             const std::vector<std::vector<int>>& truth, double n_percent) {
    if (ref_emb.rows < 1) throw data_error("empty reference set");
    if (query_emb.rows != static_cast<int>(truth.size()))
        throw validation_error("one truth list per query");
    if (query_emb.cols != ref_emb.cols) throw validation_error("embedding dims must match");
    if (n_percent <= 0 || n_percent > 100) throw validation_error("n_percent must lie in (0, 100]");

    std::vector<std::vector<double>> refs;
    for (int r = 0; r < ref_emb.rows; ++r)
        refs.push_back(project_to_ball({ref_emb.row(r), ref_emb.row(r) + ref_emb.cols}));

    int cutoff = static_cast<int>(std::ceil(n_percent / 100.0 * ref_emb.rows));
    cutoff = std::max(cutoff, 1);
    int hits = 0;
    std::vector<std::pair<double, int>> ranked(static_cast<size_t>(ref_emb.rows));
    for (int qi = 0; qi < query_emb.rows; ++qi) {
        auto q = project_to_ball({query_emb.row(qi), query_emb.row(qi) + query_emb.cols});
        for (int r = 0; r < ref_emb.rows; ++r)
            ranked[static_cast<size_t>(r)] = {hyperbolic_distance(q, refs[static_cast<size_t>(r)]), r};
        std::sort(ranked.begin(), ranked.end());
        for (int pos = 0; pos < cutoff && pos < ref_emb.rows; ++pos) {
            int r = ranked[static_cast<size_t>(pos)].second;
            if (std::find(truth[static_cast<size_t>(qi)].begin(), truth[static_cast<size_t>(qi)].end(), r) !=
                truth[static_cast<size_t>(qi)].end()) {
                ++hits;
                break;
            }
        }
    }
    return 100.0 * hits / query_emb.rows;
}

}  // namespace kge
