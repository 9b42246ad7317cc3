#pragma once

// Pre-training loops: contrastive over sampled pairs with mini-batched
// neighborhood blocks, full-batch graph autoencoder, and embedding-table
// baselines sharing the contrastive objective.

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kge/encoder.hpp"
#include "kge/graph.hpp"
#include "kge/sampling.hpp"
#include "kge/tensor.hpp"

namespace kge {

enum class SamplerMix { ContextOnly, StructuralOnly, Both };
enum class BaselineVariant { Word2Vec, Node2Vec };

struct TrainConfig {
    int epochs = 200;
    int batch_pairs = 1024;
    AdamConfig adam;
    uint64_t seed = 0;
    SamplerMix mix = SamplerMix::Both;
    WalkConfig walk;
    int negatives_per_anchor = 5;
    std::vector<int> fanouts;      // empty → all neighbors at every layer
    int pairs_per_epoch_cap = 0;   // 0 → keep every sampled pair
};

struct LossRecord {
    int epoch;
    std::string split;
    double value;
};

struct TrainResult {
    EncoderParams params;
    DenseMatrix embeddings;
    std::vector<LossRecord> history;
};

inline void validate_train_config(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw validation_error("epochs must be >= 1");
    if (cfg.batch_pairs < 1) throw validation_error("batch_pairs must be >= 1");
    if (cfg.negatives_per_anchor < 0) throw validation_error("negatives_per_anchor must be >= 0");
    if (cfg.pairs_per_epoch_cap < 0) throw validation_error("pairs_per_epoch_cap must be >= 0");
    validate_walk_config(cfg.walk);
}

inline double contrastive_loss(const DenseMatrix& z, std::vector<std::pair<int, int>> pos,
                               std::vector<std::vector<int>> negs) {
    Tape tape;
    int zn = tape.input(z);
    return tape.value(tape.contrastive(zn, std::move(pos), std::move(negs))).data[0];
}

namespace detail {

// Merge every KF sub-type into one weighted edge list; sampling from the merge
// draws each sub-type proportionally to its total weight mass.
inline EdgeSet merged_kf(const MetagenomicGraph& graph) {
    EdgeSet merged;
    merged.kind = EdgeKind::Kf;
    for (const auto& set : graph.kf)
        merged.edges.insert(merged.edges.end(), set.edges.begin(), set.edges.end());
    return merged;
}

inline std::vector<std::pair<int, int>> positive_pairs_for_epoch(const MetagenomicGraph& graph,
                                                                 const EdgeSet& kf_merged,
                                                                 const TrainConfig& cfg,
                                                                 uint64_t epoch_seed) {
    auto walks = biased_random_walks(graph.dbg, graph.n_nodes(), cfg.walk, epoch_seed);
    auto ctx = walk_window_pairs(walks, cfg.walk.window, derive_seed(epoch_seed, 0x637478));

    std::vector<std::pair<int, int>> pos;
    if (cfg.mix != SamplerMix::StructuralOnly)
        pos.insert(pos.end(), ctx.pairs.begin(), ctx.pairs.end());
    if (cfg.mix != SamplerMix::ContextOnly) {
        auto st = structural_pairs(kf_merged, static_cast<int>(ctx.pairs.size()),
                                   derive_seed(epoch_seed, 0x737470));
        pos.insert(pos.end(), st.pairs.begin(), st.pairs.end());
    }

    std::mt19937_64 rng(derive_seed(epoch_seed, 0x736866));
    for (size_t t = pos.size(); t > 1; --t)
        std::swap(pos[t - 1], pos[static_cast<size_t>(rng() % t)]);
    if (cfg.pairs_per_epoch_cap > 0 && pos.size() > static_cast<size_t>(cfg.pairs_per_epoch_cap))
        pos.resize(static_cast<size_t>(cfg.pairs_per_epoch_cap));
    return pos;
}

struct LocalBatch {
    std::vector<int> seeds;                         // unique global ids
    std::vector<std::pair<int, int>> pos;           // local ids
    std::vector<std::vector<int>> negs;             // local ids
};

inline LocalBatch localize_batch(const std::vector<std::pair<int, int>>& pos_global,
                                 size_t begin, size_t end, int n_nodes, int negs_per_anchor,
                                 std::mt19937_64& rng) {
    LocalBatch batch;
    std::unordered_map<int, int> local;
    auto local_id = [&](int global) {
        auto [it, inserted] = local.try_emplace(global, static_cast<int>(batch.seeds.size()));
        if (inserted) batch.seeds.push_back(global);
        return it->second;
    };
    for (size_t t = begin; t < end; ++t) {
        auto [i, j] = pos_global[t];
        batch.pos.push_back({local_id(i), local_id(j)});
        std::vector<int> negs;
        for (int u = 0; u < negs_per_anchor; ++u) {
            int l = static_cast<int>(rng() % static_cast<uint64_t>(n_nodes - 1));
            if (l >= i) ++l;
            negs.push_back(local_id(l));
        }
        batch.negs.push_back(std::move(negs));
    }
    return batch;
}

}  // namespace detail

inline TrainResult train_contrastive(const MetagenomicGraph& graph, const EncoderConfig& enc_cfg,
                                     const TrainConfig& cfg) {
    validate_train_config(cfg);
    validate_encoder_config(enc_cfg);
    if (graph.dbg.edges.empty()) throw validation_error("graph has no dBG edges");
    auto kf_merged = detail::merged_kf(graph);
    if (cfg.mix != SamplerMix::ContextOnly && kf_merged.edges.empty())
        throw validation_error("sampler mix needs KF edges but the graph has none");

    auto adjs = layer_adjacencies(graph, enc_cfg);
    auto features = init_features(graph, enc_cfg.feature_sub_ks);
    auto params = init_encoder_params(enc_cfg, cfg.seed);
    std::vector<int> fanouts = cfg.fanouts;
    if (fanouts.empty()) fanouts.assign(enc_cfg.layers.size(), kFanoutAll);
    if (fanouts.size() != enc_cfg.layers.size())
        throw validation_error("fanout list length must match encoder depth");

    AdamState opt;
    std::vector<std::string> names;
    for (size_t l = 0; l < params.weights.size(); ++l) names.push_back("theta" + std::to_string(l));

    TrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        uint64_t epoch_seed = derive_seed(cfg.seed, 0x65706f, static_cast<uint64_t>(epoch));
        auto pos = detail::positive_pairs_for_epoch(graph, kf_merged, cfg, epoch_seed);
        std::mt19937_64 neg_rng(derive_seed(epoch_seed, 0x6e6567));

        double epoch_loss = 0;
        int n_batches = 0;
        for (size_t begin = 0; begin < pos.size(); begin += static_cast<size_t>(cfg.batch_pairs)) {
            size_t end = std::min(pos.size(), begin + static_cast<size_t>(cfg.batch_pairs));
            auto batch = detail::localize_batch(pos, begin, end, graph.n_nodes(),
                                                cfg.negatives_per_anchor, neg_rng);
            auto blocks = neighborhood_sample(adjs, batch.seeds, fanouts,
                                              derive_seed(epoch_seed, 0x626c6b, begin));

            Tape tape;
            std::vector<int> wnodes;
            std::vector<DenseMatrix*> wptr;
            for (auto& w : params.weights) {
                wnodes.push_back(tape.param(w));
                wptr.push_back(&w);
            }
            int z = forward_blocks_tape(tape, features, blocks, wnodes, enc_cfg);
            int loss = tape.contrastive(z, batch.pos, batch.negs);
            double value = tape.value(loss).data[0];
            if (!std::isfinite(value)) throw numeric_error("contrastive loss diverged");
            tape.backward(loss);

            std::vector<const DenseMatrix*> grads;
            for (int w : wnodes) grads.push_back(&tape.grad(w));
            adam_step(wptr, grads, opt, cfg.adam, names);
            epoch_loss += value;
            ++n_batches;
        }
        result.history.push_back({epoch, "train", n_batches > 0 ? epoch_loss / n_batches : 0.0});
    }

    result.params = std::move(params);
    result.embeddings = encoder_forward(graph, enc_cfg, result.params);
    return result;
}

// ---- graph autoencoder ----

struct GaeDecoders {
    std::vector<int> sub_ks;
    std::vector<DenseMatrix> thetas;  // d x 4^sub_k
    std::vector<DenseMatrix> biases;  // 1 x 4^sub_k
};

inline GaeDecoders init_gae_decoders(const std::vector<int>& sub_ks, int d, uint64_t seed) {
    GaeDecoders dec;
    dec.sub_ks = sub_ks;
    for (size_t t = 0; t < sub_ks.size(); ++t) {
        int dim = 1 << (2 * sub_ks[t]);
        dec.thetas.push_back(glorot_uniform(d, dim, derive_seed(seed, 0x646563, t)));
        dec.biases.push_back(DenseMatrix(1, dim));
    }
    return dec;
}

inline std::vector<double> gae_edge_decode(const DenseMatrix& z, const std::vector<Edge>& edges) {
    std::vector<double> out;
    out.reserve(edges.size());
    for (const auto& e : edges) {
        if (e.i < 0 || e.i >= z.rows || e.j < 0 || e.j >= z.rows)
            throw validation_error("edge id out of range");
        double s = 0;
        for (int d = 0; d < z.cols; ++d) s += z.at(e.i, d) * z.at(e.j, d);
        out.push_back(s);
    }
    return out;
}

inline std::vector<DenseMatrix> gae_node_decode(const DenseMatrix& z, const GaeDecoders& dec) {
    std::vector<DenseMatrix> out;
    for (size_t t = 0; t < dec.sub_ks.size(); ++t) {
        if (dec.thetas[t].rows != z.cols) throw validation_error("decoder shape mismatch");
        DenseMatrix y = matmul(z, dec.thetas[t]);
        for (int i = 0; i < y.rows; ++i)
            for (int j = 0; j < y.cols; ++j) y.at(i, j) += dec.biases[t].at(0, j);
        out.push_back(std::move(y));
    }
    return out;
}

namespace detail {

inline DenseMatrix raw_feature_targets(const MetagenomicGraph& graph, int sub_k) {
    const auto& f = graph.features_for(sub_k);
    DenseMatrix y(f.n_rows, f.dim);
    for (int i = 0; i < f.n_rows; ++i)
        for (int d = 0; d < f.dim; ++d) y.at(i, d) = static_cast<double>(f.row(i)[d]);
    return y;
}

// edge L1 + (1/|K|) Σ node MSE, on an existing tape
inline int gae_loss_tape(Tape& tape, int z, const MetagenomicGraph& graph,
                         const std::vector<int>& theta_nodes, const std::vector<int>& bias_nodes,
                         const std::vector<int>& sub_ks) {
    std::vector<EdgeTarget> targets;
    for (const auto& e : graph.dbg.edges) targets.push_back({e.i, e.j, e.w});
    int loss = tape.gae_edge_l1(z, std::move(targets));
    if (!sub_ks.empty()) {
        int node_sum = -1;
        for (size_t t = 0; t < sub_ks.size(); ++t) {
            int pred = tape.add_row_bias(tape.matmul(z, theta_nodes[t]), bias_nodes[t]);
            int term = tape.mse_sum(pred, raw_feature_targets(graph, sub_ks[t]));
            node_sum = node_sum < 0 ? term : tape.add(node_sum, term);
        }
        loss = tape.add(loss, tape.scale(node_sum, 1.0 / static_cast<double>(sub_ks.size())));
    }
    return loss;
}

}  // namespace detail

inline double gae_loss(const DenseMatrix& z, const MetagenomicGraph& graph,
                       const GaeDecoders& dec) {
    Tape tape;
    int zn = tape.input(z);
    std::vector<int> thetas, biases;
    for (size_t t = 0; t < dec.sub_ks.size(); ++t) {
        thetas.push_back(tape.input(dec.thetas[t]));
        biases.push_back(tape.input(dec.biases[t]));
    }
    return tape.value(detail::gae_loss_tape(tape, zn, graph, thetas, biases, dec.sub_ks)).data[0];
}

struct GaeTrainResult {
    EncoderParams params;
    GaeDecoders decoders;
    DenseMatrix embeddings;
    std::vector<LossRecord> history;
};

inline GaeTrainResult train_gae(const MetagenomicGraph& graph, const EncoderConfig& enc_cfg,
                                const TrainConfig& cfg) {
    validate_train_config(cfg);
    validate_encoder_config(enc_cfg);
    if (graph.dbg.edges.empty()) throw validation_error("graph has no dBG edges");

    auto adjs = layer_adjacencies(graph, enc_cfg);
    std::vector<const SparseAdjacency*> ptrs;
    for (const auto& a : adjs) ptrs.push_back(&a);
    auto features = init_features(graph, enc_cfg.feature_sub_ks);
    auto params = init_encoder_params(enc_cfg, cfg.seed);
    auto dec = init_gae_decoders(enc_cfg.feature_sub_ks, enc_cfg.embedding_dim(),
                                 derive_seed(cfg.seed, 0x676165));

    AdamState opt;
    std::vector<std::string> names;
    GaeTrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Tape tape;
        std::vector<DenseMatrix*> wptr;
        std::vector<int> wnodes, thetas, biases;
        for (size_t l = 0; l < params.weights.size(); ++l) {
            wnodes.push_back(tape.param(params.weights[l]));
            wptr.push_back(&params.weights[l]);
            if (epoch == 0) names.push_back("theta" + std::to_string(l));
        }
        for (size_t t = 0; t < dec.sub_ks.size(); ++t) {
            thetas.push_back(tape.param(dec.thetas[t]));
            biases.push_back(tape.param(dec.biases[t]));
            wptr.push_back(&dec.thetas[t]);
            wptr.push_back(&dec.biases[t]);
            if (epoch == 0) {
                names.push_back("decoder_theta" + std::to_string(dec.sub_ks[t]));
                names.push_back("decoder_bias" + std::to_string(dec.sub_ks[t]));
            }
        }
        int h0 = tape.input(features);
        int z = forward_tape(tape, h0, ptrs, wnodes, enc_cfg);
        int loss = detail::gae_loss_tape(tape, z, graph, thetas, biases, dec.sub_ks);
        double value = tape.value(loss).data[0];
        if (!std::isfinite(value)) throw numeric_error("gae loss diverged");
        tape.backward(loss);

        std::vector<const DenseMatrix*> grads;
        for (int w : wnodes) grads.push_back(&tape.grad(w));
        for (size_t t = 0; t < thetas.size(); ++t) {
            grads.push_back(&tape.grad(thetas[t]));
            grads.push_back(&tape.grad(biases[t]));
        }
        adam_step(wptr, grads, opt, cfg.adam, names);
        result.history.push_back({epoch, "train", value});
    }

    result.params = std::move(params);
    result.decoders = std::move(dec);
    result.embeddings = encoder_forward(graph, enc_cfg, result.params);
    return result;
}

// ---- embedding-table baselines ----

struct BaselineResult {
    DenseMatrix table;  // N x d
    std::vector<LossRecord> history;
};

inline BaselineResult train_baseline(const Corpus& corpus, const MetagenomicGraph& graph,
                                     BaselineVariant variant, int d, const TrainConfig& cfg) {
    validate_train_config(cfg);
    if (d < 1) throw validation_error("embedding dim must be >= 1");
    int n = graph.n_nodes();
    if (n < 2) throw validation_error("baseline needs at least two k-mers");

    BaselineResult result;
    result.table = glorot_uniform(n, d, derive_seed(cfg.seed, 0x74626c));
    AdamState opt;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        uint64_t epoch_seed = derive_seed(cfg.seed, 0x65706f, static_cast<uint64_t>(epoch));
        std::vector<std::pair<int, int>> pos;
        if (variant == BaselineVariant::Word2Vec) {
            pos = sequence_window_pairs(corpus, graph.vocab, cfg.walk.window, epoch_seed).pairs;
        } else {
            auto walks = biased_random_walks(graph.dbg, n, cfg.walk, epoch_seed);
            pos = walk_window_pairs(walks, cfg.walk.window, derive_seed(epoch_seed, 0x637478)).pairs;
        }
        std::mt19937_64 rng(derive_seed(epoch_seed, 0x736866));
        for (size_t t = pos.size(); t > 1; --t)
            std::swap(pos[t - 1], pos[static_cast<size_t>(rng() % t)]);
        if (cfg.pairs_per_epoch_cap > 0 && pos.size() > static_cast<size_t>(cfg.pairs_per_epoch_cap))
            pos.resize(static_cast<size_t>(cfg.pairs_per_epoch_cap));

        std::mt19937_64 neg_rng(derive_seed(epoch_seed, 0x6e6567));
        double epoch_loss = 0;
        int n_batches = 0;
        for (size_t begin = 0; begin < pos.size(); begin += static_cast<size_t>(cfg.batch_pairs)) {
            size_t end = std::min(pos.size(), begin + static_cast<size_t>(cfg.batch_pairs));
            std::vector<std::pair<int, int>> batch(pos.begin() + static_cast<long>(begin),
                                                   pos.begin() + static_cast<long>(end));
            std::vector<std::vector<int>> negs;
            for (const auto& [i, j] : batch) {
                std::vector<int> row;
                for (int u = 0; u < cfg.negatives_per_anchor; ++u) {
                    int l = static_cast<int>(neg_rng() % static_cast<uint64_t>(n - 1));
                    if (l >= i) ++l;
                    row.push_back(l);
                }
                negs.push_back(std::move(row));
            }

            Tape tape;
            int table = tape.param(result.table);
            int loss = tape.contrastive(table, std::move(batch), std::move(negs));
            double value = tape.value(loss).data[0];
            if (!std::isfinite(value)) throw numeric_error("baseline loss diverged");
            tape.backward(loss);
            adam_step({&result.table}, {&tape.grad(table)}, opt, cfg.adam, {"table"});
            epoch_loss += value;
            ++n_batches;
        }
        result.history.push_back({epoch, "train", n_batches > 0 ? epoch_loss / n_batches : 0.0});
    }
    return result;
}

}  // namespace kge
