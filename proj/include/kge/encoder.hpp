#pragma once

// Heterogeneous GCN over the metagenomic graph: each layer propagates along
// one edge type's normalized adjacency, full-graph or sampled-block.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "kge/graph.hpp"
#include "kge/tensor.hpp"

namespace kge {

enum class Activation { Relu, Identity };

struct LayerSpec {
    EdgeKind edge = EdgeKind::Dbg;
    int sub_k = 0;  // KF layers only
    int in_channels = 0;
    int out_channels = 0;
    Activation activation = Activation::Relu;
};

struct EncoderConfig {
    std::vector<LayerSpec> layers;
    std::vector<int> feature_sub_ks = {1, 2};

    int embedding_dim() const {
        if (layers.empty()) throw validation_error("encoder needs at least one layer");
        return layers.back().out_channels;
    }
};

inline int feature_dim(const std::vector<int>& sub_ks) {
    int d = 0;
    for (int s : sub_ks) d += 1 << (2 * s);
    return d;
}

inline void validate_encoder_config(const EncoderConfig& cfg) {
    if (cfg.layers.empty()) throw validation_error("encoder needs at least one layer");
    if (cfg.feature_sub_ks.empty()) throw validation_error("encoder needs feature sub_ks");
    if (cfg.layers.front().in_channels != feature_dim(cfg.feature_sub_ks))
        throw validation_error("first layer in_channels must equal the feature dimension");
    for (size_t l = 0; l < cfg.layers.size(); ++l) {
        const auto& s = cfg.layers[l];
        if (s.in_channels < 1 || s.out_channels < 1)
            throw validation_error("layer channels must be positive");
        if (l > 0 && s.in_channels != cfg.layers[l - 1].out_channels)
            throw validation_error("layer channel chain is inconsistent");
        if (s.edge == EdgeKind::Kf && s.sub_k < 1)
            throw validation_error("KF layer needs sub_k >= 1");
    }
}

inline EncoderConfig default_encoder_config() {
    EncoderConfig cfg;
    cfg.feature_sub_ks = {1, 2};
    cfg.layers = {
        {EdgeKind::Dbg, 0, 20, 128, Activation::Relu},
        {EdgeKind::Dbg, 0, 128, 128, Activation::Relu},
        {EdgeKind::Kf, 2, 128, 64, Activation::Identity},
    };
    return cfg;
}

struct EncoderParams {
    std::vector<DenseMatrix> weights;  // one Θ per layer, in x out
};

inline EncoderParams init_encoder_params(const EncoderConfig& cfg, uint64_t seed) {
    validate_encoder_config(cfg);
    EncoderParams p;
    for (size_t l = 0; l < cfg.layers.size(); ++l)
        p.weights.push_back(glorot_uniform(cfg.layers[l].in_channels, cfg.layers[l].out_channels,
                                           derive_seed(seed, 0x656e63, static_cast<uint64_t>(l))));
    return p;
}

// H^(0): per-node concatenation of L2-normalized sub-k-mer frequency blocks
inline DenseMatrix init_features(const MetagenomicGraph& graph, const std::vector<int>& sub_ks) {
    if (sub_ks.empty()) throw validation_error("feature sub_k list is empty");
    int n = graph.n_nodes();
    DenseMatrix h(n, feature_dim(sub_ks));
    int offset = 0;
    for (int s : sub_ks) {
        const auto& f = graph.features_for(s);
        for (int i = 0; i < n; ++i) {
            const uint32_t* src = f.row(i);
            double norm = 0;
            for (int d = 0; d < f.dim; ++d) norm += static_cast<double>(src[d]) * src[d];
            norm = std::sqrt(norm);
            double inv = norm > 0 ? 1.0 / norm : 0.0;
            double* dst = h.row(i) + offset;
            for (int d = 0; d < f.dim; ++d) dst[d] = src[d] * inv;
        }
        offset += f.dim;
    }
    return h;
}

// Normalized propagation operator for one layer's edge type. dBG edges are
// symmetrized as (W + Wᵀ)/2 first; KF edges are symmetric already.
inline SparseAdjacency prepare_propagation(const MetagenomicGraph& graph, const LayerSpec& layer,
                                           double self_loop_weight = 1.0) {
    int n = graph.n_nodes();
    std::map<std::pair<int, int>, double> acc;
    if (layer.edge == EdgeKind::Dbg) {
        for (const auto& e : graph.dbg.edges) {
            acc[{e.i, e.j}] += e.w / 2.0;
            acc[{e.j, e.i}] += e.w / 2.0;
        }
    } else {
        for (const auto& e : graph.kf_for(layer.sub_k).directed_view()) acc[{e.i, e.j}] += e.w;
    }
    std::vector<std::tuple<int, int, double>> triplets;
    triplets.reserve(acc.size());
    for (const auto& [key, w] : acc) triplets.push_back({key.first, key.second, w});
    return sym_normalize(SparseAdjacency::from_triplets(n, n, std::move(triplets)), self_loop_weight);
}

inline std::vector<SparseAdjacency> layer_adjacencies(const MetagenomicGraph& graph,
                                                      const EncoderConfig& cfg) {
    std::vector<SparseAdjacency> adjs;
    adjs.reserve(cfg.layers.size());
    for (const auto& layer : cfg.layers) adjs.push_back(prepare_propagation(graph, layer));
    return adjs;
}

// One sampled propagation step: rows = output nodes, cols = input nodes.
struct SampledBlock {
    std::vector<int> input_nodes;   // global ids
    std::vector<int> output_nodes;  // global ids, prefix of input_nodes
    SparseAdjacency adj;
};

inline int forward_tape(Tape& tape, int h0, const std::vector<const SparseAdjacency*>& adjs,
                        const std::vector<int>& weight_nodes, const EncoderConfig& cfg) {
    validate_encoder_config(cfg);
    if (adjs.size() != cfg.layers.size() || weight_nodes.size() != cfg.layers.size())
        throw validation_error("adjacency/weight count must match encoder depth");
    int h = h0;
    for (size_t l = 0; l < cfg.layers.size(); ++l) {
        const auto& w = tape.value(weight_nodes[l]);
        if (w.rows != cfg.layers[l].in_channels || w.cols != cfg.layers[l].out_channels)
            throw validation_error("layer weight shape mismatch");
        h = tape.matmul(tape.spmm(adjs[l], h), weight_nodes[l]);
        if (cfg.layers[l].activation == Activation::Relu) h = tape.relu(h);
    }
    return h;
}

inline DenseMatrix encoder_forward(const MetagenomicGraph& graph, const EncoderConfig& cfg,
                                   const EncoderParams& params) {
    auto adjs = layer_adjacencies(graph, cfg);
    std::vector<const SparseAdjacency*> ptrs;
    for (const auto& a : adjs) ptrs.push_back(&a);
    Tape tape;
    int h0 = tape.input(init_features(graph, cfg.feature_sub_ks));
    std::vector<int> wnodes;
    for (const auto& w : params.weights) wnodes.push_back(tape.input(w));
    return tape.value(forward_tape(tape, h0, ptrs, wnodes, cfg));
}

// Same semantics as forward restricted to sampled receptive fields. features
// must cover the full graph; rows are gathered per blocks[0].input_nodes.
inline int forward_blocks_tape(Tape& tape, const DenseMatrix& features,
                               const std::vector<SampledBlock>& blocks,
                               const std::vector<int>& weight_nodes, const EncoderConfig& cfg) {
    validate_encoder_config(cfg);
    if (blocks.size() != cfg.layers.size())
        throw validation_error("block count must match encoder depth");
    DenseMatrix h0(static_cast<int>(blocks.front().input_nodes.size()), features.cols);
    for (size_t r = 0; r < blocks.front().input_nodes.size(); ++r) {
        int node = blocks.front().input_nodes[r];
        if (node < 0 || node >= features.rows) throw validation_error("block node out of range");
        std::copy_n(features.row(node), features.cols, h0.row(static_cast<int>(r)));
    }
    int h = tape.input(std::move(h0));
    for (size_t l = 0; l < cfg.layers.size(); ++l) {
        const auto& w = tape.value(weight_nodes[l]);
        if (w.rows != cfg.layers[l].in_channels || w.cols != cfg.layers[l].out_channels)
            throw validation_error("layer weight shape mismatch");
        h = tape.matmul(tape.spmm(&blocks[l].adj, h), weight_nodes[l]);
        if (cfg.layers[l].activation == Activation::Relu) h = tape.relu(h);
    }
    return h;
}

inline DenseMatrix forward_blocks(const DenseMatrix& features,
                                  const std::vector<SampledBlock>& blocks,
                                  const EncoderConfig& cfg, const EncoderParams& params) {
    Tape tape;
    std::vector<int> wnodes;
    for (const auto& w : params.weights) wnodes.push_back(tape.input(w));
    return tape.value(forward_blocks_tape(tape, features, blocks, wnodes, cfg));
}

}  // namespace kge
