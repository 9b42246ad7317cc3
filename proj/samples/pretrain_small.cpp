// Pretrain contrastive embeddings on a synthetic corpus and watch the loss drop.

#include <cstdio>

#include "kge/kge.hpp"

int main() {
    using namespace kge;

    SynthConfig synth;
    synth.n_refs = 4;
    synth.length = 60;
    synth.n_mutants_per_ref = 2;
    synth.sub_rate = 0.05;
    synth.seed = 7;
    Corpus corpus = synth_generate(synth);

    GraphConfig gcfg;
    gcfg.k = 4;
    gcfg.kf_sub_ks = {2};
    gcfg.threshold = 0.4;
    MetagenomicGraph graph = assemble_graph(corpus, gcfg);

    EncoderConfig enc;
    enc.feature_sub_ks = {1, 2};
    enc.layers = {
        {EdgeKind::Dbg, 0, feature_dim({1, 2}), 32, Activation::Relu},
        {EdgeKind::Kf, 2, 32, 16, Activation::Identity},
    };

    TrainConfig tcfg;
    tcfg.epochs = 20;
    tcfg.batch_pairs = 256;
    tcfg.adam.lr = 5e-3;
    tcfg.walk.walk_length = 10;
    tcfg.walk.walks_per_node = 4;
    tcfg.walk.window = 3;
    tcfg.seed = 7;

    TrainResult result = train_contrastive(graph, enc, tcfg);
    for (const auto& rec : result.history)
        if (rec.epoch % 5 == 0 || rec.epoch + 1 == tcfg.epochs)
            std::printf("epoch %3d  %s loss %.5f\n", rec.epoch, rec.split.c_str(), rec.value);
    std::printf("embeddings: %d x %d\n", result.embeddings.rows, result.embeddings.cols);
    return 0;
}
