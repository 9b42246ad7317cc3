// Train a hyperbolic distance head over one-hot k-mer embeddings and report %RMSE.

#include <cstdio>

#include "kge/kge.hpp"

int main() {
    using namespace kge;

    SynthConfig synth;
    synth.n_refs = 12;
    synth.length = 40;
    synth.n_mutants_per_ref = 1;
    synth.sub_rate = 0.08;
    synth.indel_rate = 0.02;
    synth.seed = 3;
    Corpus corpus = synth_generate(synth);

    KmerVocab vocab = build_vocab(corpus, 3);
    DenseMatrix emb = one_hot_embedding(vocab.size());
    DenseMatrix seq_emb = embed_corpus(corpus, vocab, emb, Aggregation::Mean);

    auto train = build_pair_dataset(corpus, 400, 11);
    auto val = build_pair_dataset(corpus, 100, 12);
    auto test = build_pair_dataset(corpus, 100, 13);

    HeadConfig hcfg;
    hcfg.head_dim = 8;
    hcfg.epochs = 120;
    hcfg.seed = 5;
    HeadTrainResult head = train_distance_head(seq_emb, train, val, hcfg);

    std::printf("train/val MSE by epoch:\n");
    for (size_t e = 0; e < head.history.size(); e += 30)
        std::printf("  epoch %3zu  train %.5f  val %.5f\n", e, head.history[e].first,
                    head.history[e].second);
    std::printf("test %%RMSE: %.3f\n",
                percent_rmse(head.head, test, seq_emb, test.max_length));
    return 0;
}
