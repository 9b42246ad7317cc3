// Build a heterogeneous k-mer graph from a tiny corpus and print its structure.

#include <cstdio>

#include "kge/kge.hpp"

int main() {
    using namespace kge;

    Corpus corpus = parse_fasta(">a\nACTGACT\n>b\nACTGACA\n>c\nTGACTGC\n");

    GraphConfig cfg;
    cfg.k = 3;
    cfg.kf_sub_ks = {2};
    cfg.threshold = 0.5;

    MetagenomicGraph graph = assemble_graph(corpus, cfg);

    std::printf("nodes (%d):\n", graph.n_nodes());
    for (int i = 0; i < graph.n_nodes(); ++i)
        std::printf("  %2d %s\n", i, graph.vocab.kmer_of[static_cast<size_t>(i)].c_str());

    std::printf("dBG transitions (%zu):\n", graph.dbg.size());
    for (const auto& e : graph.dbg.edges)
        std::printf("  %s -> %s  w=%.4f\n", graph.vocab.kmer_of[static_cast<size_t>(e.i)].c_str(),
                    graph.vocab.kmer_of[static_cast<size_t>(e.j)].c_str(), e.w);

    const EdgeSet& kf = graph.kf_for(2);
    std::printf("KF_2 similarity edges at t=%.2f (%zu):\n", kf.threshold, kf.size());
    for (const auto& e : kf.edges)
        std::printf("  %s -- %s  cos=%.4f\n", graph.vocab.kmer_of[static_cast<size_t>(e.i)].c_str(),
                    graph.vocab.kmer_of[static_cast<size_t>(e.j)].c_str(), e.w);
    return 0;
}
