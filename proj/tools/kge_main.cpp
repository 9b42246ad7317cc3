// kge: build k-mer graphs, pretrain embeddings, and evaluate sequence tasks.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kge/kge.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kge;

namespace {

// ---- config document ----

json default_config() {
    return json{
        {"seed", 0},
        {"threads", 1},
        {"graph",
         {{"k", 3},
          {"kf_sub_ks", {2}},
          {"feature_sub_ks", {1, 2}},
          {"mode", "exact"},
          {"threshold", 0.5},
          {"n_neighbors", 10},
          {"ann", {{"nlist", 0}, {"nprobe", 0}, {"kmeans_iters", 10}}}}},
        {"encoder",
         {{"type", "gcn"},
          {"variant", "node2vec"},
          {"dim", 64},
          {"feature_sub_ks", {1, 2}},
          {"layers",
           json::array({json{{"edge", "dbg"}, {"in", 20}, {"out", 128}, {"activation", "relu"}},
                        json{{"edge", "dbg"}, {"in", 128}, {"out", 128}, {"activation", "relu"}},
                        json{{"edge", "kf"},
                             {"sub_k", 2},
                             {"in", 128},
                             {"out", 64},
                             {"activation", "identity"}}})}}},
        {"train",
         {{"objective", "cl"},
          {"epochs", 200},
          {"batch_pairs", 1024},
          {"lr", 1e-3},
          {"mix", "both"},
          {"negatives_per_anchor", 5},
          {"pairs_per_epoch_cap", 0},
          {"fanouts", json::array()},
          {"walk",
           {{"p", 1.0}, {"q", 1.0}, {"length", 20}, {"walks_per_node", 10}, {"window", 5}}}}},
        {"eval",
         {{"aggregation", "mean"},
          {"top_n_percent", 10.0},
          {"train_pairs", 2000},
          {"val_pairs", 500},
          {"test_pairs", 500},
          {"rmse_paper_literal", false},
          {"allow_large_onehot", false},
          {"head", {{"dim", 16}, {"epochs", 200}, {"lr", 1e-2}}}}},
        {"synth",
         {{"n_refs", 1},
          {"length", 100},
          {"n_mutants_per_ref", 0},
          {"sub_rate", 0.0},
          {"indel_rate", 0.0}}},
    };
}

// every user key must exist in the defaults at the same path; objects merge, leaves replace.
void merge_validated(json& base, const json& user, const std::string& path) {
    if (!user.is_object())
        throw validation_error("config " + (path.empty() ? std::string("document") : path) +
                               " must be a JSON object");
    for (auto it = user.begin(); it != user.end(); ++it) {
        std::string key_path = path.empty() ? it.key() : path + "." + it.key();
        if (!base.contains(it.key())) throw validation_error("unknown config key: " + key_path);
        json& slot = base[it.key()];
        if (slot.is_object() && it->is_object()) {
            merge_validated(slot, *it, key_path);
        } else if (slot.is_object() || it->is_object()) {
            throw validation_error("config key has the wrong shape: " + key_path);
        } else {
            slot = *it;
        }
    }
}

json load_config(const std::string& config_path) {
    json cfg = default_config();
    if (config_path.empty()) return cfg;
    std::ifstream in(config_path);
    if (!in) throw data_error("cannot open config file " + config_path);
    json user;
    try {
        in >> user;
    } catch (const json::exception& e) {
        throw validation_error("config file is not valid JSON: " + std::string(e.what()));
    }
    merge_validated(cfg, user, "");
    return cfg;
}

std::string config_fingerprint(const json& cfg) { return hex64(fnv1a(cfg.dump())); }

// ---- typed views over the document ----

GraphConfig graph_config_from(const json& cfg) {
    const json& g = cfg.at("graph");
    GraphConfig out;
    out.k = g.at("k").get<int>();
    out.kf_sub_ks = g.at("kf_sub_ks").get<std::vector<int>>();
    out.feature_sub_ks = g.at("feature_sub_ks").get<std::vector<int>>();
    std::string mode = g.at("mode").get<std::string>();
    if (mode == "exact")
        out.mode = KfMode::Exact;
    else if (mode == "ann")
        out.mode = KfMode::Ann;
    else
        throw validation_error("graph.mode must be 'exact' or 'ann'");
    out.threshold = g.at("threshold").get<double>();
    out.n_neighbors = g.at("n_neighbors").get<int>();
    out.ann.nlist = g.at("ann").at("nlist").get<int>();
    out.ann.nprobe = g.at("ann").at("nprobe").get<int>();
    out.ann.kmeans_iters = g.at("ann").at("kmeans_iters").get<int>();
    out.ann.seed = derive_seed(cfg.at("seed").get<uint64_t>(), 0x616e6e);
    return out;
}

EncoderConfig encoder_config_from(const json& cfg) {
    const json& e = cfg.at("encoder");
    EncoderConfig out;
    out.feature_sub_ks = e.at("feature_sub_ks").get<std::vector<int>>();
    out.layers.clear();
    for (const auto& l : e.at("layers")) {
        for (auto it = l.begin(); it != l.end(); ++it) {
            const std::string& key = it.key();
            if (key != "edge" && key != "sub_k" && key != "in" && key != "out" &&
                key != "activation")
                throw validation_error("unknown encoder layer key: " + key);
        }
        LayerSpec spec;
        std::string edge = l.at("edge").get<std::string>();
        if (edge == "dbg")
            spec.edge = EdgeKind::Dbg;
        else if (edge == "kf")
            spec.edge = EdgeKind::Kf;
        else
            throw validation_error("encoder layer edge must be 'dbg' or 'kf'");
        spec.sub_k = l.value("sub_k", 0);
        spec.in_channels = l.at("in").get<int>();
        spec.out_channels = l.at("out").get<int>();
        std::string act = l.value("activation", "relu");
        if (act == "relu")
            spec.activation = Activation::Relu;
        else if (act == "identity")
            spec.activation = Activation::Identity;
        else
            throw validation_error("encoder layer activation must be 'relu' or 'identity'");
        out.layers.push_back(spec);
    }
    return out;
}

TrainConfig train_config_from(const json& cfg) {
    const json& t = cfg.at("train");
    TrainConfig out;
    out.epochs = t.at("epochs").get<int>();
    out.batch_pairs = t.at("batch_pairs").get<int>();
    out.adam.lr = t.at("lr").get<double>();
    out.seed = cfg.at("seed").get<uint64_t>();
    std::string mix = t.at("mix").get<std::string>();
    if (mix == "context")
        out.mix = SamplerMix::ContextOnly;
    else if (mix == "structural")
        out.mix = SamplerMix::StructuralOnly;
    else if (mix == "both")
        out.mix = SamplerMix::Both;
    else
        throw validation_error("train.mix must be 'context', 'structural', or 'both'");
    out.negatives_per_anchor = t.at("negatives_per_anchor").get<int>();
    out.pairs_per_epoch_cap = t.at("pairs_per_epoch_cap").get<int>();
    out.fanouts = t.at("fanouts").get<std::vector<int>>();
    const json& w = t.at("walk");
    out.walk.p = w.at("p").get<double>();
    out.walk.q = w.at("q").get<double>();
    out.walk.walk_length = w.at("length").get<int>();
    out.walk.walks_per_node = w.at("walks_per_node").get<int>();
    out.walk.window = w.at("window").get<int>();
    return out;
}

HeadConfig head_config_from(const json& cfg) {
    const json& h = cfg.at("eval").at("head");
    HeadConfig out;
    out.head_dim = h.at("dim").get<int>();
    out.epochs = h.at("epochs").get<int>();
    out.adam.lr = h.at("lr").get<double>();
    out.seed = derive_seed(cfg.at("seed").get<uint64_t>(), 0x68656164);
    return out;
}

Aggregation aggregation_from(const json& cfg) {
    std::string a = cfg.at("eval").at("aggregation").get<std::string>();
    if (a == "mean") return Aggregation::Mean;
    if (a == "concat") return Aggregation::Concat;
    throw validation_error("eval.aggregation must be 'mean' or 'concat'");
}

Corpus load_fasta_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open corpus file " + path);
    return parse_fasta(in);
}

void write_resolved_config(const fs::path& dir, const json& cfg) {
    fs::create_directories(dir);
    json doc;
    doc["config"] = cfg;
    doc["config_fingerprint"] = config_fingerprint(cfg);
    std::ofstream out(dir / "config.json");
    out << doc.dump(2) << '\n';
}

// ---- commands ----

int cmd_synth(const json& cfg, const std::string& out_path) {
    SynthConfig scfg;
    const json& s = cfg.at("synth");
    scfg.n_refs = s.at("n_refs").get<int>();
    scfg.length = s.at("length").get<int>();
    scfg.n_mutants_per_ref = s.at("n_mutants_per_ref").get<int>();
    scfg.sub_rate = s.at("sub_rate").get<double>();
    scfg.indel_rate = s.at("indel_rate").get<double>();
    scfg.seed = cfg.at("seed").get<uint64_t>();

    auto corpus = synth_generate(scfg);
    std::ofstream out(out_path);
    if (!out) throw data_error("cannot write " + out_path);
    out << to_fasta(corpus);
    std::cout << "wrote " << corpus.size() << " sequences to " << out_path << "\n"
              << "corpus_fingerprint=" << hex64(corpus.fingerprint()) << "\n"
              << "config_fingerprint=" << config_fingerprint(cfg) << "\n";
    return 0;
}

int cmd_build_graph(const json& cfg, const std::string& input, const std::string& out_dir,
                    bool force_recall_report) {
    auto corpus = load_fasta_file(input);
    auto gcfg = graph_config_from(cfg);
    auto graph = assemble_graph(corpus, gcfg);
    save_graph(graph, out_dir);
    write_resolved_config(out_dir, cfg);

    std::cout << "N=" << graph.n_nodes() << ", dBG=" << graph.dbg.size();
    for (int s : gcfg.kf_sub_ks) std::cout << ", KF_" << s << "=" << graph.kf_for(s).size();
    std::cout << "\n";

    if (gcfg.mode == KfMode::Ann) {
        if (graph.n_nodes() <= 4096 || force_recall_report) {
            for (int s : gcfg.kf_sub_ks) {
                auto exact = kf_edges_exact(graph.features_for(s), gcfg.threshold);
                std::set<std::pair<int, int>> truth;
                for (const auto& e : exact.edges) truth.insert({e.i, e.j});
                size_t hit = 0;
                for (const auto& e : graph.kf_for(s).edges) hit += truth.count({e.i, e.j});
                double recall =
                    truth.empty() ? 1.0 : static_cast<double>(hit) / static_cast<double>(truth.size());
                std::printf("KF_%d recall vs exact: %.4f (%zu/%zu edges)\n", s, recall, hit,
                            truth.size());
            }
        } else {
            std::cout << "recall report skipped (N > 4096); pass --recall-report to force\n";
        }
    }
    std::cout << "config_fingerprint=" << config_fingerprint(cfg) << "\n";
    return 0;
}

int cmd_pretrain(const json& cfg, const std::string& graph_dir, const std::string& out_dir,
                 const std::string& corpus_path) {
    auto graph = load_graph(graph_dir);
    fs::create_directories(out_dir);

    std::string enc_type = cfg.at("encoder").at("type").get<std::string>();
    std::string objective = cfg.at("train").at("objective").get<std::string>();
    if (objective != "cl" && objective != "gae")
        throw validation_error("train.objective must be 'cl' or 'gae'");

    std::vector<NamedMatrix> tensors;
    std::vector<LossRecord> history;
    DenseMatrix embeddings;
    json extra;
    extra["config"] = cfg;
    extra["objective"] = objective;

    if (enc_type == "gcn") {
        auto enc = encoder_config_from(cfg);
        auto tcfg = train_config_from(cfg);
        extra["kind"] = "gcn";
        if (objective == "cl") {
            auto result = train_contrastive(graph, enc, tcfg);
            for (size_t l = 0; l < result.params.weights.size(); ++l)
                tensors.push_back({"theta" + std::to_string(l), result.params.weights[l]});
            embeddings = std::move(result.embeddings);
            history = std::move(result.history);
        } else {
            auto result = train_gae(graph, enc, tcfg);
            for (size_t l = 0; l < result.params.weights.size(); ++l)
                tensors.push_back({"theta" + std::to_string(l), result.params.weights[l]});
            for (size_t t = 0; t < result.decoders.sub_ks.size(); ++t) {
                int s = result.decoders.sub_ks[t];
                tensors.push_back({"decoder_theta" + std::to_string(s), result.decoders.thetas[t]});
                tensors.push_back({"decoder_bias" + std::to_string(s), result.decoders.biases[t]});
            }
            embeddings = std::move(result.embeddings);
            history = std::move(result.history);
        }
    } else if (enc_type == "table") {
        if (objective == "gae") throw validation_error("the gae objective requires the gcn encoder");
        std::string variant = cfg.at("encoder").at("variant").get<std::string>();
        BaselineVariant v;
        if (variant == "word2vec")
            v = BaselineVariant::Word2Vec;
        else if (variant == "node2vec")
            v = BaselineVariant::Node2Vec;
        else
            throw validation_error("encoder.variant must be 'word2vec' or 'node2vec'");
        Corpus corpus;
        if (v == BaselineVariant::Word2Vec) {
            if (corpus_path.empty())
                throw validation_error("the word2vec baseline needs --corpus (sequence context)");
            corpus = load_fasta_file(corpus_path);
        }
        auto tcfg = train_config_from(cfg);
        auto result =
            train_baseline(corpus, graph, v, cfg.at("encoder").at("dim").get<int>(), tcfg);
        tensors.push_back({"table", result.table});
        embeddings = std::move(result.table);
        history = std::move(result.history);
        extra["kind"] = "table";
        extra["variant"] = variant;
    } else {
        throw validation_error("encoder.type must be 'gcn' or 'table'");
    }

    tensors.push_back({"embeddings", embeddings});
    save_checkpoint(out_dir, tensors, extra);
    write_embeddings_tsv(fs::path(out_dir) / "embeddings.tsv", graph.vocab, embeddings);
    write_loss_csv(fs::path(out_dir) / "loss.csv", history);
    write_resolved_config(out_dir, cfg);

    std::cout << "pretrained " << enc_type << " (" << objective << ") on N=" << graph.n_nodes()
              << " nodes for " << cfg.at("train").at("epochs").get<int>() << " epochs\n";
    if (!history.empty())
        std::cout << "final train loss " << io_detail::fmt17(history.back().value) << "\n";
    std::cout << "config_fingerprint=" << config_fingerprint(cfg) << "\n";
    return 0;
}

struct EmbeddingSource {
    KmerVocab vocab;
    DenseMatrix emb;
    std::string method;
};

EmbeddingSource resolve_embeddings(const json& cfg, const std::string& embeddings_path,
                                   const std::string& checkpoint_dir, bool one_hot,
                                   const Corpus& eval_corpus) {
    int sources = (embeddings_path.empty() ? 0 : 1) + (checkpoint_dir.empty() ? 0 : 1) +
                  (one_hot ? 1 : 0);
    if (sources != 1)
        throw validation_error(
            "pass exactly one embedding source: --embeddings, --checkpoint, or --one-hot");

    EmbeddingSource src;
    if (!embeddings_path.empty()) {
        auto [vocab, emb] = read_embeddings_tsv(embeddings_path);
        src.vocab = std::move(vocab);
        src.emb = std::move(emb);
        src.method = "embeddings";
        return src;
    }
    if (one_hot) {
        src.vocab = build_vocab(eval_corpus, cfg.at("graph").at("k").get<int>());
        src.emb = one_hot_embedding(src.vocab.size(),
                                    cfg.at("eval").at("allow_large_onehot").get<bool>());
        src.method = "onehot";
        return src;
    }
    // inductive path: re-encode the evaluation corpus with stored weights
    auto ck = load_checkpoint(checkpoint_dir);
    if (ck.extra.value("kind", std::string()) != "gcn")
        throw validation_error("checkpoint at " + checkpoint_dir + " is not an inductive encoder");
    json stored = ck.extra.at("config");
    auto gcfg = graph_config_from(stored);
    auto enc = encoder_config_from(stored);
    auto graph = assemble_graph(eval_corpus, gcfg);
    EncoderParams params;
    for (size_t l = 0; l < enc.layers.size(); ++l)
        params.weights.push_back(ck.find("theta" + std::to_string(l)));
    src.vocab = graph.vocab;
    src.emb = encoder_forward(graph, enc, params);
    src.method = "checkpoint";
    return src;
}

int cmd_eval(const json& cfg, const std::string& task, const std::string& corpus_path,
             const std::string& queries_path, const std::string& embeddings_path,
             const std::string& checkpoint_dir, bool one_hot, const std::string& method_label,
             const std::string& out_path, const std::string& residuals_path,
             const std::string& ranks_path) {
    uint64_t seed = cfg.at("seed").get<uint64_t>();
    auto aggregation = aggregation_from(cfg);
    auto corpus = load_fasta_file(corpus_path);

    EvalReport report;
    report.seed = seed;
    report.config = cfg;

    if (task == "edit-distance") {
        auto src = resolve_embeddings(cfg, embeddings_path, checkpoint_dir, one_hot, corpus);
        auto seq_emb = embed_corpus(corpus, src.vocab, src.emb, aggregation);

        const json& e = cfg.at("eval");
        auto train = build_pair_dataset(corpus, e.at("train_pairs").get<int>(),
                                        derive_seed(seed, 0x656431));
        auto val =
            build_pair_dataset(corpus, e.at("val_pairs").get<int>(), derive_seed(seed, 0x656432));
        auto test =
            build_pair_dataset(corpus, e.at("test_pairs").get<int>(), derive_seed(seed, 0x656433));

        auto head = train_distance_head(seq_emb, train, val, head_config_from(cfg));
        double value = percent_rmse(head.head, test, seq_emb, test.max_length,
                                    e.at("rmse_paper_literal").get<bool>());

        if (!residuals_path.empty()) {
            auto points = head_points(head.head, seq_emb);
            std::ofstream out(residuals_path);
            out << "a,b,ed,pred\n";
            for (const auto& p : test.pairs) {
                double pred = test.max_length * hyperbolic_distance(points[static_cast<size_t>(p.a)],
                                                                    points[static_cast<size_t>(p.b)]);
                out << p.a << ',' << p.b << ',' << p.ed << ',' << io_detail::fmt17(pred) << '\n';
            }
        }

        report.task = "edit-distance";
        report.k = src.vocab.k;
        report.method = method_label.empty() ? src.method : method_label;
        report.metric = "percent_rmse";
        report.value = value;
    } else if (task == "retrieval") {
        if (queries_path.empty()) throw validation_error("retrieval needs --queries");
        auto queries = load_fasta_file(queries_path);
        Corpus combined = corpus;
        for (const auto& s : queries.sequences) combined.sequences.push_back(s);

        auto src = resolve_embeddings(cfg, embeddings_path, checkpoint_dir, one_hot, combined);
        auto all_emb = embed_corpus(combined, src.vocab, src.emb, aggregation);
        int n_refs = static_cast<int>(corpus.size());
        DenseMatrix ref_emb(n_refs, all_emb.cols);
        DenseMatrix query_emb(static_cast<int>(queries.size()), all_emb.cols);
        for (int r = 0; r < n_refs; ++r)
            std::copy_n(all_emb.row(r), all_emb.cols, ref_emb.row(r));
        for (int q = 0; q < query_emb.rows; ++q)
            std::copy_n(all_emb.row(n_refs + q), all_emb.cols, query_emb.row(q));

        auto truth = true_nearest_refs(queries, corpus);
        double top_n = cfg.at("eval").at("top_n_percent").get<double>();
        double value = retrieval_topn(query_emb, ref_emb, truth, top_n);

        if (!ranks_path.empty()) {
            std::ofstream out(ranks_path);
            out << "query,best_true_rank\n";
            std::vector<std::vector<double>> ref_pts;
            for (int r = 0; r < n_refs; ++r)
                ref_pts.push_back(project_to_ball({ref_emb.row(r), ref_emb.row(r) + ref_emb.cols}));
            for (int qi = 0; qi < query_emb.rows; ++qi) {
                auto qp = project_to_ball({query_emb.row(qi), query_emb.row(qi) + query_emb.cols});
                std::vector<std::pair<double, int>> ranked;
                for (int r = 0; r < n_refs; ++r)
                    ranked.push_back({hyperbolic_distance(qp, ref_pts[static_cast<size_t>(r)]), r});
                std::sort(ranked.begin(), ranked.end());
                int best = n_refs;
                for (int pos = 0; pos < n_refs; ++pos) {
                    int r = ranked[static_cast<size_t>(pos)].second;
                    if (std::find(truth[static_cast<size_t>(qi)].begin(),
                                  truth[static_cast<size_t>(qi)].end(),
                                  r) != truth[static_cast<size_t>(qi)].end()) {
                        best = pos + 1;
                        break;
                    }
                }
                out << qi << ',' << best << '\n';
            }
        }

        report.task = "retrieval";
        report.k = src.vocab.k;
        report.method = method_label.empty() ? src.method : method_label;
        report.metric = "top_n_accuracy";
        report.value = value;
    } else {
        throw validation_error("task must be 'edit-distance' or 'retrieval'");
    }

    write_eval_report(out_path, report);
    std::cout << report.task << " " << report.metric << "=" << io_detail::fmt17(report.value)
              << " method=" << report.method << "\n"
              << "config_fingerprint=" << config_fingerprint(cfg) << "\n";
    return 0;
}

// finite-difference verification of every differentiable primitive
int cmd_gradcheck(uint64_t seed) {
    auto rnd = [&](int rows, int cols, uint64_t salt) {
        DenseMatrix m(rows, cols);
        std::mt19937_64 rng(derive_seed(seed, 0x676331, salt));
        for (auto& v : m.data) {
            double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            double mag = 0.1 + 0.9 * u;
            v = (rng() & 1) ? mag : -mag;
        }
        return m;
    };

    auto adj = sym_normalize(SparseAdjacency::from_triplets(
                                 4, 4, {{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 0.5}, {2, 1, 0.5},
                                        {2, 3, 2.0}, {3, 2, 2.0}}),
                             1.0);

    struct Case {
        std::string name;
        std::function<int(Tape&, const std::vector<int>&)> build;
        std::vector<DenseMatrix> params;
    };

    std::vector<Case> cases;
    cases.push_back({"matmul_bias_relu",
                     [](Tape& t, const std::vector<int>& p) {
                         return t.sum(t.relu(t.add_row_bias(t.matmul(p[0], p[1]), p[2])));
                     },
                     {rnd(4, 3, 1), rnd(3, 2, 2), rnd(1, 2, 3)}});
    cases.push_back({"spmm",
                     [&adj](Tape& t, const std::vector<int>& p) { return t.sum(t.spmm(&adj, p[0])); },
                     {rnd(4, 3, 4)}});
    cases.push_back({"sigmoid_mse",
                     [](Tape& t, const std::vector<int>& p) {
                         DenseMatrix target(2, 3);
                         target.at(0, 0) = 0.25;
                         target.at(1, 2) = -0.75;
                         return t.mse_sum(t.sigmoid(p[0]), std::move(target));
                     },
                     {rnd(2, 3, 5)}});
    cases.push_back({"project_ball",
                     [](Tape& t, const std::vector<int>& p) { return t.sum(t.project_ball(p[0])); },
                     {rnd(3, 3, 6)}});
    cases.push_back({"poincare",
                     [](Tape& t, const std::vector<int>& p) {
                         int proj = t.project_ball(p[0]);
                         return t.sum(t.poincare_rows(t.gather_rows(proj, {0, 1}),
                                                      t.gather_rows(proj, {2, 3})));
                     },
                     {rnd(4, 3, 7)}});
    cases.push_back({"contrastive",
                     [](Tape& t, const std::vector<int>& p) {
                         return t.contrastive(p[0], {{0, 1}, {2, 3}}, {{4}, {0, 4}});
                     },
                     {rnd(5, 3, 8)}});
    cases.push_back({"gae_edge_l1",
                     [](Tape& t, const std::vector<int>& p) {
                         return t.gae_edge_l1(p[0], {{0, 1, 0.4}, {1, 2, -0.3}});
                     },
                     {rnd(3, 3, 9)}});

    bool all_ok = true;
    for (const auto& c : cases) {
        auto run = [&c](Tape& t, const std::vector<DenseMatrix>& ps) {
            std::vector<int> ids;
            ids.reserve(ps.size());
            for (const auto& m : ps) ids.push_back(t.param(m));
            return c.build(t, ids);
        };

        Tape analytic;
        int loss = run(analytic, c.params);
        analytic.backward(loss);
        std::vector<DenseMatrix> grads;
        for (size_t i = 0; i < c.params.size(); ++i)
            grads.push_back(analytic.grad(static_cast<int>(i)));

        double err = grad_check(
            [&](const std::vector<DenseMatrix>& ps) {
                Tape t;
                return t.value(run(t, ps)).data[0];
            },
            c.params, grads);
        bool ok = err < 1e-4;
        all_ok = all_ok && ok;
        std::printf("gradcheck %-18s max_rel=%.3e %s\n", c.name.c_str(), err, ok ? "PASS" : "FAIL");
    }
    if (!all_ok) throw numeric_error("gradient check failed");
    std::cout << "gradcheck: all primitives within 1e-4\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"heterogeneous k-mer graph embeddings"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "cap on worker threads (stages run serially)");

    std::string config_path, input, output, corpus_path, queries_path;
    std::string embeddings_path, checkpoint_dir, method_label, task;
    std::string residuals_path, ranks_path;
    bool recall_report = false, one_hot = false, rmse_paper_literal = false, allow_large = false;
    uint64_t seed = 0;
    int k = 0, neighbors = 0, epochs = 0, dim = 0, cap = -1, batch_pairs = 0;
    int head_dim = 0, head_epochs = 0, train_pairs = 0, val_pairs = 0, test_pairs = 0;
    int refs = 0, length = 0, mutants = -1;
    double threshold = -1, lr = 0, sub_rate = -1, indel_rate = -1, top_n = 0, head_lr = 0;
    std::vector<int> sub_ks, feature_sub_ks, fanouts;
    std::string kf_mode, objective, edges, encoder_type, variant, aggregation;

    auto* synth = app.add_subcommand("synth", "generate a synthetic FASTA corpus");
    synth->add_option("--config", config_path, "JSON config file");
    synth->add_option("--out", output, "output FASTA path")->required();
    synth->add_option("--refs", refs, "number of reference sequences");
    synth->add_option("--length", length, "reference length in bases");
    synth->add_option("--mutants", mutants, "mutants per reference");
    synth->add_option("--sub-rate", sub_rate, "substitution rate");
    synth->add_option("--indel-rate", indel_rate, "insertion and deletion rate");
    synth->add_option("--seed", seed, "global seed");

    auto* build = app.add_subcommand("build-graph", "assemble and serialize a k-mer graph");
    build->add_option("--config", config_path, "JSON config file");
    build->add_option("--input", input, "input FASTA path")->required();
    build->add_option("--out", output, "output graph directory")->required();
    build->add_option("--k", k, "k-mer length");
    build->add_option("--sub-k", sub_ks, "KF sub-k-mer sizes (repeatable)");
    build->add_option("--feature-sub-k", feature_sub_ks, "feature sub-k-mer sizes (repeatable)");
    build->add_option("--threshold", threshold, "KF cosine threshold t");
    build->add_option("--kf-mode", kf_mode, "exact or ann");
    build->add_option("--neighbors", neighbors, "ANN neighbors per node");
    build->add_flag("--recall-report", recall_report, "force the ANN-vs-exact recall report");
    build->add_option("--seed", seed, "global seed");

    auto* pretrain = app.add_subcommand("pretrain", "train k-mer embeddings on a graph");
    pretrain->add_option("--config", config_path, "JSON config file");
    pretrain->add_option("--graph", input, "graph directory from build-graph")->required();
    pretrain->add_option("--out", output, "output directory")->required();
    pretrain->add_option("--corpus", corpus_path, "training FASTA (word2vec baseline)");
    pretrain->add_option("--objective", objective, "cl or gae");
    pretrain->add_option("--edges", edges, "positive-pair mix: dbg, kf, or both");
    pretrain->add_option("--encoder", encoder_type, "gcn or table");
    pretrain->add_option("--variant", variant, "table baseline: word2vec or node2vec");
    pretrain->add_option("--dim", dim, "table embedding dimension");
    pretrain->add_option("--epochs", epochs, "training epochs");
    pretrain->add_option("--batch-pairs", batch_pairs, "positive pairs per batch");
    pretrain->add_option("--lr", lr, "Adam learning rate");
    pretrain->add_option("--cap", cap, "pairs per epoch cap (0 = no cap)");
    pretrain->add_option("--seed", seed, "global seed");

    auto* eval = app.add_subcommand("eval", "evaluate embeddings on a sequence task");
    eval->add_option("--config", config_path, "JSON config file");
    eval->add_option("--task", task, "edit-distance or retrieval")->required();
    eval->add_option("--corpus", corpus_path, "evaluation FASTA (references for retrieval)")
        ->required();
    eval->add_option("--queries", queries_path, "query FASTA (retrieval)");
    eval->add_option("--embeddings", embeddings_path, "embeddings TSV from pretrain");
    eval->add_option("--checkpoint", checkpoint_dir, "inductive encoder checkpoint directory");
    eval->add_flag("--one-hot", one_hot, "use one-hot k-mer embeddings");
    eval->add_option("--method", method_label, "method label for the report");
    eval->add_option("--out", output, "report JSON path")->required();
    eval->add_option("--aggregation", aggregation, "mean or concat");
    eval->add_option("--top-n", top_n, "retrieval cutoff percentage");
    eval->add_flag("--rmse-paper-literal", rmse_paper_literal,
                   "report the unaveraged %RMSE variant");
    eval->add_flag("--allow-large-onehot", allow_large, "lift the one-hot capacity cap");
    eval->add_option("--train-pairs", train_pairs, "head training pairs");
    eval->add_option("--val-pairs", val_pairs, "head validation pairs");
    eval->add_option("--test-pairs", test_pairs, "reported pairs");
    eval->add_option("--head-dim", head_dim, "distance head output dimension");
    eval->add_option("--head-epochs", head_epochs, "distance head epochs");
    eval->add_option("--head-lr", head_lr, "distance head learning rate");
    eval->add_option("--residuals", residuals_path, "optional per-pair residual CSV");
    eval->add_option("--ranks", ranks_path, "optional per-query rank CSV");
    eval->add_option("--seed", seed, "global seed");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every op");
    gradcheck->add_option("--seed", seed, "evaluation point seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (threads < 1) throw validation_error("--threads must be >= 1");
        json cfg = load_config(config_path);

        // flag overrides, applied only when the user passed the flag
        if (synth->count("--seed") || build->count("--seed") || pretrain->count("--seed") ||
            eval->count("--seed"))
            cfg["seed"] = seed;
        if (synth->count("--refs")) cfg["synth"]["n_refs"] = refs;
        if (synth->count("--length")) cfg["synth"]["length"] = length;
        if (synth->count("--mutants")) cfg["synth"]["n_mutants_per_ref"] = mutants;
        if (synth->count("--sub-rate")) cfg["synth"]["sub_rate"] = sub_rate;
        if (synth->count("--indel-rate")) cfg["synth"]["indel_rate"] = indel_rate;

        if (build->count("--k")) cfg["graph"]["k"] = k;
        if (build->count("--sub-k")) cfg["graph"]["kf_sub_ks"] = sub_ks;
        if (build->count("--feature-sub-k")) cfg["graph"]["feature_sub_ks"] = feature_sub_ks;
        if (build->count("--threshold")) cfg["graph"]["threshold"] = threshold;
        if (build->count("--kf-mode")) cfg["graph"]["mode"] = kf_mode;
        if (build->count("--neighbors")) cfg["graph"]["n_neighbors"] = neighbors;

        if (pretrain->count("--objective")) cfg["train"]["objective"] = objective;
        if (pretrain->count("--edges")) {
            if (edges == "dbg")
                cfg["train"]["mix"] = "context";
            else if (edges == "kf")
                cfg["train"]["mix"] = "structural";
            else if (edges == "both")
                cfg["train"]["mix"] = "both";
            else
                throw validation_error("--edges must be dbg, kf, or both");
        }
        if (pretrain->count("--encoder")) cfg["encoder"]["type"] = encoder_type;
        if (pretrain->count("--variant")) cfg["encoder"]["variant"] = variant;
        if (pretrain->count("--dim")) cfg["encoder"]["dim"] = dim;
        if (pretrain->count("--epochs")) cfg["train"]["epochs"] = epochs;
        if (pretrain->count("--batch-pairs")) cfg["train"]["batch_pairs"] = batch_pairs;
        if (pretrain->count("--lr")) cfg["train"]["lr"] = lr;
        if (pretrain->count("--cap")) cfg["train"]["pairs_per_epoch_cap"] = cap;

        if (eval->count("--aggregation")) cfg["eval"]["aggregation"] = aggregation;
        if (eval->count("--top-n")) cfg["eval"]["top_n_percent"] = top_n;
        if (eval->count("--rmse-paper-literal")) cfg["eval"]["rmse_paper_literal"] = true;
        if (eval->count("--allow-large-onehot")) cfg["eval"]["allow_large_onehot"] = true;
        if (eval->count("--train-pairs")) cfg["eval"]["train_pairs"] = train_pairs;
        if (eval->count("--val-pairs")) cfg["eval"]["val_pairs"] = val_pairs;
        if (eval->count("--test-pairs")) cfg["eval"]["test_pairs"] = test_pairs;
        if (eval->count("--head-dim")) cfg["eval"]["head"]["dim"] = head_dim;
        if (eval->count("--head-epochs")) cfg["eval"]["head"]["epochs"] = head_epochs;
        if (eval->count("--head-lr")) cfg["eval"]["head"]["lr"] = head_lr;

        if (*synth) return cmd_synth(cfg, output);
        if (*build) return cmd_build_graph(cfg, input, output, recall_report);
        if (*pretrain) return cmd_pretrain(cfg, input, output, corpus_path);
        if (*eval)
            return cmd_eval(cfg, task, corpus_path, queries_path, embeddings_path, checkpoint_dir,
                            one_hot, method_label, output, residuals_path, ranks_path);
        if (*gradcheck) return cmd_gradcheck(seed);
        throw validation_error("no command selected");
    } catch (const validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const json::exception& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
