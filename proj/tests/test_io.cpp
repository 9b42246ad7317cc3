#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>

#include "kge/graph_io.hpp"

using namespace kge;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("kge_test_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

MetagenomicGraph figure_graph() {
    GraphConfig cfg;
    cfg.k = 3;
    cfg.kf_sub_ks = {2};
    cfg.feature_sub_ks = {1, 2};
    return assemble_graph(parse_fasta("ACTGACT\nACTGACA\nTGACTGC"), cfg);
}

}  // namespace

TEST_CASE("graph save/load round trip") {
    TempDir tmp;
    auto graph = figure_graph();
    save_graph(graph, tmp.path / "graph");
    auto loaded = load_graph(tmp.path / "graph");

    CHECK(loaded.n_nodes() == graph.n_nodes());
    CHECK(loaded.vocab.kmer_of == graph.vocab.kmer_of);
    CHECK(loaded.corpus_fingerprint == graph.corpus_fingerprint);
    CHECK(loaded.config.k == 3);
    CHECK(loaded.config.threshold == graph.config.threshold);

    REQUIRE(loaded.dbg.edges.size() == graph.dbg.edges.size());
    for (size_t e = 0; e < graph.dbg.edges.size(); ++e) {
        CHECK(loaded.dbg.edges[e].i == graph.dbg.edges[e].i);
        CHECK(loaded.dbg.edges[e].j == graph.dbg.edges[e].j);
        CHECK(loaded.dbg.edges[e].w == graph.dbg.edges[e].w);  // 17 digits survive exactly
    }
    REQUIRE(loaded.has_kf(2));
    CHECK(loaded.kf_for(2).size() == graph.kf_for(2).size());
    for (size_t e = 0; e < graph.kf_for(2).edges.size(); ++e)
        CHECK(loaded.kf_for(2).edges[e].w == graph.kf_for(2).edges[e].w);

    for (int s : {1, 2}) {
        const auto& a = graph.features_for(s);
        const auto& b = loaded.features_for(s);
        REQUIRE(a.dim == b.dim);
        REQUIRE(a.n_rows == b.n_rows);
        for (int i = 0; i < a.n_rows; ++i)
            for (int d = 0; d < a.dim; ++d) CHECK(a.row(i)[d] == b.row(i)[d]);
    }
}

TEST_CASE("graph loading rejects damaged payloads") {
    TempDir tmp;
    auto graph = figure_graph();
    auto dir = tmp.path / "graph";

    save_graph(graph, dir);
    { std::ofstream(dir / "meta.json") << "{ not json"; }
    CHECK_THROWS_AS(load_graph(dir), data_error);

    save_graph(graph, dir);
    { std::ofstream(dir / "edges_dbg.tsv") << "0\tbroken\n"; }
    CHECK_THROWS_AS(load_graph(dir), data_error);

    save_graph(graph, dir);
    { std::ofstream(dir / "edges_dbg.tsv") << "0\t99\t0.5\n"; }  // id out of range
    CHECK_THROWS_AS(load_graph(dir), data_error);

    save_graph(graph, dir);
    {
        std::ofstream bin(dir / "features_1.bin", std::ios::binary | std::ios::app);
        char byte = 0;
        bin.write(&byte, 1);
    }
    CHECK_THROWS_AS(load_graph(dir), data_error);

    CHECK_THROWS_AS(load_graph(tmp.path / "missing"), data_error);
}

TEST_CASE("checkpoint round trip keeps bits and metadata") {
    TempDir tmp;
    std::vector<NamedMatrix> tensors;
    tensors.push_back({"theta0", glorot_uniform(7, 5, 1)});
    tensors.push_back({"theta1", glorot_uniform(5, 3, 2)});
    tensors[0].matrix.at(0, 0) = 1.0 / 3.0;  // value with no short decimal form
    nlohmann::json extra = {{"objective", "cl"}, {"epochs", 12}};

    save_checkpoint(tmp.path / "ck", tensors, extra);
    auto ck = load_checkpoint(tmp.path / "ck");

    REQUIRE(ck.tensors.size() == 2);
    CHECK(ck.find("theta0") == tensors[0].matrix);
    CHECK(ck.find("theta1") == tensors[1].matrix);
    CHECK_THROWS_AS(ck.find("theta9"), data_error);
    CHECK(ck.extra["objective"] == "cl");
    CHECK(ck.extra["epochs"] == 12);

    // truncated payload must not load quietly
    fs::resize_file(tmp.path / "ck" / "params.bin", 8);
    CHECK_THROWS_AS(load_checkpoint(tmp.path / "ck"), data_error);
}

TEST_CASE("loss history CSV") {
    TempDir tmp;
    std::vector<LossRecord> history = {{0, "train", 1.5}, {0, "val", 2.25}, {1, "train", 0.125}};
    write_loss_csv(tmp.path / "loss.csv", history);

    std::ifstream in(tmp.path / "loss.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,split,value");
    std::getline(in, line);
    CHECK(line == "0,train,1.5");
    std::getline(in, line);
    CHECK(line == "0,val,2.25");
    std::getline(in, line);
    CHECK(line == "1,train,0.125");
}

TEST_CASE("pair dataset TSV round trip") {
    TempDir tmp;
    SequencePairDataset ds;
    ds.pairs = {{0, 1, 3}, {4, 2, 0}, {7, 5, 12}};
    ds.max_length = 150;
    write_pairs_tsv(tmp.path / "pairs.tsv", ds);
    auto back = read_pairs_tsv(tmp.path / "pairs.tsv", 150);
    REQUIRE(back.pairs.size() == 3);
    CHECK(back.max_length == 150);
    for (size_t t = 0; t < 3; ++t) {
        CHECK(back.pairs[t].a == ds.pairs[t].a);
        CHECK(back.pairs[t].b == ds.pairs[t].b);
        CHECK(back.pairs[t].ed == ds.pairs[t].ed);
    }

    { std::ofstream(tmp.path / "bad.tsv") << "1\t2\n"; }
    CHECK_THROWS_AS(read_pairs_tsv(tmp.path / "bad.tsv", 10), data_error);
}

TEST_CASE("embedding TSV uses k-mer labels") {
    TempDir tmp;
    auto graph = figure_graph();
    DenseMatrix emb = glorot_uniform(graph.n_nodes(), 3, 9);
    write_embeddings_tsv(tmp.path / "emb.tsv", graph.vocab, emb);

    std::ifstream in(tmp.path / "emb.tsv");
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        REQUIRE(line.size() > 4);
        CHECK(line.substr(0, 3) == graph.vocab.kmer_of[static_cast<size_t>(rows)]);
        CHECK(line[3] == '\t');
        ++rows;
    }
    CHECK(rows == graph.n_nodes());

    DenseMatrix wrong(graph.n_nodes() + 1, 3);
    CHECK_THROWS_AS(write_embeddings_tsv(tmp.path / "x.tsv", graph.vocab, wrong), validation_error);

    auto [vocab, back] = read_embeddings_tsv(tmp.path / "emb.tsv");
    CHECK(vocab.kmer_of == graph.vocab.kmer_of);
    CHECK(back == emb);  // 17 significant digits round-trip doubles exactly

    { std::ofstream(tmp.path / "bad_emb.tsv") << "ACT\t0.5\nCTG\t0.5\t0.25\n"; }
    CHECK_THROWS_AS(read_embeddings_tsv(tmp.path / "bad_emb.tsv"), data_error);
    { std::ofstream(tmp.path / "dup_emb.tsv") << "ACT\t0.5\nACT\t0.25\n"; }
    CHECK_THROWS_AS(read_embeddings_tsv(tmp.path / "dup_emb.tsv"), data_error);
}

TEST_CASE("eval reports carry a config fingerprint") {
    TempDir tmp;
    EvalReport report;
    report.task = "eda";
    report.k = 4;
    report.method = "cl";
    report.seed = 11;
    report.metric = "percent_rmse";
    report.value = 17.25;
    report.config = {{"epochs", 50}, {"lr", 0.01}};

    auto j = eval_report_json(report);
    CHECK(j["task"] == "eda");
    CHECK(j["k"] == 4);
    CHECK(j["method"] == "cl");
    CHECK(j["seed"] == 11);
    CHECK(j["metric"] == "percent_rmse");
    CHECK(j["value"] == 17.25);
    CHECK(j["config"]["epochs"] == 50);
    CHECK(j["config_fingerprint"].get<std::string>().size() == 16);

    // fingerprint tracks the config, nothing else
    EvalReport other = report;
    other.value = 99.0;
    CHECK(eval_report_json(other)["config_fingerprint"] == j["config_fingerprint"]);
    other.config["epochs"] = 51;
    CHECK(eval_report_json(other)["config_fingerprint"] != j["config_fingerprint"]);

    write_eval_report(tmp.path / "report.json", report);
    nlohmann::json loaded;
    std::ifstream(tmp.path / "report.json") >> loaded;
    CHECK(loaded == j);
}

TEST_CASE("vocab TSV round trip and validation") {
    TempDir tmp;
    auto graph = figure_graph();
    write_vocab_tsv(tmp.path / "nodes.tsv", graph.vocab);
    auto vocab = read_vocab_tsv(tmp.path / "nodes.tsv", 3);
    CHECK(vocab.kmer_of == graph.vocab.kmer_of);
    CHECK(vocab.id_of("ACT") == graph.vocab.id_of("ACT"));

    { std::ofstream(tmp.path / "bad.tsv") << "0\tACT\n2\tCTG\n"; }  // id gap
    CHECK_THROWS_AS(read_vocab_tsv(tmp.path / "bad.tsv", 3), data_error);
    { std::ofstream(tmp.path / "bad2.tsv") << "0\tAC\n"; }  // wrong k
    CHECK_THROWS_AS(read_vocab_tsv(tmp.path / "bad2.tsv", 3), data_error);
}
