#pragma once

// On-disk formats: graph directory (TSV edge lists, binary feature counts,
// JSON meta), parameter checkpoints (flat little-endian doubles + JSON shape
// manifest), loss CSV, pair TSV, and EvalReport JSON.

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kge/eval.hpp"
#include "kge/graph.hpp"
#include "kge/tensor.hpp"
#include "kge/train.hpp"

namespace kge {

namespace io_detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw data_error("cannot write " + path.string());
    return out;
}

inline std::ifstream open_in(const std::filesystem::path& path, bool binary = false) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw data_error("cannot read " + path.string());
    return in;
}

template <typename T>
inline void put_le(std::ofstream& out, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
inline T get_le(std::ifstream& in) {
    unsigned char bytes[sizeof(T)];
    in.read(reinterpret_cast<char*>(bytes), sizeof(T));
    if (!in) throw data_error("truncated binary file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return v;
}

inline void write_edges_tsv(const std::filesystem::path& path, const EdgeSet& set) {
    auto out = open_out(path);
    for (const auto& e : set.edges)
        out << e.i << '\t' << e.j << '\t' << fmt17(e.w) << '\n';
}

inline std::vector<Edge> read_edges_tsv(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::vector<Edge> edges;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Edge e;
        if (std::sscanf(line.c_str(), "%d\t%d\t%lf", &e.i, &e.j, &e.w) != 3)
            throw data_error("malformed edge line in " + path.string() + ": " + line);
        edges.push_back(e);
    }
    return edges;
}

}  // namespace io_detail

inline void write_vocab_tsv(const std::filesystem::path& path, const KmerVocab& vocab) {
    auto out = io_detail::open_out(path);
    for (int i = 0; i < vocab.size(); ++i)
        out << i << '\t' << vocab.kmer_of[static_cast<size_t>(i)] << '\n';
}

inline KmerVocab read_vocab_tsv(const std::filesystem::path& path, int k) {
    auto in = io_detail::open_in(path);
    KmerVocab vocab;
    vocab.k = k;
    std::string line;
    int expect = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw data_error("malformed vocab line: " + line);
        if (std::stoi(line.substr(0, tab)) != expect)
            throw data_error("vocab ids must be dense and ordered in " + path.string());
        std::string kmer = line.substr(tab + 1);
        if (static_cast<int>(kmer.size()) != k) throw data_error("vocab k-mer length mismatch");
        vocab.id_of_code[encode_kmer(kmer)] = expect++;
        vocab.kmer_of.push_back(std::move(kmer));
    }
    return vocab;
}

inline void save_graph(const MetagenomicGraph& graph, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_vocab_tsv(dir / "nodes.tsv", graph.vocab);
    io_detail::write_edges_tsv(dir / "edges_dbg.tsv", graph.dbg);
    for (const auto& set : graph.kf)
        io_detail::write_edges_tsv(dir / ("edges_kf_" + std::to_string(set.sub_k) + ".tsv"), set);
    for (const auto& f : graph.features) {
        auto out = io_detail::open_out(dir / ("features_" + std::to_string(f.sub_k) + ".bin"), true);
        for (uint32_t v : f.data) io_detail::put_le(out, v);
    }

    nlohmann::json meta;
    meta["k"] = graph.config.k;
    meta["n_nodes"] = graph.n_nodes();
    meta["kf_sub_ks"] = graph.config.kf_sub_ks;
    meta["feature_sub_ks"] = graph.config.resolved_feature_sub_ks();
    meta["mode"] = graph.config.mode == KfMode::Exact ? "exact" : "ann";
    meta["threshold"] = graph.config.threshold;
    meta["n_neighbors"] = graph.config.n_neighbors;
    meta["ann"] = {{"nlist", graph.config.ann.nlist},
                   {"nprobe", graph.config.ann.nprobe},
                   {"kmeans_iters", graph.config.ann.kmeans_iters},
                   {"seed", graph.config.ann.seed}};
    meta["corpus_fingerprint"] = hex64(graph.corpus_fingerprint);
    io_detail::open_out(dir / "meta.json") << meta.dump(2) << '\n';
}

inline MetagenomicGraph load_graph(const std::filesystem::path& dir) {
    nlohmann::json meta;
    try {
        io_detail::open_in(dir / "meta.json") >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("malformed meta.json: " + std::string(e.what()));
    }

    MetagenomicGraph graph;
    try {
        graph.config.k = meta.at("k").get<int>();
        graph.config.kf_sub_ks = meta.at("kf_sub_ks").get<std::vector<int>>();
        graph.config.feature_sub_ks = meta.at("feature_sub_ks").get<std::vector<int>>();
        graph.config.mode = meta.at("mode").get<std::string>() == "ann" ? KfMode::Ann : KfMode::Exact;
        graph.config.threshold = meta.at("threshold").get<double>();
        graph.config.n_neighbors = meta.at("n_neighbors").get<int>();
        graph.config.ann.nlist = meta.at("ann").at("nlist").get<int>();
        graph.config.ann.nprobe = meta.at("ann").at("nprobe").get<int>();
        graph.config.ann.kmeans_iters = meta.at("ann").at("kmeans_iters").get<int>();
        graph.config.ann.seed = meta.at("ann").at("seed").get<uint64_t>();
        graph.corpus_fingerprint = parse_hex64(meta.at("corpus_fingerprint").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw data_error("meta.json missing fields: " + std::string(e.what()));
    }

    graph.vocab = read_vocab_tsv(dir / "nodes.tsv", graph.config.k);
    int n = graph.vocab.size();
    if (n != meta.at("n_nodes").get<int>()) throw data_error("n_nodes mismatch with nodes.tsv");

    graph.dbg.kind = EdgeKind::Dbg;
    graph.dbg.edges = io_detail::read_edges_tsv(dir / "edges_dbg.tsv");
    for (int sub_k : graph.config.kf_sub_ks) {
        EdgeSet set;
        set.kind = EdgeKind::Kf;
        set.sub_k = sub_k;
        set.threshold = graph.config.threshold;
        set.edges = io_detail::read_edges_tsv(dir / ("edges_kf_" + std::to_string(sub_k) + ".tsv"));
        graph.kf.push_back(std::move(set));
    }
    for (const auto& e : graph.dbg.edges)
        if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n) throw data_error("edge id out of range");
    for (const auto& set : graph.kf)
        for (const auto& e : set.edges)
            if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n) throw data_error("edge id out of range");

    for (int sub_k : graph.config.feature_sub_ks) {
        SubKmerFrequencyMatrix f;
        f.sub_k = sub_k;
        f.n_rows = n;
        f.dim = 1 << (2 * sub_k);
        auto in = io_detail::open_in(dir / ("features_" + std::to_string(sub_k) + ".bin"), true);
        f.data.resize(static_cast<size_t>(f.n_rows) * f.dim);
        for (auto& v : f.data) v = io_detail::get_le<uint32_t>(in);
        char extra;
        if (in.read(&extra, 1)) throw data_error("trailing bytes in features_" + std::to_string(sub_k));
        graph.features.push_back(std::move(f));
    }
    return graph;
}

// ---- checkpoints ----

struct NamedMatrix {
    std::string name;
    DenseMatrix matrix;
};

inline void save_checkpoint(const std::filesystem::path& dir, const std::vector<NamedMatrix>& tensors,
                            const nlohmann::json& extra = {}) {
    std::filesystem::create_directories(dir);
    auto bin = io_detail::open_out(dir / "params.bin", true);
    nlohmann::json manifest;
    manifest["tensors"] = nlohmann::json::array();
    size_t offset = 0;
    for (const auto& t : tensors) {
        manifest["tensors"].push_back(
            {{"name", t.name}, {"rows", t.matrix.rows}, {"cols", t.matrix.cols}, {"offset", offset}});
        for (double v : t.matrix.data) io_detail::put_le(bin, v);
        offset += t.matrix.data.size();
    }
    if (!extra.is_null() && !extra.empty()) manifest["extra"] = extra;
    io_detail::open_out(dir / "params.json") << manifest.dump(2) << '\n';
}

struct Checkpoint {
    std::vector<NamedMatrix> tensors;
    nlohmann::json extra;

    const DenseMatrix& find(const std::string& name) const {
        for (const auto& t : tensors)
            if (t.name == name) return t.matrix;
        throw data_error("checkpoint has no tensor named " + name);
    }
};

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    nlohmann::json manifest;
    try {
        io_detail::open_in(dir / "params.json") >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("malformed params.json: " + std::string(e.what()));
    }
    Checkpoint ck;
    if (manifest.contains("extra")) ck.extra = manifest["extra"];
    auto bin = io_detail::open_in(dir / "params.bin", true);
    try {
        for (const auto& entry : manifest.at("tensors")) {
            NamedMatrix t;
            t.name = entry.at("name").get<std::string>();
            t.matrix = DenseMatrix(entry.at("rows").get<int>(), entry.at("cols").get<int>());
            for (auto& v : t.matrix.data) v = io_detail::get_le<double>(bin);
            ck.tensors.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw data_error("params.json missing fields: " + std::string(e.what()));
    }
    char extra_byte;
    if (bin.read(&extra_byte, 1)) throw data_error("trailing bytes in params.bin");
    return ck;
}

// ---- reports and histories ----

inline void write_loss_csv(const std::filesystem::path& path,
                           const std::vector<LossRecord>& history) {
    auto out = io_detail::open_out(path);
    out << "epoch,split,value\n";
    for (const auto& r : history)
        out << r.epoch << ',' << r.split << ',' << io_detail::fmt17(r.value) << '\n';
}

inline void write_pairs_tsv(const std::filesystem::path& path, const SequencePairDataset& ds) {
    auto out = io_detail::open_out(path);
    for (const auto& p : ds.pairs) out << p.a << '\t' << p.b << '\t' << p.ed << '\n';
}

inline SequencePairDataset read_pairs_tsv(const std::filesystem::path& path, int max_length) {
    auto in = io_detail::open_in(path);
    SequencePairDataset ds;
    ds.max_length = max_length;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        SequencePair p;
        if (std::sscanf(line.c_str(), "%d\t%d\t%d", &p.a, &p.b, &p.ed) != 3)
            throw data_error("malformed pair line: " + line);
        ds.pairs.push_back(p);
    }
    return ds;
}

inline void write_embeddings_tsv(const std::filesystem::path& path, const KmerVocab& vocab,
                                 const DenseMatrix& emb) {
    if (emb.rows != vocab.size()) throw validation_error("embedding rows must match vocab");
    auto out = io_detail::open_out(path);
    for (int i = 0; i < emb.rows; ++i) {
        out << vocab.kmer_of[static_cast<size_t>(i)];
        for (int j = 0; j < emb.cols; ++j) out << '\t' << io_detail::fmt17(emb.at(i, j));
        out << '\n';
    }
}

// Inverse of write_embeddings_tsv: rows in file order become the vocabulary.
inline std::pair<KmerVocab, DenseMatrix> read_embeddings_tsv(const std::filesystem::path& path) {
    auto in = io_detail::open_in(path);
    KmerVocab vocab;
    std::vector<std::vector<double>> rows;
    std::string line;
    size_t dim = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos) throw data_error("malformed embedding line: " + line);
        std::string kmer = line.substr(0, tab);
        if (vocab.k == 0)
            vocab.k = static_cast<int>(kmer.size());
        else if (static_cast<int>(kmer.size()) != vocab.k)
            throw data_error("inconsistent k-mer length in " + path.string());
        auto [it, inserted] = vocab.id_of_code.try_emplace(encode_kmer(kmer), vocab.size());
        if (!inserted) throw data_error("duplicate k-mer " + kmer + " in " + path.string());
        vocab.kmer_of.push_back(kmer);

        std::vector<double> row;
        size_t pos = tab;
        while (pos != std::string::npos && pos + 1 < line.size()) {
            size_t next = line.find('\t', pos + 1);
            std::string tok = line.substr(pos + 1, next == std::string::npos ? next : next - pos - 1);
            try {
                row.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw data_error("malformed embedding value '" + tok + "' in " + path.string());
            }
            pos = next;
        }
        if (row.empty()) throw data_error("embedding row without values: " + line);
        if (dim == 0)
            dim = row.size();
        else if (row.size() != dim)
            throw data_error("inconsistent embedding dimension in " + path.string());
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw data_error("empty embedding file " + path.string());
    DenseMatrix emb(static_cast<int>(rows.size()), static_cast<int>(dim));
    for (size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), emb.row(static_cast<int>(i)));
    return {std::move(vocab), std::move(emb)};
}

struct EvalReport {
    std::string task;
    int k = 0;
    std::string method;
    uint64_t seed = 0;
    std::string metric;
    double value = 0;
    nlohmann::json config;  // fully resolved
};

inline nlohmann::json eval_report_json(const EvalReport& report) {
    nlohmann::json j;
    j["task"] = report.task;
    j["k"] = report.k;
    j["method"] = report.method;
    j["seed"] = report.seed;
    j["metric"] = report.metric;
    j["value"] = report.value;
    j["config"] = report.config;
    j["config_fingerprint"] = hex64(fnv1a(report.config.dump()));
    return j;
}

inline void write_eval_report(const std::filesystem::path& path, const EvalReport& report) {
    io_detail::open_out(path) << eval_report_json(report).dump(2) << '\n';
}

}  // namespace kge
