#pragma once

// DNA corpus handling: FASTA / plain-text ingestion, k-mer extraction,
// vocabularies, deterministic splits and synthetic corpus generation.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kge/common.hpp"

namespace kge {

inline bool is_acgt(char c) {
    return c == 'A' || c == 'C' || c == 'G' || c == 'T';
}

inline int base_code(char c) {
    switch (c) {
        case 'A': return 0;
        case 'C': return 1;
        case 'G': return 2;
        case 'T': return 3;
        default: throw data_error(std::string("invalid base '") + c + "'");
    }
}

inline char code_base(int v) {
    static const char bases[4] = {'A', 'C', 'G', 'T'};
    if (v < 0 || v > 3) throw data_error("base code out of range");
    return bases[v];
}

struct DnaSequence {
    std::string id;
    std::string bases;  // over {A,C,G,T}
};

struct Corpus {
    std::vector<DnaSequence> sequences;
    static constexpr int alphabet_size = 4;

    bool empty() const { return sequences.empty(); }
    size_t size() const { return sequences.size(); }

    uint64_t fingerprint() const {
        uint64_t h = 1469598103934665603ULL;
        for (const auto& s : sequences) {
            h = fnv1a(s.id, h);
            h = fnv1a("\n", 1, h);
            h = fnv1a(s.bases, h);
            h = fnv1a("\n", 1, h);
        }
        return h;
    }
};

enum class InvalidBasePolicy { Strip, Reject };

namespace detail {

inline void append_record(Corpus& corpus, std::unordered_set<std::string>& seen,
                          const std::string& id, std::string bases) {
    if (!seen.insert(id).second) throw data_error("duplicate sequence id: " + id);
    corpus.sequences.push_back({id, std::move(bases)});
}

// Splits `raw` at runs of non-ACGT characters. Under Strip, each maximal
// valid run becomes its own record (id, id/0, id/1, ... when split).
inline void emit_sequence(Corpus& corpus, std::unordered_set<std::string>& seen,
                          const std::string& id, const std::string& raw,
                          InvalidBasePolicy policy) {
    std::vector<std::string> runs;
    std::string cur;
    for (char c : raw) {
        char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (is_acgt(u)) {
            cur.push_back(u);
        } else {
            if (policy == InvalidBasePolicy::Reject)
                throw data_error("invalid character '" + std::string(1, c) + "' in sequence " + id);
            if (!cur.empty()) runs.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) runs.push_back(std::move(cur));
    if (runs.empty()) return;  // nothing valid; record dropped
    if (runs.size() == 1) {
        append_record(corpus, seen, id, std::move(runs[0]));
    } else {
        for (size_t i = 0; i < runs.size(); ++i)
            append_record(corpus, seen, id + "/" + std::to_string(i), std::move(runs[i]));
    }
}

}  // namespace detail

// Auto-detects FASTA ('>' first byte) vs one-sequence-per-line plain text.
inline Corpus parse_fasta(std::istream& in, InvalidBasePolicy policy = InvalidBasePolicy::Strip) {
    Corpus corpus;
    std::unordered_set<std::string> seen;
    int first = in.peek();
    if (first == std::char_traits<char>::eof()) throw data_error("empty input");
    std::string line;
    if (first == '>') {
        std::string id, buf;
        bool have_record = false;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (line[0] == '>') {
                if (have_record) detail::emit_sequence(corpus, seen, id, buf, policy);
                id = line.substr(1);
                auto ws = id.find_first_of(" \t");
                if (ws != std::string::npos) id.resize(ws);
                if (id.empty()) throw data_error("FASTA header with empty id");
                buf.clear();
                have_record = true;
            } else {
                if (!have_record) throw data_error("sequence data before first FASTA header");
                buf += line;
            }
        }
        if (have_record) detail::emit_sequence(corpus, seen, id, buf, policy);
    } else {
        size_t n = 0;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            detail::emit_sequence(corpus, seen, "seq" + std::to_string(n++), line, policy);
        }
    }
    if (corpus.empty()) throw data_error("input contains no usable sequences");
    return corpus;
}

inline Corpus parse_fasta(const std::string& text, InvalidBasePolicy policy = InvalidBasePolicy::Strip) {
    std::istringstream in(text);
    return parse_fasta(in, policy);
}

// The len-k+1 overlapping windows of `seq`, in order.
inline std::vector<std::string> extract_kmers(std::string_view seq, int k) {
    if (k <= 0) throw validation_error("k must be positive");
    if (static_cast<size_t>(k) > seq.size())
        throw validation_error("k exceeds sequence length (" + std::to_string(k) + " > " +
                               std::to_string(seq.size()) + ")");
    std::vector<std::string> out;
    out.reserve(seq.size() - static_cast<size_t>(k) + 1);
    for (size_t i = 0; i + static_cast<size_t>(k) <= seq.size(); ++i)
        out.emplace_back(seq.substr(i, static_cast<size_t>(k)));
    return out;
}

constexpr int kMaxPackedK = 31;  // 2 bits/base in a 64-bit id

// Big-endian 2-bit packing: A=0, C=1, G=2, T=3.
inline uint64_t encode_kmer(std::string_view kmer) {
    if (kmer.empty() || kmer.size() > kMaxPackedK)
        throw validation_error("k-mer length must be in [1, 31]");
    uint64_t code = 0;
    for (char c : kmer) code = (code << 2) | static_cast<uint64_t>(base_code(c));
    return code;
}

inline std::string decode_kmer(uint64_t code, int k) {
    if (k <= 0 || k > kMaxPackedK) throw validation_error("k must be in [1, 31]");
    std::string out(static_cast<size_t>(k), 'A');
    for (int i = k - 1; i >= 0; --i) {
        out[static_cast<size_t>(i)] = code_base(static_cast<int>(code & 3));
        code >>= 2;
    }
    return out;
}

struct KmerVocab {
    int k = 0;
    std::unordered_map<uint64_t, int> id_of_code;  // packed k-mer -> dense id
    std::vector<std::string> kmer_of;              // dense id -> k-mer

    int size() const { return static_cast<int>(kmer_of.size()); }

    int id_of(std::string_view kmer) const {
        auto it = id_of_code.find(encode_kmer(kmer));
        if (it == id_of_code.end()) throw oov_error(std::string(kmer));
        return it->second;
    }

    bool contains(std::string_view kmer) const {
        return id_of_code.count(encode_kmer(kmer)) != 0;
    }
};

// Ids in first-occurrence order over the corpus stream.
inline KmerVocab build_vocab(const Corpus& corpus, int k) {
    if (corpus.empty()) throw validation_error("cannot build vocabulary from empty corpus");
    KmerVocab vocab;
    vocab.k = k;
    for (const auto& seq : corpus.sequences) {
        if (seq.bases.size() < static_cast<size_t>(k))
            throw validation_error("sequence " + seq.id + " shorter than k");
        for (size_t i = 0; i + static_cast<size_t>(k) <= seq.bases.size(); ++i) {
            uint64_t code = encode_kmer(std::string_view(seq.bases).substr(i, static_cast<size_t>(k)));
            auto [it, inserted] = vocab.id_of_code.try_emplace(code, vocab.size());
            if (inserted) vocab.kmer_of.push_back(seq.bases.substr(i, static_cast<size_t>(k)));
        }
    }
    return vocab;
}

struct CorpusSplits {
    Corpus train, val, test;
};

// Deterministic shuffle-split. Sizes: floor per ratio, remainder to train.
inline CorpusSplits split_corpus(const Corpus& corpus, double train_ratio, double val_ratio,
                                 double test_ratio, uint64_t seed) {
    if (train_ratio <= 0 || val_ratio <= 0 || test_ratio <= 0)
        throw validation_error("split ratios must be positive");
    if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
        throw validation_error("split ratios must sum to 1");
    size_t n = corpus.size();
    if (n < 3) throw validation_error("corpus too small to split three ways");

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(derive_seed(seed, 0x73706c69));
    std::shuffle(order.begin(), order.end(), rng);

    // floor for val/test, remainder to train
    size_t n_val = static_cast<size_t>(val_ratio * static_cast<double>(n));
    size_t n_test = static_cast<size_t>(test_ratio * static_cast<double>(n));
    size_t n_train = n - n_val - n_test;

    CorpusSplits splits;
    for (size_t i = 0; i < n; ++i) {
        const auto& s = corpus.sequences[order[i]];
        if (i < n_train)
            splits.train.sequences.push_back(s);
        else if (i < n_train + n_val)
            splits.val.sequences.push_back(s);
        else
            splits.test.sequences.push_back(s);
    }
    return splits;
}

struct SynthConfig {
    int n_refs = 1;
    int length = 100;
    int n_mutants_per_ref = 0;
    double sub_rate = 0.0;
    double indel_rate = 0.0;  // per-base insertion prob and deletion prob, each
    uint64_t seed = 0;
};

namespace detail {

inline char random_base(std::mt19937_64& rng) {
    return code_base(static_cast<int>(rng() & 3));
}

inline std::string mutate(const std::string& ref, double sub_rate, double indel_rate,
                          std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::string out;
    out.reserve(ref.size() + 8);
    for (char c : ref) {
        if (indel_rate > 0 && unif(rng) < indel_rate) out.push_back(random_base(rng));  // insert
        if (indel_rate > 0 && unif(rng) < indel_rate) continue;                          // delete
        if (sub_rate > 0 && unif(rng) < sub_rate) {
            char nb = random_base(rng);
            while (nb == c) nb = random_base(rng);
            out.push_back(nb);
        } else {
            out.push_back(c);
        }
    }
    if (out.empty()) out.push_back(random_base(rng));  // keep records non-empty
    return out;
}

}  // namespace detail

// n_refs uniform random sequences plus mutated copies; pure in (config).
inline Corpus synth_generate(const SynthConfig& cfg) {
    if (cfg.n_refs <= 0) throw validation_error("n_refs must be positive");
    if (cfg.length < 1) throw validation_error("length must be >= 1");
    if (cfg.sub_rate < 0 || cfg.sub_rate >= 1 || cfg.indel_rate < 0 || cfg.indel_rate >= 1)
        throw validation_error("mutation rates must lie in [0, 1)");
    Corpus corpus;
    for (int r = 0; r < cfg.n_refs; ++r) {
        std::mt19937_64 rng(derive_seed(cfg.seed, 0x726566, static_cast<uint64_t>(r)));
        std::string ref(static_cast<size_t>(cfg.length), 'A');
        for (auto& c : ref) c = detail::random_base(rng);
        corpus.sequences.push_back({"ref" + std::to_string(r), ref});
        for (int m = 0; m < cfg.n_mutants_per_ref; ++m) {
            std::mt19937_64 mrng(derive_seed(cfg.seed, 0x6d7574,
                                             (static_cast<uint64_t>(r) << 20) | static_cast<uint64_t>(m)));
            corpus.sequences.push_back({"ref" + std::to_string(r) + "m" + std::to_string(m),
                                        detail::mutate(ref, cfg.sub_rate, cfg.indel_rate, mrng)});
        }
    }
    return corpus;
}

inline std::string to_fasta(const Corpus& corpus) {
    std::string out;
    for (const auto& s : corpus.sequences) {
        out += ">";
        out += s.id;
        out += "\n";
        out += s.bases;
        out += "\n";
    }
    return out;
}

}  // namespace kge
