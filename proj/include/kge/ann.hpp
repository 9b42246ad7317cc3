#pragma once

// Inverted-file ANN index over L2-normalized vectors. Coarse k-means
// quantizer, flat postings, inner-product scoring (= cosine).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "kge/common.hpp"

namespace kge::ann {

inline double uniform_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct SearchHit {
    int id;
    double score;  // cosine, in [-1, 1]
};

struct KmeansResult {
    int nlist = 0;
    int dim = 0;
    std::vector<double> centroids;          // nlist x dim row-major
    std::vector<double> objective_history;  // sum of squared distances per iteration
};

namespace detail {

inline double sqdist(const double* a, const double* b, int d) {
    double s = 0;
    for (int i = 0; i < d; ++i) {
        double t = a[i] - b[i];
        s += t * t;
    }
    return s;
}

inline double dot(const double* a, const double* b, int d) {
    double s = 0;
    for (int i = 0; i < d; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding. Empty clusters are reseeded to
// the point farthest from its assigned centroid.
inline KmeansResult kmeans(const std::vector<double>& vectors, int n, int dim, int nlist,
                           int iters, uint64_t seed) {
    if (nlist < 1) throw validation_error("nlist must be >= 1");
    if (nlist > n) throw validation_error("nlist exceeds number of vectors");
    if (iters < 1) throw validation_error("iters must be >= 1");

    std::mt19937_64 rng(derive_seed(seed, 0x6b6d6e73));
    KmeansResult res;
    res.nlist = nlist;
    res.dim = dim;
    res.centroids.resize(static_cast<size_t>(nlist) * dim);

    // k-means++ init
    std::vector<double> d2(static_cast<size_t>(n), 0.0);
    int first = static_cast<int>(rng() % static_cast<uint64_t>(n));
    std::copy_n(vectors.data() + static_cast<size_t>(first) * dim, dim, res.centroids.begin());
    for (int i = 0; i < n; ++i)
        d2[static_cast<size_t>(i)] = detail::sqdist(vectors.data() + static_cast<size_t>(i) * dim,
                                                    res.centroids.data(), dim);
    for (int c = 1; c < nlist; ++c) {
        double total = 0;
        for (double v : d2) total += v;
        int pick;
        if (total <= 0) {
            pick = static_cast<int>(rng() % static_cast<uint64_t>(n));
        } else {
            double r = uniform_double(rng) * total;
            double acc = 0;
            pick = n - 1;
            for (int i = 0; i < n; ++i) {
                acc += d2[static_cast<size_t>(i)];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        }
        double* cen = res.centroids.data() + static_cast<size_t>(c) * dim;
        std::copy_n(vectors.data() + static_cast<size_t>(pick) * dim, dim, cen);
        for (int i = 0; i < n; ++i) {
            double nd = detail::sqdist(vectors.data() + static_cast<size_t>(i) * dim, cen, dim);
            if (nd < d2[static_cast<size_t>(i)]) d2[static_cast<size_t>(i)] = nd;
        }
    }

    std::vector<int> assign(static_cast<size_t>(n), 0);
    std::vector<int> counts(static_cast<size_t>(nlist), 0);
    std::vector<double> sums(static_cast<size_t>(nlist) * dim, 0.0);
    for (int it = 0; it < iters; ++it) {
        // assignment + objective
        double obj = 0;
        for (int i = 0; i < n; ++i) {
            const double* x = vectors.data() + static_cast<size_t>(i) * dim;
            int best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (int c = 0; c < nlist; ++c) {
                double d = detail::sqdist(x, res.centroids.data() + static_cast<size_t>(c) * dim, dim);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            assign[static_cast<size_t>(i)] = best;
            obj += bd;
        }
        res.objective_history.push_back(obj);

        // update
        std::fill(counts.begin(), counts.end(), 0);
        std::fill(sums.begin(), sums.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            int c = assign[static_cast<size_t>(i)];
            counts[static_cast<size_t>(c)]++;
            const double* x = vectors.data() + static_cast<size_t>(i) * dim;
            double* s = sums.data() + static_cast<size_t>(c) * dim;
            for (int j = 0; j < dim; ++j) s[j] += x[j];
        }
        for (int c = 0; c < nlist; ++c) {
            if (counts[static_cast<size_t>(c)] > 0) {
                double inv = 1.0 / counts[static_cast<size_t>(c)];
                double* cen = res.centroids.data() + static_cast<size_t>(c) * dim;
                const double* s = sums.data() + static_cast<size_t>(c) * dim;
                for (int j = 0; j < dim; ++j) cen[j] = s[j] * inv;
            } else {
                // reseed to the point farthest from its own centroid
                int far = 0;
                double fd = -1;
                for (int i = 0; i < n; ++i) {
                    double d = detail::sqdist(
                        vectors.data() + static_cast<size_t>(i) * dim,
                        res.centroids.data() + static_cast<size_t>(assign[static_cast<size_t>(i)]) * dim,
                        dim);
                    if (d > fd) {
                        fd = d;
                        far = i;
                    }
                }
                std::copy_n(vectors.data() + static_cast<size_t>(far) * dim, dim,
                            res.centroids.begin() + static_cast<size_t>(c) * dim);
            }
        }
    }
    return res;
}

struct IvfIndex {
    int n = 0;
    int dim = 0;
    int nlist = 0;
    std::vector<double> centroids;          // nlist x dim
    std::vector<std::vector<int>> postings; // per-cell id lists
    std::vector<double> vectors;            // n x dim, L2-normalized

    static int default_nlist(int n) {
        return std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))));
    }
    int default_nprobe() const { return std::max(1, (nlist + 7) / 8); }
};

inline IvfIndex build(const std::vector<double>& raw, int n, int dim, int nlist, uint64_t seed,
                      int kmeans_iters = 10) {
    if (n < 1) throw validation_error("index needs at least one vector");
    if (static_cast<size_t>(n) * dim != raw.size()) throw validation_error("vector buffer size mismatch");

    IvfIndex index;
    index.n = n;
    index.dim = dim;
    index.vectors.resize(raw.size());
    for (int i = 0; i < n; ++i) {
        const double* x = raw.data() + static_cast<size_t>(i) * dim;
        double norm = std::sqrt(detail::dot(x, x, dim));
        if (norm == 0) throw data_error("cannot index a zero vector (id " + std::to_string(i) + ")");
        double inv = 1.0 / norm;
        double* out = index.vectors.data() + static_cast<size_t>(i) * dim;
        for (int j = 0; j < dim; ++j) out[j] = x[j] * inv;
    }

    // All-identical inputs break the quantizer; index them flat.
    bool identical = true;
    for (int i = 1; i < n && identical; ++i)
        identical = detail::sqdist(index.vectors.data(),
                                   index.vectors.data() + static_cast<size_t>(i) * dim, dim) == 0;
    index.nlist = identical ? 1 : std::min(nlist, n);
    if (index.nlist < 1) index.nlist = 1;

    auto km = kmeans(index.vectors, n, dim, index.nlist, kmeans_iters, seed);
    index.centroids = std::move(km.centroids);
    index.postings.assign(static_cast<size_t>(index.nlist), {});
    for (int i = 0; i < n; ++i) {
        const double* x = index.vectors.data() + static_cast<size_t>(i) * dim;
        int best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int c = 0; c < index.nlist; ++c) {
            double d = detail::sqdist(x, index.centroids.data() + static_cast<size_t>(c) * dim, dim);
            if (d < bd) {
                bd = d;
                best = c;
            }
        }
        index.postings[static_cast<size_t>(best)].push_back(i);
    }
    return index;
}

// Top-n by inner product over the nprobe nearest cells. Ties broken by
// ascending id. `exclude_id` drops the query's own entry when it is indexed.
inline std::vector<SearchHit> search(const IvfIndex& index, const double* query, int n, int nprobe,
                                     int exclude_id = -1) {
    if (n < 1) throw validation_error("n must be >= 1");
    if (nprobe < 1 || nprobe > index.nlist) throw validation_error("nprobe must lie in [1, nlist]");

    std::vector<double> q(query, query + index.dim);
    double norm = std::sqrt(detail::dot(q.data(), q.data(), index.dim));
    if (norm > 0) {
        for (auto& v : q) v /= norm;
    }

    // nprobe nearest cells by centroid distance
    std::vector<std::pair<double, int>> cells(static_cast<size_t>(index.nlist));
    for (int c = 0; c < index.nlist; ++c)
        cells[static_cast<size_t>(c)] = {
            detail::sqdist(q.data(), index.centroids.data() + static_cast<size_t>(c) * index.dim,
                           index.dim),
            c};
    std::partial_sort(cells.begin(), cells.begin() + nprobe, cells.end());

    std::vector<SearchHit> hits;
    for (int p = 0; p < nprobe; ++p) {
        for (int id : index.postings[static_cast<size_t>(cells[static_cast<size_t>(p)].second)]) {
            if (id == exclude_id) continue;
            double score =
                detail::dot(q.data(), index.vectors.data() + static_cast<size_t>(id) * index.dim,
                            index.dim);
            hits.push_back({id, score});
        }
    }
    auto better = [](const SearchHit& a, const SearchHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    };
    if (static_cast<size_t>(n) < hits.size()) {
        std::partial_sort(hits.begin(), hits.begin() + n, hits.end(), better);
        hits.resize(static_cast<size_t>(n));
    } else {
        std::sort(hits.begin(), hits.end(), better);
    }
    return hits;
}

}  // namespace kge::ann
