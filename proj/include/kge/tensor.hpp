#pragma once

// Dense/sparse numeric kernel with a define-by-run tape: forward runs eagerly,
// backward replays hand-written adjoints in reverse. 64-bit floats throughout.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kge/common.hpp"

namespace kge {

struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;  // row-major

    DenseMatrix() = default;
    DenseMatrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {
        if (r < 0 || c < 0) throw validation_error("matrix dims must be non-negative");
    }

    double& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
    double at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }
    double* row(int i) { return data.data() + static_cast<size_t>(i) * cols; }
    const double* row(int i) const { return data.data() + static_cast<size_t>(i) * cols; }
    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }
    bool operator==(const DenseMatrix&) const = default;

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline DenseMatrix glorot_uniform(int rows, int cols, uint64_t seed) {
    DenseMatrix m(rows, cols);
    double a = std::sqrt(6.0 / (rows + cols));
    std::mt19937_64 rng(derive_seed(seed, 0x676c6f72));
    for (auto& v : m.data) v = a * (2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0);
    return m;
}

struct SparseAdjacency {
    int n_rows = 0;
    int n_cols = 0;
    std::vector<int> row_ptr;  // n_rows + 1
    std::vector<int> col_idx;  // sorted within each row
    std::vector<double> values;

    static SparseAdjacency from_triplets(int n_rows, int n_cols,
                                         std::vector<std::tuple<int, int, double>> triplets) {
        for (const auto& [i, j, w] : triplets) {
            if (i < 0 || i >= n_rows || j < 0 || j >= n_cols)
                throw validation_error("triplet index out of range");
            if (!std::isfinite(w)) throw numeric_error("non-finite adjacency weight");
        }
        std::sort(triplets.begin(), triplets.end());
        SparseAdjacency s;
        s.n_rows = n_rows;
        s.n_cols = n_cols;
        s.row_ptr.assign(static_cast<size_t>(n_rows) + 1, 0);
        for (size_t t = 0; t < triplets.size(); ++t) {
            if (t > 0 && std::get<0>(triplets[t]) == std::get<0>(triplets[t - 1]) &&
                std::get<1>(triplets[t]) == std::get<1>(triplets[t - 1]))
                throw validation_error("duplicate adjacency entry");
            s.row_ptr[static_cast<size_t>(std::get<0>(triplets[t])) + 1]++;
            s.col_idx.push_back(std::get<1>(triplets[t]));
            s.values.push_back(std::get<2>(triplets[t]));
        }
        for (int i = 0; i < n_rows; ++i) s.row_ptr[static_cast<size_t>(i) + 1] += s.row_ptr[static_cast<size_t>(i)];
        return s;
    }

    static SparseAdjacency identity(int n) {
        std::vector<std::tuple<int, int, double>> t;
        for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
        return from_triplets(n, n, std::move(t));
    }

    size_t nnz() const { return values.size(); }

    DenseMatrix to_dense() const {
        DenseMatrix d(n_rows, n_cols);
        for (int i = 0; i < n_rows; ++i)
            for (int p = row_ptr[static_cast<size_t>(i)]; p < row_ptr[static_cast<size_t>(i) + 1]; ++p)
                d.at(i, col_idx[static_cast<size_t>(p)]) = values[static_cast<size_t>(p)];
        return d;
    }
};

// D̃^{-1/2} (W + sI) D̃^{-1/2} with D̃_ii = s + Σ_j W_ij. Input must be square
// and symmetric (caller contract); zero-degree rows reduce to the diagonal 1.
inline SparseAdjacency sym_normalize(const SparseAdjacency& adj, double self_loop_weight) {
    if (adj.n_rows != adj.n_cols) throw validation_error("sym_normalize needs a square matrix");
    if (self_loop_weight < 0) throw validation_error("self-loop weight must be non-negative");
    const int n = adj.n_rows;
    std::vector<double> deg(static_cast<size_t>(n), self_loop_weight);
    for (int i = 0; i < n; ++i)
        for (int p = adj.row_ptr[static_cast<size_t>(i)]; p < adj.row_ptr[static_cast<size_t>(i) + 1]; ++p) {
            if (adj.values[static_cast<size_t>(p)] < 0)
                throw validation_error("negative edge weight in adjacency");
            deg[static_cast<size_t>(i)] += adj.values[static_cast<size_t>(p)];
        }

    std::vector<std::tuple<int, int, double>> out;
    for (int i = 0; i < n; ++i) {
        bool diag_seen = false;
        for (int p = adj.row_ptr[static_cast<size_t>(i)]; p < adj.row_ptr[static_cast<size_t>(i) + 1]; ++p) {
            int j = adj.col_idx[static_cast<size_t>(p)];
            double w = adj.values[static_cast<size_t>(p)];
            if (j == i) {
                w += self_loop_weight;
                diag_seen = true;
            }
            if (w != 0)
                out.push_back({i, j, w / std::sqrt(deg[static_cast<size_t>(i)] * deg[static_cast<size_t>(j)])});
        }
        if (!diag_seen && self_loop_weight != 0)
            out.push_back({i, i, self_loop_weight / deg[static_cast<size_t>(i)]});
    }
    return SparseAdjacency::from_triplets(n, n, std::move(out));
}

// ---- eager primitives ----

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) throw validation_error("matmul shape mismatch");
    DenseMatrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* ar = a.row(i);
        double* cr = c.row(i);
        for (int k = 0; k < a.cols; ++k) {
            double av = ar[k];
            if (av == 0) continue;
            const double* br = b.row(k);
            for (int j = 0; j < b.cols; ++j) cr[j] += av * br[j];
        }
    }
    return c;
}

inline DenseMatrix spmm(const SparseAdjacency& s, const DenseMatrix& x) {
    if (s.n_cols != x.rows) throw validation_error("spmm shape mismatch");
    DenseMatrix y(s.n_rows, x.cols);
    for (int i = 0; i < s.n_rows; ++i) {
        double* yr = y.row(i);
        for (int p = s.row_ptr[static_cast<size_t>(i)]; p < s.row_ptr[static_cast<size_t>(i) + 1]; ++p) {
            double w = s.values[static_cast<size_t>(p)];
            const double* xr = x.row(s.col_idx[static_cast<size_t>(p)]);
            for (int j = 0; j < x.cols; ++j) yr[j] += w * xr[j];
        }
    }
    return y;
}

inline double sigmoid_scalar(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// log(1 + e^x) without overflow; -log σ(x) = softplus(-x)
inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline DenseMatrix relu(const DenseMatrix& x) {
    DenseMatrix y = x;
    for (auto& v : y.data) v = v > 0 ? v : 0.0;
    return y;
}

inline DenseMatrix sigmoid(const DenseMatrix& x) {
    DenseMatrix y = x;
    for (auto& v : y.data) v = sigmoid_scalar(v);
    return y;
}

// ---- tape ----

struct EdgeTarget {
    int i;
    int j;
    double w;
};

class Tape {
public:
    int input(DenseMatrix v) { return push(OpKind::Input, std::move(v)); }

    int param(DenseMatrix v) {
        int id = push(OpKind::Param, std::move(v));
        nodes_[static_cast<size_t>(id)].needs_grad = true;
        return id;
    }

    int matmul(int a, int b) {
        int id = push(OpKind::MatMul, kge::matmul(val(a), val(b)), a, b);
        return id;
    }

    int spmm(const SparseAdjacency* adj, int a) {
        if (adj == nullptr) throw validation_error("spmm needs an adjacency");
        int id = push(OpKind::Spmm, kge::spmm(*adj, val(a)), a);
        nodes_[static_cast<size_t>(id)].adj = adj;
        return id;
    }

    int relu(int a) { return push(OpKind::Relu, kge::relu(val(a)), a); }
    int sigmoid(int a) { return push(OpKind::Sigmoid, kge::sigmoid(val(a)), a); }

    int add(int a, int b) {
        if (!val(a).same_shape(val(b))) throw validation_error("add shape mismatch");
        DenseMatrix y = val(a);
        for (size_t t = 0; t < y.data.size(); ++t) y.data[t] += val(b).data[t];
        return push(OpKind::Add, std::move(y), a, b);
    }

    int add_row_bias(int a, int bias) {
        const auto& x = val(a);
        const auto& b = val(bias);
        if (b.rows != 1 || b.cols != x.cols) throw validation_error("bias must be 1 x cols");
        DenseMatrix y = x;
        for (int i = 0; i < y.rows; ++i) {
            double* r = y.row(i);
            for (int j = 0; j < y.cols; ++j) r[j] += b.at(0, j);
        }
        return push(OpKind::AddRowBias, std::move(y), a, bias);
    }

    int gather_rows(int a, std::vector<int> rows) {
        const auto& x = val(a);
        DenseMatrix y(static_cast<int>(rows.size()), x.cols);
        for (size_t r = 0; r < rows.size(); ++r) {
            if (rows[r] < 0 || rows[r] >= x.rows) throw validation_error("gather row out of range");
            std::copy_n(x.row(rows[r]), x.cols, y.row(static_cast<int>(r)));
        }
        int id = push(OpKind::GatherRows, std::move(y), a);
        nodes_[static_cast<size_t>(id)].rows = std::move(rows);
        return id;
    }

    int scale(int a, double c) {
        DenseMatrix y = val(a);
        for (auto& v : y.data) v *= c;
        int id = push(OpKind::Scale, std::move(y), a);
        nodes_[static_cast<size_t>(id)].scalar = c;
        return id;
    }

    int sum(int a) {
        DenseMatrix y(1, 1);
        for (double v : val(a).data) y.data[0] += v;
        return push(OpKind::Sum, std::move(y), a);
    }

    // Σ (a - target)^2 over all entries
    int mse_sum(int a, DenseMatrix target) {
        const auto& x = val(a);
        if (!x.same_shape(target)) throw validation_error("mse target shape mismatch");
        DenseMatrix y(1, 1);
        for (size_t t = 0; t < x.data.size(); ++t) {
            double d = x.data[t] - target.data[t];
            y.data[0] += d * d;
        }
        int id = push(OpKind::MseSum, std::move(y), a);
        nodes_[static_cast<size_t>(id)].target = std::move(target);
        return id;
    }

    // row-wise x / (1 + ||x||), then clamp each row norm to <= 1 - 1e-5
    int project_ball(int a) {
        const auto& x = val(a);
        DenseMatrix y = x;
        for (int i = 0; i < y.rows; ++i) {
            double* r = y.row(i);
            double n2 = 0;
            for (int j = 0; j < y.cols; ++j) n2 += r[j] * r[j];
            double norm = std::sqrt(n2);
            double f = 1.0 / (1.0 + norm);
            if (norm * f > kBallLimit) f = kBallLimit / norm;
            for (int j = 0; j < y.cols; ++j) r[j] *= f;
        }
        return push(OpKind::ProjectBall, std::move(y), a);
    }

    // per-row Poincaré distance between matching rows of u and v -> P x 1
    int poincare_rows(int u, int v) {
        const auto& a = val(u);
        const auto& b = val(v);
        if (!a.same_shape(b)) throw validation_error("poincare operands must match");
        DenseMatrix y(a.rows, 1);
        for (int i = 0; i < a.rows; ++i) y.at(i, 0) = poincare_forward(a.row(i), b.row(i), a.cols).dist;
        return push(OpKind::PoincareRows, std::move(y), u, v);
    }

    // mean over positive pairs of -log σ(z_i·z_j) - Σ_l log σ(-z_i·z_l)
    int contrastive(int z, std::vector<std::pair<int, int>> pos, std::vector<std::vector<int>> negs) {
        const auto& zm = val(z);
        if (pos.empty()) throw validation_error("contrastive loss needs positive pairs");
        if (negs.size() != pos.size()) throw validation_error("one negative list per positive pair");
        auto dot_rows = [&](int i, int j) {
            if (i < 0 || i >= zm.rows || j < 0 || j >= zm.rows)
                throw validation_error("pair id out of range");
            double s = 0;
            for (int d = 0; d < zm.cols; ++d) s += zm.at(i, d) * zm.at(j, d);
            return s;
        };
        double total = 0;
        for (size_t p = 0; p < pos.size(); ++p) {
            total += softplus(-dot_rows(pos[p].first, pos[p].second));
            for (int l : negs[p]) total += softplus(dot_rows(pos[p].first, l));
        }
        DenseMatrix y(1, 1);
        y.data[0] = total / static_cast<double>(pos.size());
        int id = push(OpKind::Contrastive, std::move(y), z);
        nodes_[static_cast<size_t>(id)].pairs = std::move(pos);
        nodes_[static_cast<size_t>(id)].neg_lists = std::move(negs);
        return id;
    }

    // Σ_e |w_e - z_i·z_j|
    int gae_edge_l1(int z, std::vector<EdgeTarget> edges) {
        const auto& zm = val(z);
        DenseMatrix y(1, 1);
        for (const auto& e : edges) {
            if (e.i < 0 || e.i >= zm.rows || e.j < 0 || e.j >= zm.rows)
                throw validation_error("edge id out of range");
            double s = 0;
            for (int d = 0; d < zm.cols; ++d) s += zm.at(e.i, d) * zm.at(e.j, d);
            y.data[0] += std::fabs(e.w - s);
        }
        int id = push(OpKind::GaeEdgeL1, std::move(y), z);
        nodes_[static_cast<size_t>(id)].edges = std::move(edges);
        return id;
    }

    const DenseMatrix& value(int id) const { return val(id); }

    const DenseMatrix& grad(int id) const {
        if (!backward_done_) throw validation_error("grad requested before backward");
        return nodes_[check(id)].grad;
    }

    void backward(int loss_id) {
        const auto& loss = val(loss_id);
        if (loss.rows != 1 || loss.cols != 1) throw validation_error("backward needs a scalar loss");
        if (backward_done_) throw validation_error("backward already run on this tape");
        for (auto& n : nodes_) n.grad = DenseMatrix(n.value.rows, n.value.cols);
        nodes_[static_cast<size_t>(loss_id)].grad.data[0] = 1.0;
        for (int id = loss_id; id >= 0; --id) backward_node(id);
        backward_done_ = true;
    }

private:
    static constexpr double kBallLimit = 1.0 - 1e-5;
    // cusp guard: caps 1/sqrt(arg^2-1) so near-coincident points cannot blow up updates
    static constexpr double kArgFloor = 1.0 + 1e-9;

    enum class OpKind {
        Input, Param, MatMul, Spmm, Relu, Sigmoid, Add, AddRowBias, GatherRows,
        Scale, Sum, MseSum, ProjectBall, PoincareRows, Contrastive, GaeEdgeL1
    };

    struct Node {
        OpKind kind;
        int a = -1, b = -1;
        DenseMatrix value;
        DenseMatrix grad;
        bool needs_grad = false;
        const SparseAdjacency* adj = nullptr;
        std::vector<int> rows;
        double scalar = 0;
        DenseMatrix target;
        std::vector<std::pair<int, int>> pairs;
        std::vector<std::vector<int>> neg_lists;
        std::vector<EdgeTarget> edges;
    };

    std::vector<Node> nodes_;
    bool backward_done_ = false;

    size_t check(int id) const {
        if (id < 0 || static_cast<size_t>(id) >= nodes_.size())
            throw validation_error("invalid tape node");
        return static_cast<size_t>(id);
    }
    const DenseMatrix& val(int id) const { return nodes_[check(id)].value; }

    int push(OpKind kind, DenseMatrix v, int a = -1, int b = -1) {
        if (backward_done_) throw validation_error("tape is frozen after backward");
        Node n;
        n.kind = kind;
        n.a = a;
        n.b = b;
        n.value = std::move(v);
        if (a >= 0) check(a);
        if (b >= 0) check(b);
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    struct PoincareParts {
        double dist, q, sa, sb, arg;
    };
    static PoincareParts poincare_forward(const double* u, const double* v, int d) {
        PoincareParts p{};
        double nu = 0, nv = 0;
        for (int t = 0; t < d; ++t) {
            double diff = u[t] - v[t];
            p.q += diff * diff;
            nu += u[t] * u[t];
            nv += v[t] * v[t];
        }
        p.sa = 1.0 - nu;
        p.sb = 1.0 - nv;
        p.arg = 1.0 + 2.0 * p.q / (p.sa * p.sb);
        if (p.arg < 1.0) p.arg = 1.0;
        p.dist = std::acosh(p.arg);
        return p;
    }

    void backward_node(int id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (n.grad.data.empty()) return;
        auto& g = n.grad;
        switch (n.kind) {
            case OpKind::Input:
            case OpKind::Param:
                return;
            case OpKind::MatMul: {
                auto& A = nodes_[static_cast<size_t>(n.a)];
                auto& B = nodes_[static_cast<size_t>(n.b)];
                // Ā += G Bᵀ
                for (int i = 0; i < A.value.rows; ++i)
                    for (int k = 0; k < A.value.cols; ++k) {
                        double s = 0;
                        for (int j = 0; j < B.value.cols; ++j) s += g.at(i, j) * B.value.at(k, j);
                        A.grad.at(i, k) += s;
                    }
                // B̄ += Aᵀ G
                for (int k = 0; k < B.value.rows; ++k)
                    for (int j = 0; j < B.value.cols; ++j) {
                        double s = 0;
                        for (int i = 0; i < A.value.rows; ++i) s += A.value.at(i, k) * g.at(i, j);
                        B.grad.at(k, j) += s;
                    }
                return;
            }
            case OpKind::Spmm: {
                auto& X = nodes_[static_cast<size_t>(n.a)];
                const auto& s = *n.adj;
                for (int i = 0; i < s.n_rows; ++i)
                    for (int p = s.row_ptr[static_cast<size_t>(i)]; p < s.row_ptr[static_cast<size_t>(i) + 1]; ++p) {
                        double w = s.values[static_cast<size_t>(p)];
                        double* xg = X.grad.row(s.col_idx[static_cast<size_t>(p)]);
                        const double* gr = g.row(i);
                        for (int j = 0; j < X.value.cols; ++j) xg[j] += w * gr[j];
                    }
                return;
            }
            case OpKind::Relu: {
                auto& A = nodes_[static_cast<size_t>(n.a)];
                for (size_t t = 0; t < g.data.size(); ++t)
                    if (A.value.data[t] > 0) A.grad.data[t] += g.data[t];
                return;
            }
            case OpKind::Sigmoid: {
                auto& A = nodes_[static_cast<size_t>(n.a)];
                for (size_t t = 0; t < g.data.size(); ++t) {
                    double y = n.value.data[t];
                    A.grad.data[t] += g.data[t] * y * (1.0 - y);
                }
                return;
            }
            case OpKind::Add: {
                auto& A = nodes_[static_cast<size_t>(n.a)];
                auto& B = nodes_[static_cast<size_t>(n.b)];
                for (size_t t = 0; t < g.data.size(); ++t) {
                    A.grad.data[t] += g.data[t];
                    B.grad.data[t] += g.data[t];
                }
                return;
            }
            case OpKind::AddRowBias: {
                auto& A = nodes_[static_cast<size_t>(n.a)];
                auto& B = nodes_[static_cast<size_t>(n.b)];
                for (size_t t = 0; t < g.data.size(); ++t) A.grad.data[t] += g.data[t];
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < g.cols; ++j) B.grad.at(0, j) += g.at(i, j);
                return;
            }
            case OpKind::GatherRows: {
                auto& A = nodes_[static_cast<size_t>(n.a)];
                for (size_t r = 0; r < n.rows.size(); ++r) {
                    double* ag = A.grad.row(n.rows[r]);
                    const double* gr = g.row(static_cast<int>(r));
                    for (int j = 0; j < g.cols; ++j) ag[j] += gr[j];
                }
                return;
            }
            case OpKind::Scale: {
                auto& A = nodes_[static_cast<size_t>(n.a)];
                for (size_t t = 0; t < g.data.size(); ++t) A.grad.data[t] += n.scalar * g.data[t];
                return;
            }
            case OpKind::Sum: {
                auto& A = nodes_[static_cast<size_t>(n.a)];
                for (auto& v : A.grad.data) v += g.data[0];
                return;
            }
            case OpKind::MseSum: {
                auto& A = nodes_[static_cast<size_t>(n.a)];
                for (size_t t = 0; t < A.value.data.size(); ++t)
                    A.grad.data[t] += g.data[0] * 2.0 * (A.value.data[t] - n.target.data[t]);
                return;
            }
            case OpKind::ProjectBall: {
                auto& A = nodes_[static_cast<size_t>(n.a)];
                const auto& x = A.value;
                for (int i = 0; i < x.rows; ++i) {
                    const double* xr = x.row(i);
                    const double* gr = g.row(i);
                    double* ag = A.grad.row(i);
                    double n2 = 0, gx = 0;
                    for (int j = 0; j < x.cols; ++j) {
                        n2 += xr[j] * xr[j];
                        gx += gr[j] * xr[j];
                    }
                    double r = std::sqrt(n2);
                    if (r < 1e-300) {
                        for (int j = 0; j < x.cols; ++j) ag[j] += gr[j];
                    } else if (r / (1.0 + r) > kBallLimit) {
                        // y = c x / r
                        double c = kBallLimit;
                        for (int j = 0; j < x.cols; ++j)
                            ag[j] += c * (gr[j] / r - xr[j] * gx / (r * r * r));
                    } else {
                        double f = 1.0 + r;
                        for (int j = 0; j < x.cols; ++j)
                            ag[j] += gr[j] / f - xr[j] * gx / (r * f * f);
                    }
                }
                return;
            }
            case OpKind::PoincareRows: {
                auto& U = nodes_[static_cast<size_t>(n.a)];
                auto& V = nodes_[static_cast<size_t>(n.b)];
                int d = U.value.cols;
                for (int i = 0; i < U.value.rows; ++i) {
                    double go = g.at(i, 0);
                    if (go == 0) continue;
                    const double* u = U.value.row(i);
                    const double* v = V.value.row(i);
                    auto p = poincare_forward(u, v, d);
                    if (p.arg <= 1.0) continue;  // clamped flat region
                    double arg = std::max(p.arg, kArgFloor);
                    double dacosh = 1.0 / std::sqrt(arg * arg - 1.0);
                    double common = go * dacosh * 4.0 / (p.sa * p.sb);
                    double* ug = U.grad.row(i);
                    double* vg = V.grad.row(i);
                    for (int t = 0; t < d; ++t) {
                        ug[t] += common * ((u[t] - v[t]) + p.q / p.sa * u[t]);
                        vg[t] += common * ((v[t] - u[t]) + p.q / p.sb * v[t]);
                    }
                }
                return;
            }
            case OpKind::Contrastive: {
                auto& Z = nodes_[static_cast<size_t>(n.a)];
                const auto& z = Z.value;
                double inv = g.data[0] / static_cast<double>(n.pairs.size());
                auto push_pair = [&](int i, int j, double coeff) {
                    double* gi = Z.grad.row(i);
                    double* gj = Z.grad.row(j);
                    const double* zi = z.row(i);
                    const double* zj = z.row(j);
                    for (int t = 0; t < z.cols; ++t) {
                        gi[t] += coeff * zj[t];
                        gj[t] += coeff * zi[t];
                    }
                };
                for (size_t p = 0; p < n.pairs.size(); ++p) {
                    auto [i, j] = n.pairs[p];
                    double dot = 0;
                    for (int t = 0; t < z.cols; ++t) dot += z.at(i, t) * z.at(j, t);
                    push_pair(i, j, inv * (sigmoid_scalar(dot) - 1.0));
                    for (int l : n.neg_lists[p]) {
                        double nd = 0;
                        for (int t = 0; t < z.cols; ++t) nd += z.at(i, t) * z.at(l, t);
                        push_pair(i, l, inv * sigmoid_scalar(nd));
                    }
                }
                return;
            }
            case OpKind::GaeEdgeL1: {
                auto& Z = nodes_[static_cast<size_t>(n.a)];
                const auto& z = Z.value;
                for (const auto& e : n.edges) {
                    double dot = 0;
                    for (int t = 0; t < z.cols; ++t) dot += z.at(e.i, t) * z.at(e.j, t);
                    double s = dot > e.w ? 1.0 : (dot < e.w ? -1.0 : 0.0);
                    double coeff = g.data[0] * s;
                    double* gi = Z.grad.row(e.i);
                    double* gj = Z.grad.row(e.j);
                    for (int t = 0; t < z.cols; ++t) {
                        gi[t] += coeff * z.at(e.j, t);
                        gj[t] += coeff * z.at(e.i, t);
                    }
                }
                return;
            }
        }
    }
};

// ---- optimizer ----

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    int64_t step = 0;
    std::vector<DenseMatrix> m, v;
};

inline void adam_step(std::vector<DenseMatrix*> params, const std::vector<const DenseMatrix*>& grads,
                      AdamState& state, const AdamConfig& cfg,
                      const std::vector<std::string>& names = {}) {
    if (params.size() != grads.size()) throw validation_error("params/grads count mismatch");
    if (state.m.empty()) {
        for (auto* p : params) {
            state.m.emplace_back(p->rows, p->cols);
            state.v.emplace_back(p->rows, p->cols);
        }
    }
    if (state.m.size() != params.size()) throw validation_error("optimizer state size mismatch");

    state.step += 1;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (size_t p = 0; p < params.size(); ++p) {
        auto& theta = *params[p];
        const auto& g = *grads[p];
        if (!theta.same_shape(g)) throw validation_error("gradient shape mismatch");
        if (!g.all_finite()) {
            std::string name = p < names.size() ? names[p] : "param" + std::to_string(p);
            throw numeric_error("non-finite gradient for " + name);
        }
        for (size_t t = 0; t < theta.data.size(); ++t) {
            double gv = g.data[t];
            double& m = state.m[p].data[t];
            double& v = state.v[p].data[t];
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * gv;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * gv * gv;
            theta.data[t] -= cfg.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.eps);
        }
    }
}

// ---- finite-difference checker ----

// loss_at: params -> scalar. Central differences against the supplied analytic
// gradients; relative error |a - n| / max(|n|, 1e-5). sample_per_param = 0
// checks every coordinate.
template <typename LossFn>
inline double grad_check(LossFn&& loss_at, std::vector<DenseMatrix> params,
                         const std::vector<DenseMatrix>& analytic, double eps = 1e-5,
                         int sample_per_param = 0, uint64_t seed = 1) {
    if (analytic.size() != params.size()) throw validation_error("analytic gradient count mismatch");
    std::mt19937_64 rng(derive_seed(seed, 0x67636b));
    double worst = 0;
    for (size_t p = 0; p < params.size(); ++p) {
        if (!params[p].same_shape(analytic[p])) throw validation_error("gradient shape mismatch");
        size_t total = params[p].data.size();
        std::vector<size_t> coords;
        if (sample_per_param <= 0 || static_cast<size_t>(sample_per_param) >= total) {
            coords.resize(total);
            for (size_t t = 0; t < total; ++t) coords[t] = t;
        } else {
            for (int t = 0; t < sample_per_param; ++t)
                coords.push_back(static_cast<size_t>(rng() % total));
        }
        for (size_t t : coords) {
            double keep = params[p].data[t];
            params[p].data[t] = keep + eps;
            double up = loss_at(static_cast<const std::vector<DenseMatrix>&>(params));
            params[p].data[t] = keep - eps;
            double dn = loss_at(static_cast<const std::vector<DenseMatrix>&>(params));
            params[p].data[t] = keep;
            double numeric = (up - dn) / (2.0 * eps);
            double rel = std::fabs(analytic[p].data[t] - numeric) / std::max(std::fabs(numeric), 1e-5);
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace kge
