#pragma once

// Test-only reference implementations, kept independent of the library
// paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

// Bottom-up full-table Levenshtein (the library uses two rows).
inline int edit_distance_table(const std::string& a, const std::string& b) {
    size_t m = a.size(), n = b.size();
    std::vector<std::vector<int>> d(m + 1, std::vector<int>(n + 1));
    for (size_t i = 0; i <= m; ++i) d[i][0] = static_cast<int>(i);
    for (size_t j = 0; j <= n; ++j) d[0][j] = static_cast<int>(j);
    for (size_t i = 1; i <= m; ++i)
        for (size_t j = 1; j <= n; ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                                d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    return d[m][n];
}

// Top-down recursion over (i, j) prefixes; memoized so length-8 pairs stay fast.
inline int edit_distance_recursive(const std::string& a, const std::string& b) {
    size_t m = a.size(), n = b.size();
    std::vector<int> memo((m + 1) * (n + 1), -1);
    auto idx = [n](size_t i, size_t j) { return i * (n + 1) + j; };
    auto rec = [&](auto&& self, size_t i, size_t j) -> int {
        if (i == 0) return static_cast<int>(j);
        if (j == 0) return static_cast<int>(i);
        int& slot = memo[idx(i, j)];
        if (slot >= 0) return slot;
        int subst = self(self, i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1);
        int del = self(self, i - 1, j) + 1;
        int ins = self(self, i, j - 1) + 1;
        return slot = std::min({subst, del, ins});
    };
    return rec(rec, m, n);
}

// Exact top-n by cosine for one query over row-major vectors, self excluded.
inline std::vector<int> brute_force_top_cosine(const std::vector<double>& vecs, int n_rows, int dim,
                                               int query_row, int n) {
    auto dot = [&](int a, int b) {
        double s = 0;
        for (int d = 0; d < dim; ++d)
            s += vecs[static_cast<size_t>(a) * dim + d] * vecs[static_cast<size_t>(b) * dim + d];
        return s;
    };
    auto norm = [&](int a) { return std::sqrt(dot(a, a)); };
    std::vector<std::pair<double, int>> scored;
    double nq = norm(query_row);
    for (int i = 0; i < n_rows; ++i) {
        if (i == query_row) continue;
        scored.push_back({dot(query_row, i) / (nq * norm(i)), i});
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<int> ids;
    for (int i = 0; i < n && i < static_cast<int>(scored.size()); ++i) ids.push_back(scored[static_cast<size_t>(i)].second);
    return ids;
}

// Regularized incomplete gamma, series + continued fraction.
inline double gamma_p(double a, double x) {
    if (x < 0 || a <= 0) throw std::invalid_argument("gamma_p domain");
    if (x == 0) return 0;
    double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - gln);
    }
    // continued fraction for Q, return 1 - Q
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    double q = std::exp(-x + a * std::log(x) - gln) * h;
    return 1.0 - q;
}

// Goodness-of-fit p-value for observed counts against expected probabilities.
inline double chi_square_p_value(const std::vector<int64_t>& observed,
                                 const std::vector<double>& probs) {
    if (observed.size() != probs.size()) throw std::invalid_argument("chi-square size mismatch");
    int64_t total = 0;
    for (auto c : observed) total += c;
    double chi2 = 0;
    int df = 0;
    for (size_t i = 0; i < observed.size(); ++i) {
        double expected = probs[i] * static_cast<double>(total);
        if (expected <= 0) continue;
        double diff = static_cast<double>(observed[i]) - expected;
        chi2 += diff * diff / expected;
        ++df;
    }
    df -= 1;
    if (df < 1) return 1.0;
    return 1.0 - gamma_p(df / 2.0, chi2 / 2.0);
}

}  // namespace oracle
