#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dising/errors.hpp"
#include "dising/matrix.hpp"
#include "dising/model.hpp"
#include "dising/rng.hpp"

namespace dising {

/// CUT(R, C, d): equal to d on R x C and zero elsewhere.
struct CutMatrix {
    std::vector<int> rows; // sorted, nonempty
    std::vector<int> cols; // sorted, nonempty
    double coeff = 0.0;
};

enum class CutSearchMode { Exact, Sampled };

/**
 * J = sum_t CUT(R_t, C_t, d_t) + W over the matrix as given. `diag_shift` is a
 * constant energy added by every downstream profile computation; fk_decompose
 * leaves it zero, the estimator sets it when it strips the diagonal before
 * decomposing.
 */
struct CutDecomposition {
    int n = 0;
    double eps_used = 0.0;
    double diag_shift = 0.0;
    std::vector<CutMatrix> cuts;

    // diagnostics of the peeling run
    double source_l2 = 0.0;  // Frobenius norm of the decomposed matrix
    double claimed_error = 0.0; // 4 * eps * n * source_l2
    bool stopped_by_width_cap = false;
    std::vector<double> step_values;     // |W_t(S,T)| of each accepted cut
    std::vector<double> step_potentials; // ||W_t||_2^2 after each subtraction
    std::optional<double> certified_error; // exact inf->1 norm of W, when computed

    int width() const { return static_cast<int>(cuts.size()); }

    double coefficient_length() const {
        double s = 0.0;
        for (const auto& c : cuts) s += c.coeff * c.coeff;
        return std::sqrt(s);
    }
};

/// Width above which the peeling loop declares the cut-norm subroutine broken.
inline int width_cap(double eps) {
    return static_cast<int>(std::ceil(std::min(27.0 / (eps * eps), 1e9)));
}

struct CutNormResult {
    std::vector<int> rows;
    std::vector<int> cols;
    double value = 0.0; // |W(rows, cols)|, exactly evaluated
};

namespace detail {

inline double block_sum(const Matrix& w, const std::vector<int>& rows,
                        const std::vector<int>& cols) {
    double s = 0.0;
    for (int i : rows)
        for (int j : cols) s += w(i, j);
    return s;
}

// Greedy column choice for a fixed row set: with colsum_j = sum_{i in S} W(i,j),
// the positive-sign search takes T = {j : colsum_j > 0}, the negative-sign
// search {j : colsum_j < 0}. Optimal per fixed S; zero-sum columns stay out,
// which keeps the returned support minimal and the choice deterministic.
inline void greedy_columns(const std::vector<double>& colsum, std::vector<int>& pos_cols,
                           std::vector<int>& neg_cols, double& pos_val, double& neg_val) {
    pos_cols.clear();
    neg_cols.clear();
    pos_val = 0.0;
    neg_val = 0.0;
    for (int j = 0; j < static_cast<int>(colsum.size()); ++j) {
        if (colsum[j] > 0.0) {
            pos_cols.push_back(j);
            pos_val += colsum[j];
        } else if (colsum[j] < 0.0) {
            neg_cols.push_back(j);
            neg_val -= colsum[j];
        }
    }
}

} // namespace detail

/**
 * Largest-|sum| cut of a matrix: subsets S, T and value = |W(S,T)|.
 *
 * Exact mode walks all 2^n row subsets in Gray-code order (column sums updated
 * in O(n) per step) and picks columns greedily by sign, which is optimal for a
 * fixed row set; the returned value is the true cut norm. Sampled mode guesses
 * the trace of the optimal row set on a small random row sample, lifts each
 * guess greedily (rows by sign against the guessed columns, then columns
 * exactly), and keeps the best exactly-evaluated candidate over all guesses
 * and repetitions.
 */
inline CutNormResult cut_norm_maximize(const Matrix& w, CutSearchMode mode, std::uint64_t seed,
                                       int exact_cap = 24, int sample_size = 12,
                                       int repetitions = 1) {
    const int n = w.n();
    CutNormResult best; // value 0, empty sets
    if (n == 0) return best;

    std::vector<int> pos_cols, neg_cols;
    double pos_val, neg_val;

    if (mode == CutSearchMode::Exact) {
        if (n > exact_cap)
            throw size_error("cut_norm_maximize: exact mode capped at n <= " +
                             std::to_string(exact_cap));
        std::vector<double> colsum(n, 0.0);
        std::vector<bool> in_s(n, false);
        std::uint64_t best_gray = 0;
        const std::uint64_t total = std::uint64_t{1} << n;
        for (std::uint64_t t = 1; t < total; ++t) {
            const int b = std::countr_zero(t);
            if (in_s[b]) {
                for (int j = 0; j < n; ++j) colsum[j] -= w(b, j);
                in_s[b] = false;
            } else {
                for (int j = 0; j < n; ++j) colsum[j] += w(b, j);
                in_s[b] = true;
            }
            double pv = 0.0, nv = 0.0;
            for (int j = 0; j < n; ++j) {
                if (colsum[j] >= 0.0)
                    pv += colsum[j];
                else
                    nv -= colsum[j];
            }
            const double v = std::max(pv, nv);
            if (v > best.value) {
                best.value = v;
                best_gray = t ^ (t >> 1);
            }
        }
        if (best.value > 0.0) {
            std::fill(colsum.begin(), colsum.end(), 0.0);
            best.rows.clear();
            for (int i = 0; i < n; ++i)
                if ((best_gray >> i) & 1) {
                    best.rows.push_back(i);
                    for (int j = 0; j < n; ++j) colsum[j] += w(i, j);
                }
            detail::greedy_columns(colsum, pos_cols, neg_cols, pos_val, neg_val);
            best.cols = (pos_val >= neg_val) ? pos_cols : neg_cols;
            best.value = std::abs(detail::block_sum(w, best.rows, best.cols));
        }
        return best;
    }

    // sampled mode
    SplitMix64 rng(seed);
    const int q = std::min(n, std::max(1, sample_size));
    std::vector<int> universe(n);
    for (int i = 0; i < n; ++i) universe[i] = i;
    std::vector<double> colsum(n, 0.0), rowsum(n, 0.0);

    auto consider = [&](const std::vector<int>& rows, const std::vector<int>& cols) {
        if (rows.empty() || cols.empty()) return;
        const double v = std::abs(detail::block_sum(w, rows, cols));
        if (v > best.value) {
            best.value = v;
            best.rows = rows;
            best.cols = cols;
        }
    };

    for (int rep = 0; rep < std::max(1, repetitions); ++rep) {
        for (int t = 0; t < q; ++t) {
            const std::size_t pick = t + rng.next_below(universe.size() - t);
            std::swap(universe[t], universe[pick]);
        }
        const std::uint64_t patterns = std::uint64_t{1} << q;
        for (std::uint64_t p = 0; p < patterns; ++p) {
            std::fill(colsum.begin(), colsum.end(), 0.0);
            for (int t = 0; t < q; ++t)
                if ((p >> t) & 1) {
                    const int i = universe[t];
                    for (int j = 0; j < n; ++j) colsum[j] += w(i, j);
                }
            detail::greedy_columns(colsum, pos_cols, neg_cols, pos_val, neg_val);
            for (int sign = 0; sign < 2; ++sign) {
                const std::vector<int>& guess_cols = sign == 0 ? pos_cols : neg_cols;
                if (guess_cols.empty()) continue;
                std::fill(rowsum.begin(), rowsum.end(), 0.0);
                for (int i = 0; i < n; ++i)
                    for (int j : guess_cols) rowsum[i] += w(i, j);
                std::vector<int> rows;
                for (int i = 0; i < n; ++i) {
                    if (sign == 0 && rowsum[i] > 0.0) rows.push_back(i);
                    if (sign == 1 && rowsum[i] < 0.0) rows.push_back(i);
                }
                if (rows.empty()) continue;
                // one exact re-greedy of the columns against the lifted rows
                std::fill(colsum.begin(), colsum.end(), 0.0);
                for (int i : rows)
                    for (int j = 0; j < n; ++j) colsum[j] += w(i, j);
                detail::greedy_columns(colsum, pos_cols, neg_cols, pos_val, neg_val);
                consider(rows, pos_val >= neg_val ? pos_cols : neg_cols);
            }
        }
    }
    return best;
}

struct FkLimits {
    int max_width = -1;  // extra resource cap on the width; -1 means none
    int exact_cap = 24;  // size cap of the exact cut-norm search
    int sample_size = 12;
};

/**
 * Iterative peeling against the weak-regularity contract: starting from the
 * off-diagonal part of J, repeatedly find the largest cut, stop once its value
 * drops to eps * n * ||J_off||_2, otherwise subtract the block average. Each
 * accepted step must shrink the squared Frobenius potential by exactly
 * value^2 / (|S||T|), which bounds the width and coefficient length; a step
 * that does not is a broken cut-norm subroutine and raises internal_error.
 */
inline CutDecomposition fk_decompose(const IsingInstance& inst, double eps, double fail_prob,
                                     CutSearchMode mode, std::uint64_t seed,
                                     const FkLimits& limits = {}) {
    if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("fk_decompose: eps must be in (0,1]");
    if (!(fail_prob > 0.0 && fail_prob < 1.0))
        throw std::invalid_argument("fk_decompose: fail_prob must be in (0,1)");
    inst.validate();

    const int n = inst.n;
    CutDecomposition dec;
    dec.n = n;
    dec.eps_used = eps;

    Matrix w = inst.j;
    double potential = w.frobenius_sq();
    dec.source_l2 = std::sqrt(potential);
    dec.claimed_error = 4.0 * eps * n * dec.source_l2;

    const double threshold = eps * n * dec.source_l2;
    const int guard = width_cap(eps);
    const int cap = (limits.max_width >= 0) ? std::min(limits.max_width, guard) : guard;
    const int reps = std::max(1, static_cast<int>(std::ceil(std::log(1.0 / fail_prob) / std::log(2.0))));

    for (;;) {
        if (dec.width() >= cap) {
            if (cap < guard) {
                dec.stopped_by_width_cap = true;
                break;
            }
            throw internal_error("fk_decompose: no convergence within the width cap");
        }
        const CutNormResult found = cut_norm_maximize(w, mode, derive_seed(seed, dec.width()),
                                                      limits.exact_cap, limits.sample_size, reps);
        if (found.value <= threshold || found.rows.empty() || found.cols.empty()) break;

        const double signed_sum = detail::block_sum(w, found.rows, found.cols);
        const double cells = static_cast<double>(found.rows.size()) * found.cols.size();
        const double d = signed_sum / cells;
        for (int i : found.rows)
            for (int j : found.cols) w(i, j) -= d;

        const double next_potential = w.frobenius_sq();
        const double drop = signed_sum * signed_sum / cells;
        if (std::abs(potential - next_potential - drop) > 1e-9 * (1.0 + potential))
            throw internal_error("fk_decompose: potential identity violated");
        potential = next_potential;

        dec.cuts.push_back(CutMatrix{found.rows, found.cols, d});
        dec.step_values.push_back(std::abs(signed_sum));
        dec.step_potentials.push_back(next_potential);
    }
    return dec;
}

/// Sum of the cut matrices (no diagonal shift).
inline Matrix cut_sum(const CutDecomposition& dec) {
    Matrix m(dec.n);
    for (const auto& c : dec.cuts)
        for (int i : c.rows)
            for (int j : c.cols) m(i, j) += c.coeff;
    return m;
}

/// W = J - sum of cuts, for the matrix the decomposition was built from.
inline Matrix residual_matrix(const IsingInstance& inst, const CutDecomposition& dec) {
    Matrix w = inst.j;
    for (const auto& c : dec.cuts)
        for (int i : c.rows)
            for (int j : c.cols) w(i, j) -= c.coeff;
    return w;
}

} // namespace dising
