#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "dising/errors.hpp"
#include "dising/matrix.hpp"
#include "dising/model.hpp"
#include "dising/refine.hpp"
#include "dising/rng.hpp"

namespace dising {

/// Dense k-dimensional array over [n]^k, last axis contiguous.
class Tensor {
public:
    Tensor() = default;
    Tensor(int n, int k) : n_(n), k_(k) {
        double cells = std::pow(static_cast<double>(n), k);
        if (cells > 2e7) throw size_error("Tensor: n^k exceeds the dense cap");
        data_.assign(static_cast<std::size_t>(cells), 0.0);
    }

    static Tensor from_instance(const MrfInstance& inst) {
        inst.validate();
        Tensor t(inst.n, inst.k);
        for (const auto& [idx, v] : inst.entries) {
            std::size_t flat = 0;
            for (int i : idx) flat = flat * inst.n + i;
            t.data_[flat] += v;
        }
        return t;
    }

    int n() const { return n_; }
    int k() const { return k_; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    double frobenius_sq() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return s;
    }

private:
    int n_ = 0;
    int k_ = 0;
    std::vector<double> data_;
};

/// CUT(S_1, ..., S_k; d): d on S_1 x ... x S_k, zero elsewhere.
struct CutTensor {
    std::vector<std::vector<int>> axis_sets;
    double coeff = 0.0;
};

/// Width/threshold profile of the peeling: Constant follows the k-dimensional
/// regularity contract (width within O(eps^{2-2k})), Linear follows the
/// smaller-width contract (width at most 4/eps^2) at the price of a halved
/// stopping threshold.
enum class TensorRegMode { Constant, Linear };

struct TensorCutDecomposition {
    int n = 0;
    int k = 0;
    double eps_used = 0.0;
    TensorRegMode reg_mode = TensorRegMode::Constant;
    std::vector<CutTensor> cuts;

    double source_l2 = 0.0;
    double claimed_error = 0.0; // eps * 2^k * sqrt(N) * ||J||_2
    bool stopped_by_width_cap = false;
    std::vector<double> step_values;
    std::vector<double> step_potentials;
    std::optional<double> certified_error;

    int width() const { return static_cast<int>(cuts.size()); }

    double coefficient_length() const {
        double s = 0.0;
        for (const auto& c : cuts) s += c.coeff * c.coeff;
        return std::sqrt(s);
    }
};

inline int tensor_width_cap(double eps, int k, TensorRegMode mode) {
    const double cap = (mode == TensorRegMode::Linear)
                           ? 4.0 / (eps * eps)
                           : 27.0 * std::pow(eps, 2.0 - 2.0 * k);
    return static_cast<int>(std::ceil(std::min(cap, 1e9)));
}

struct TensorCutResult {
    std::vector<std::vector<int>> axis_sets;
    double value = 0.0; // |sum over the block|
};

namespace detail {

// Exact max-|sum| cut of an n x n matrix given as a flat slab; Gray code over
// row subsets, greedy columns. Returns masks.
struct MatrixCutBest {
    double value = 0.0;
    std::uint64_t rows = 0, cols = 0;
};

inline MatrixCutBest matrix_cut_search(const double* w, int n) {
    MatrixCutBest best;
    std::vector<double> colsum(n, 0.0);
    std::vector<bool> in_s(n, false);
    std::uint64_t best_gray = 0;
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t t = 1; t < total; ++t) {
        const int b = std::countr_zero(t);
        const double sgn = in_s[b] ? -1.0 : 1.0;
        in_s[b] = !in_s[b];
        const double* row = w + static_cast<std::size_t>(b) * n;
        for (int j = 0; j < n; ++j) colsum[j] += sgn * row[j];
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
        best.rows = best_gray;
        std::fill(colsum.begin(), colsum.end(), 0.0);
        for (int i = 0; i < n; ++i)
            if ((best_gray >> i) & 1) {
                const double* row = w + static_cast<std::size_t>(i) * n;
                for (int j = 0; j < n; ++j) colsum[j] += row[j];
            }
        double pv = 0.0, nv = 0.0;
        std::uint64_t pmask = 0, nmask = 0;
        for (int j = 0; j < n; ++j) {
            if (colsum[j] > 0.0) {
                pv += colsum[j];
                pmask |= std::uint64_t{1} << j;
            } else if (colsum[j] < 0.0) {
                nv -= colsum[j];
                nmask |= std::uint64_t{1} << j;
            }
        }
        best.cols = (pv >= nv) ? pmask : nmask;
        // exact value of the chosen block
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            if ((best.rows >> i) & 1) {
                const double* row = w + static_cast<std::size_t>(i) * n;
                for (int j = 0; j < n; ++j)
                    if ((best.cols >> j) & 1) s += row[j];
            }
        best.value = std::abs(s);
    }
    return best;
}

struct AxisCutBest {
    double value = 0.0;
    std::vector<std::uint64_t> masks;
};

// Exact search over all axis-subset tuples: Gray-enumerate subsets of the
// leading axis while maintaining the contracted slab sum, recurse until two
// axes remain.
inline AxisCutBest tensor_cut_search_exact(const std::vector<double>& w, int n, int k) {
    if (k == 2) {
        const MatrixCutBest m = matrix_cut_search(w.data(), n);
        return {m.value, {m.rows, m.cols}};
    }
    const std::size_t slab = w.size() / n;
    std::vector<double> acc(slab, 0.0);
    std::vector<bool> in_s(n, false);
    AxisCutBest best;
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t t = 1; t < total; ++t) {
        const int b = std::countr_zero(t);
        const double sgn = in_s[b] ? -1.0 : 1.0;
        in_s[b] = !in_s[b];
        const double* src = w.data() + static_cast<std::size_t>(b) * slab;
        for (std::size_t i = 0; i < slab; ++i) acc[i] += sgn * src[i];
        AxisCutBest sub = tensor_cut_search_exact(acc, n, k - 1);
        if (sub.value > best.value) {
            best.value = sub.value;
            best.masks.assign(1, t ^ (t >> 1));
            best.masks.insert(best.masks.end(), sub.masks.begin(), sub.masks.end());
        }
    }
    return best;
}

inline double tensor_block_sum(const std::vector<double>& w, int n, int k,
                               const std::vector<std::vector<int>>& sets) {
    // iterate the block as nested products over the axis sets
    double total = 0.0;
    std::vector<int> pos(k, 0);
    for (;;) {
        std::size_t flat = 0;
        for (int a = 0; a < k; ++a) flat = flat * n + sets[a][pos[a]];
        total += w[flat];
        int a = k - 1;
        while (a >= 0 && pos[a] + 1 == static_cast<int>(sets[a].size())) {
            pos[a] = 0;
            --a;
        }
        if (a < 0) break;
        ++pos[a];
    }
    return total;
}

// Randomized search: random axis sets improved by greedy per-axis sweeps.
inline AxisCutBest tensor_cut_search_sampled(const std::vector<double>& w, int n, int k,
                                             std::uint64_t seed, int repetitions) {
    AxisCutBest best;
    SplitMix64 rng(seed);
    std::vector<std::uint64_t> masks(k);
    std::vector<double> marginal(n);
    for (int rep = 0; rep < std::max(1, repetitions * 4); ++rep) {
        for (int a = 0; a < k; ++a) {
            masks[a] = 0;
            for (int v = 0; v < n; ++v)
                if (rng.next_bool()) masks[a] |= std::uint64_t{1} << v;
            if (masks[a] == 0) masks[a] = 1;
        }
        const bool maximize = (rep % 2 == 0);
        for (int sweep = 0; sweep < 3; ++sweep) {
            for (int axis = 0; axis < k; ++axis) {
                std::fill(marginal.begin(), marginal.end(), 0.0);
                std::vector<int> idx(k, 0);
                const std::size_t cells = w.size();
                for (std::size_t f = 0; f < cells; ++f) {
                    std::size_t rem = f;
                    bool inside = true;
                    int axis_idx = 0;
                    for (int a = k - 1; a >= 0; --a) {
                        const int ia = static_cast<int>(rem % n);
                        rem /= n;
                        if (a == axis)
                            axis_idx = ia;
                        else if (!((masks[a] >> ia) & 1))
                            inside = false;
                    }
                    if (inside) marginal[axis_idx] += w[f];
                }
                std::uint64_t m = 0;
                for (int v = 0; v < n; ++v) {
                    const bool take = maximize ? (marginal[v] >= 0.0) : (marginal[v] <= 0.0);
                    if (take) m |= std::uint64_t{1} << v;
                }
                if (m != 0) masks[axis] = m;
            }
        }
        std::vector<std::vector<int>> sets(k);
        for (int a = 0; a < k; ++a)
            for (int v = 0; v < n; ++v)
                if ((masks[a] >> v) & 1) sets[a].push_back(v);
        const double val = std::abs(tensor_block_sum(w, n, k, sets));
        if (val > best.value) {
            best.value = val;
            best.masks = masks;
        }
    }
    return best;
}

} // namespace detail

/// Largest-|sum| axis-aligned block of a dense tensor.
inline TensorCutResult tensor_cut_maximize(const Tensor& t, CutSearchMode mode, std::uint64_t seed,
                                           int exact_cap = 12, int repetitions = 1) {
    const int n = t.n();
    detail::AxisCutBest found;
    if (mode == CutSearchMode::Exact) {
        if (n > exact_cap) throw size_error("tensor_cut_maximize: exact mode cap exceeded");
        found = detail::tensor_cut_search_exact(t.data(), n, t.k());
    } else {
        found = detail::tensor_cut_search_sampled(t.data(), n, t.k(), seed, repetitions);
    }
    TensorCutResult res;
    res.value = found.value;
    if (found.value > 0.0) {
        res.axis_sets.resize(t.k());
        for (int a = 0; a < t.k(); ++a)
            for (int v = 0; v < n; ++v)
                if ((found.masks[a] >> v) & 1) res.axis_sets[a].push_back(v);
    }
    return res;
}

struct TensorFkLimits {
    int max_width = -1;
    int exact_cap = 12;
};

/// Peeling decomposition of a k-uniform tensor model, same potential argument
/// as the matrix case: J = sum CUT(S_1..S_k; d) + W with the residual's
/// largest block sum at or below the mode's threshold.
inline TensorCutDecomposition tensor_decompose(const MrfInstance& inst, double eps,
                                               double fail_prob, CutSearchMode mode,
                                               std::uint64_t seed,
                                               TensorRegMode reg_mode = TensorRegMode::Constant,
                                               const TensorFkLimits& limits = {}) {
    if (!(eps > 0.0 && eps <= 1.0))
        throw std::invalid_argument("tensor_decompose: eps must be in (0,1]");
    inst.validate();
    Tensor w = Tensor::from_instance(inst);
    const int n = inst.n;
    const int k = inst.k;
    const double sqrt_n_cells = std::sqrt(std::pow(static_cast<double>(n), k));

    TensorCutDecomposition dec;
    dec.n = n;
    dec.k = k;
    dec.eps_used = eps;
    dec.reg_mode = reg_mode;
    double potential = w.frobenius_sq();
    dec.source_l2 = std::sqrt(potential);
    dec.claimed_error = eps * std::pow(2.0, k) * sqrt_n_cells * dec.source_l2;

    const double threshold = (reg_mode == TensorRegMode::Linear ? 0.5 * eps : eps) *
                             sqrt_n_cells * dec.source_l2;
    const int guard = tensor_width_cap(eps, k, reg_mode);
    const int cap = (limits.max_width >= 0) ? std::min(limits.max_width, guard) : guard;
    const int reps = std::max(1, static_cast<int>(std::ceil(std::log(1.0 / fail_prob) / std::log(2.0))));

    for (;;) {
        if (dec.width() >= cap) {
            if (cap < guard) {
                dec.stopped_by_width_cap = true;
                break;
            }
            throw internal_error("tensor_decompose: no convergence within the width cap");
        }
        const TensorCutResult found = tensor_cut_maximize(w, mode, derive_seed(seed, dec.width()),
                                                          limits.exact_cap, reps);
        if (found.value <= threshold || found.axis_sets.empty()) break;

        const double signed_sum = detail::tensor_block_sum(w.data(), n, k, found.axis_sets);
        double cells = 1.0;
        for (const auto& s : found.axis_sets) cells *= static_cast<double>(s.size());
        const double d = signed_sum / cells;

        // subtract d over the block
        {
            std::vector<int> pos(k, 0);
            for (;;) {
                std::size_t flat = 0;
                for (int a = 0; a < k; ++a) flat = flat * n + found.axis_sets[a][pos[a]];
                w.data()[flat] -= d;
                int a = k - 1;
                while (a >= 0 && pos[a] + 1 == static_cast<int>(found.axis_sets[a].size())) {
                    pos[a] = 0;
                    --a;
                }
                if (a < 0) break;
                ++pos[a];
            }
        }

        const double next_potential = w.frobenius_sq();
        const double drop = signed_sum * signed_sum / cells;
        if (std::abs(potential - next_potential - drop) > 1e-9 * (1.0 + potential))
            throw internal_error("tensor_decompose: potential identity violated");
        potential = next_potential;

        dec.cuts.push_back(CutTensor{found.axis_sets, d});
        dec.step_values.push_back(std::abs(signed_sum));
        dec.step_potentials.push_back(next_potential);
    }
    return dec;
}

/// W = J - sum of cut tensors, densely materialized.
inline Tensor residual_tensor(const MrfInstance& inst, const TensorCutDecomposition& dec) {
    Tensor w = Tensor::from_instance(inst);
    const int n = inst.n;
    const int k = inst.k;
    for (const auto& c : dec.cuts) {
        std::vector<int> pos(k, 0);
        for (;;) {
            std::size_t flat = 0;
            for (int a = 0; a < k; ++a) flat = flat * n + c.axis_sets[a][pos[a]];
            w.data()[flat] -= c.coeff;
            int a = k - 1;
            while (a >= 0 && pos[a] + 1 == static_cast<int>(c.axis_sets[a].size())) {
                pos[a] = 0;
                --a;
            }
            if (a < 0) break;
            ++pos[a];
        }
    }
    return w;
}

namespace detail {

// max over sign assignments of axes 1..k-2 (contracting as it goes), with the
// final two axes handled by the matrix inf->1 walk.
inline double tensor_inf_to_one_rec(const std::vector<double>& w, int n, int k) {
    if (k == 2) {
        // max_x || (W^T) x ||_1 over signs on the first remaining axis
        Matrix wt(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) wt(j, i) = w[static_cast<std::size_t>(i) * n + j];
        double best = 0.0;
        std::vector<double> g(n, 0.0);
        std::vector<bool> x(n, false); // false = -1
        for (int i = 0; i < n; ++i) {
            g[i] = 0.0;
            for (int j = 0; j < n; ++j) g[i] -= wt(i, j);
        }
        auto eval = [&]() {
            double v = 0.0;
            for (int i = 0; i < n; ++i) v += std::abs(g[i]);
            best = std::max(best, v);
        };
        eval();
        const std::uint64_t total = std::uint64_t{1} << n;
        for (std::uint64_t t = 1; t < total; ++t) {
            const int b = std::countr_zero(t);
            const double dx = x[b] ? -2.0 : 2.0;
            x[b] = !x[b];
            for (int i = 0; i < n; ++i) g[i] += wt(i, b) * dx;
            eval();
        }
        return best;
    }
    const std::size_t slab = w.size() / n;
    std::vector<double> acc(slab, 0.0);
    // start at all -1
    for (int i = 0; i < n; ++i) {
        const double* src = w.data() + static_cast<std::size_t>(i) * slab;
        for (std::size_t c = 0; c < slab; ++c) acc[c] -= src[c];
    }
    double best = tensor_inf_to_one_rec(acc, n, k - 1);
    std::vector<bool> x(n, false);
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t t = 1; t < total; ++t) {
        const int b = std::countr_zero(t);
        const double dx = x[b] ? -2.0 : 2.0;
        x[b] = !x[b];
        const double* src = w.data() + static_cast<std::size_t>(b) * slab;
        for (std::size_t c = 0; c < slab; ++c) acc[c] += dx * src[c];
        best = std::max(best, tensor_inf_to_one_rec(acc, n, k - 1));
    }
    return best;
}

} // namespace detail

/// Exact inf->1 norm of a k-dimensional array viewed as a multilinear map
/// (R^n)^{k-1} -> R^n: max over sign vectors of the L1 norm of the image.
inline double exact_tensor_inf_to_one_norm(const Tensor& w, int cap = 12) {
    if (w.n() > cap) throw size_error("exact_tensor_inf_to_one_norm: cap exceeded");
    return detail::tensor_inf_to_one_rec(w.data(), w.n(), w.k());
}

/// Common refinement of all k*s axis sets; source set k*i + j is axis j of cut i.
inline AtomPartition refine_tensor(int n, const TensorCutDecomposition& dec) {
    std::vector<std::vector<int>> sets;
    sets.reserve(static_cast<std::size_t>(dec.k) * dec.cuts.size());
    for (const auto& c : dec.cuts)
        for (const auto& s : c.axis_sets) sets.push_back(s);
    return refine_sets(n, sets);
}

/// sum_i d_i * prod_j (net spin of S_{i,j} under y).
inline double tensor_profile_energy(const AtomPartition& part, const TensorCutDecomposition& dec,
                                    const SpinProfile& y) {
    if (!part.profile_valid(y)) throw std::invalid_argument("tensor_profile_energy: bad profile");
    double e = 0.0;
    for (std::size_t i = 0; i < dec.cuts.size(); ++i) {
        double prod = dec.cuts[i].coeff;
        for (int j = 0; j < dec.k; ++j)
            prod *= net_spin(part, y, static_cast<int>(i) * dec.k + j);
        e += prod;
    }
    return e;
}

} // namespace dising
