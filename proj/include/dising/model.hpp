#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dising/errors.hpp"
#include "dising/matrix.hpp"
#include "dising/rng.hpp"

namespace dising {

/**
 * Pairwise binary spin model. States are x in {-1,+1}^n with weight
 * exp(x^T J x + h.x); J is real symmetric (diagonal allowed, it contributes
 * the constant sum_i J_ii to every state). Immutable by convention once built.
 */
struct IsingInstance {
    int n = 0;
    Matrix j;              // n x n, symmetric
    std::vector<double> h; // external field, may be all zero

    IsingInstance() = default;
    explicit IsingInstance(int n_) : n(n_), j(n_), h(static_cast<std::size_t>(n_), 0.0) {
        if (n_ < 1) throw std::invalid_argument("IsingInstance: n must be >= 1");
    }

    /// Sets J[i][j] and J[j][i] together, keeping the matrix symmetric.
    void set_coupling(int i, int k, double v) {
        j(i, k) = v;
        j(k, i) = v;
    }

    double diagonal_sum() const {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += j(i, i);
        return s;
    }

    void validate() const {
        if (n < 1) throw std::invalid_argument("IsingInstance: n must be >= 1");
        if (j.n() != n || static_cast<int>(h.size()) != n)
            throw std::invalid_argument("IsingInstance: inconsistent sizes");
        for (int a = 0; a < n; ++a) {
            if (!std::isfinite(h[a])) throw std::invalid_argument("IsingInstance: non-finite field");
            for (int b = 0; b < n; ++b) {
                if (!std::isfinite(j(a, b)))
                    throw std::invalid_argument("IsingInstance: non-finite coupling");
                if (j(a, b) != j(b, a))
                    throw std::invalid_argument("IsingInstance: J must be symmetric");
            }
        }
    }
};

/**
 * k-uniform binary Markov random field, k >= 3. The energy of a state x is
 * sum over stored index tuples of coeff * x_{i1} * ... * x_{ik}; tuples are
 * 0-based internally and repeated indices are allowed (x_i^2 = 1 folds them
 * down). A multi-order model is represented as a list of these plus one
 * IsingInstance.
 */
struct MrfInstance {
    int n = 0;
    int k = 3;
    // sorted map keeps every traversal order deterministic
    std::map<std::vector<int>, double> entries;

    MrfInstance() = default;
    MrfInstance(int n_, int k_) : n(n_), k(k_) {
        if (n_ < 1) throw std::invalid_argument("MrfInstance: n must be >= 1");
        if (k_ < 3) throw std::invalid_argument("MrfInstance: k must be >= 3");
    }

    void set_entry(const std::vector<int>& idx, double v) {
        if (static_cast<int>(idx.size()) != k)
            throw std::invalid_argument("MrfInstance: tuple arity mismatch");
        for (int i : idx)
            if (i < 0 || i >= n) throw std::invalid_argument("MrfInstance: index out of range");
        if (!std::isfinite(v)) throw std::invalid_argument("MrfInstance: non-finite entry");
        entries.insert_or_assign(idx, v);
    }

    void validate() const {
        if (n < 1 || k < 3) throw std::invalid_argument("MrfInstance: bad dimensions");
        for (const auto& [idx, v] : entries) {
            if (static_cast<int>(idx.size()) != k)
                throw std::invalid_argument("MrfInstance: tuple arity mismatch");
            for (int i : idx)
                if (i < 0 || i >= n) throw std::invalid_argument("MrfInstance: index out of range");
            if (!std::isfinite(v)) throw std::invalid_argument("MrfInstance: non-finite entry");
        }
    }
};

/// Entrywise norms of the coupling array viewed as a flat vector, plus the
/// largest density parameter the instance satisfies.
struct DensityReport {
    double l1 = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
    double delta_max = 0.0; // +inf when linf == 0
};

inline DensityReport norms(const IsingInstance& inst) {
    DensityReport r;
    double sq = 0.0;
    for (double v : inst.j.data()) {
        r.l1 += std::abs(v);
        sq += v * v;
        r.linf = std::max(r.linf, std::abs(v));
    }
    r.l2 = std::sqrt(sq);
    const double cells = static_cast<double>(inst.n) * inst.n;
    r.delta_max = (r.linf == 0.0) ? std::numeric_limits<double>::infinity()
                                  : r.l1 / (cells * r.linf);
    return r;
}

inline DensityReport norms(const MrfInstance& inst) {
    DensityReport r;
    double sq = 0.0;
    for (const auto& [idx, v] : inst.entries) {
        (void)idx;
        r.l1 += std::abs(v);
        sq += v * v;
        r.linf = std::max(r.linf, std::abs(v));
    }
    r.l2 = std::sqrt(sq);
    const double cells = std::pow(static_cast<double>(inst.n), inst.k);
    r.delta_max = (r.linf == 0.0) ? std::numeric_limits<double>::infinity()
                                  : r.l1 / (cells * r.linf);
    return r;
}

namespace detail {
inline void check_delta_arg(double delta) {
    if (!(delta > 0.0 && delta <= 1.0))
        throw std::invalid_argument("delta must lie in (0, 1]");
}
} // namespace detail

/// Delta * ||J||_inf <= ||J||_1 / n^2 (n^k for order-k fields). The comparison
/// carries a 1e-12 relative slack so equal-weight instances at the boundary
/// are accepted.
inline bool is_delta_dense(const IsingInstance& inst, double delta) {
    detail::check_delta_arg(delta);
    const DensityReport r = norms(inst);
    const double cells = static_cast<double>(inst.n) * inst.n;
    return delta * r.linf <= r.l1 / cells * (1.0 + 1e-12) + 1e-300;
}

inline bool is_delta_dense(const MrfInstance& inst, double delta) {
    detail::check_delta_arg(delta);
    const DensityReport r = norms(inst);
    const double cells = std::pow(static_cast<double>(inst.n), inst.k);
    return delta * r.linf <= r.l1 / cells * (1.0 + 1e-12) + 1e-300;
}

/**
 * Random symmetric instance guaranteed delta-dense, deterministic in the seed.
 * For delta <= 1 - 1/n the diagonal stays zero and off-diagonal magnitudes are
 * drawn from [delta*n/(n-1), 1]; beyond that (only possible with weight on the
 * diagonal) every cell gets magnitude 1/2 with a random sign.
 */
inline IsingInstance gen_random_dense(int n, double delta, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("gen_random_dense: n must be >= 2");
    detail::check_delta_arg(delta);
    SplitMix64 rng(seed);
    IsingInstance inst(n);
    const double m0 = delta * n / (n - 1.0);
    if (m0 <= 1.0) {
        for (int i = 0; i < n; ++i)
            for (int k = i + 1; k < n; ++k) {
                const double mag = rng.next_double(m0, 1.0);
                const double sign = rng.next_bool() ? 1.0 : -1.0;
                inst.set_coupling(i, k, sign * mag);
            }
    } else {
        for (int i = 0; i < n; ++i)
            for (int k = i; k < n; ++k) {
                const double sign = rng.next_bool() ? 1.0 : -1.0;
                inst.set_coupling(i, k, sign * 0.5);
            }
    }
    if (!is_delta_dense(inst, delta))
        throw internal_error("gen_random_dense: construction missed the density target");
    return inst;
}

/// Complete-graph ferromagnet: J[i][j] = beta/(2n) off the diagonal, so
/// x^T J x = (beta/n) * sum_{i<j} 2 x_i x_j.
inline IsingInstance gen_curie_weiss(int n, double beta) {
    if (n < 2) throw std::invalid_argument("gen_curie_weiss: n must be >= 2");
    IsingInstance inst(n);
    const double w = beta / (2.0 * n);
    for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k) inst.set_coupling(i, k, w);
    return inst;
}

/**
 * The indistinguishable pair used by the lower-bound experiment: J'_M is the
 * complete graph with every edge weight M; J_M additionally promotes
 * round(eps*delta*C(n,2)) random edges to weight M/delta. Edge weights sit in
 * both triangles of the matrix.
 */
inline std::pair<IsingInstance, IsingInstance> gen_tightness_pair(int n, double M, double eps,
                                                                  double delta,
                                                                  std::uint64_t seed) {
    if (n < 4) throw std::invalid_argument("gen_tightness_pair: n must be >= 4");
    if (!(eps > 0.0 && eps <= 0.25) || !(delta > 0.0 && delta <= 0.25))
        throw std::invalid_argument("gen_tightness_pair: eps, delta must lie in (0, 1/4]");
    const double edges = 0.5 * n * (n - 1.0);
    const double heavy_real = eps * delta * edges;
    if (heavy_real < 1.0)
        throw std::invalid_argument(
            "gen_tightness_pair: eps*delta*C(n,2) < 1, no heavy edge representable");
    const long heavy = std::lround(heavy_real);

    IsingInstance uniform(n);
    for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k) uniform.set_coupling(i, k, M);

    IsingInstance planted = uniform;
    std::vector<std::pair<int, int>> pool;
    pool.reserve(static_cast<std::size_t>(edges));
    for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k) pool.emplace_back(i, k);
    SplitMix64 rng(seed);
    // partial Fisher-Yates: the first `heavy` slots become the heavy edges
    for (long t = 0; t < heavy; ++t) {
        const std::size_t pick = t + rng.next_below(pool.size() - t);
        std::swap(pool[t], pool[pick]);
        planted.set_coupling(pool[t].first, pool[t].second, M / delta);
    }
    return {planted, uniform};
}

} // namespace dising
