#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dising/cut.hpp"
#include "dising/errors.hpp"
#include "dising/matrix.hpp"
#include "dising/model.hpp"
#include "dising/refine.hpp"
#include "dising/scalar.hpp"

// Brute-force ground truth. Deliberately naive: plain enumerations of the
// state cube or the profile grid, sequential and in a fixed order, so every
// number here is auditable. Caps keep each call at desk scale.

namespace dising {

struct ExactResult {
    double log_value = 0.0;
    std::uint64_t states_enumerated = 0;
};

namespace detail {

inline void check_state_cap(int n, int cap, const char* who) {
    if (n > cap)
        throw size_error(std::string(who) + ": n = " + std::to_string(n) + " exceeds cap " +
                         std::to_string(cap));
}

// Gray-code walk over {-1,+1}^n. `on_state` sees every state exactly once,
// including the initial all-minus state; `x` is kept consistent.
template <typename FlipFn, typename StateFn>
void gray_walk(int n, std::vector<int>& x, FlipFn&& flip, StateFn&& on_state) {
    x.assign(n, -1);
    on_state();
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t t = 1; t < total; ++t) {
        const int b = std::countr_zero(t);
        flip(b);
        x[b] = -x[b];
        on_state();
    }
}

} // namespace detail

/// log sum_x exp(x^T J x + h.x) by direct enumeration.
inline ExactResult exact_log_z(const IsingInstance& inst, int cap = 30) {
    inst.validate();
    const int n = inst.n;
    detail::check_state_cap(n, cap, "exact_log_z");

    std::vector<int> x;
    std::vector<double> s(n, 0.0); // s[i] = sum_{j != i} J_ij x_j
    double energy = 0.0;
    LogSumExp lse;

    auto recompute = [&]() {
        energy = 0.0;
        for (int i = 0; i < n; ++i) {
            s[i] = 0.0;
            for (int j = 0; j < n; ++j)
                if (j != i) s[i] += inst.j(i, j) * x[j];
        }
        // sum_i x_i s_i runs over all ordered off-diagonal pairs, matching x^T J x
        for (int i = 0; i < n; ++i) {
            energy += inst.j(i, i);
            energy += x[i] * (s[i] + inst.h[i]);
        }
    };

    std::uint64_t count = 0;
    x.assign(n, -1);
    recompute();
    auto flip = [&](int b) {
        energy += -2.0 * x[b] * (2.0 * s[b] + inst.h[b]);
        const double xb_new = -x[b];
        for (int j = 0; j < n; ++j)
            if (j != b) s[j] += 2.0 * inst.j(j, b) * xb_new;
    };
    detail::gray_walk(n, x, flip,
                      [&]() {
                          if ((count & 0xFFFFu) == 0xFFFFu) recompute(); // limit drift
                          lse.add(energy);
                          ++count;
                      });
    return {lse.value(), count};
}

/// log Z' = log sum_x exp(x^T (sum_t D_t) x + diag_shift): the decomposition's
/// cut energy over all states. Field-free by construction; the instance only
/// supplies the dimension.
inline ExactResult exact_log_z_prime(const IsingInstance& inst, const CutDecomposition& dec,
                                     int cap = 30) {
    const int n = inst.n;
    if (dec.n != n) throw std::invalid_argument("exact_log_z_prime: dimension mismatch");
    detail::check_state_cap(n, cap, "exact_log_z_prime");

    const int s = dec.width();
    std::vector<double> rsum(s, 0.0), csum(s, 0.0);
    std::vector<std::vector<int>> row_cuts(n), col_cuts(n);
    for (int t = 0; t < s; ++t) {
        for (int i : dec.cuts[t].rows) row_cuts[i].push_back(t);
        for (int j : dec.cuts[t].cols) col_cuts[j].push_back(t);
        rsum[t] = -static_cast<double>(dec.cuts[t].rows.size());
        csum[t] = -static_cast<double>(dec.cuts[t].cols.size());
    }

    std::vector<int> x;
    LogSumExp lse;
    std::uint64_t count = 0;
    auto flip = [&](int b) {
        const double dx = -2.0 * x[b]; // change in x_b
        for (int t : row_cuts[b]) rsum[t] += dx;
        for (int t : col_cuts[b]) csum[t] += dx;
    };
    detail::gray_walk(n, x, flip, [&]() {
        double e = dec.diag_shift;
        for (int t = 0; t < s; ++t) e += dec.cuts[t].coeff * rsum[t] * csum[t];
        lse.add(e);
        ++count;
    });
    return {lse.value(), count};
}

namespace detail {

inline double profile_space_size(const AtomPartition& part) {
    double total = 1.0;
    for (int a = 0; a < part.atom_count(); ++a) total *= part.size(a) + 1.0;
    return total;
}

// Odometer walk over all profiles y in {0..|V_1|} x ... x {0..|V_r|}.
// Maintains per-source-set net spins and calls `visit(cut_energy_extra)` where
// cut_energy_extra must be computed by the caller from the net spins.
template <typename Visit>
void profile_walk(const AtomPartition& part, const CutDecomposition& dec, double cap_profiles,
                  const char* who, Visit&& visit) {
    if (profile_space_size(part) > cap_profiles)
        throw size_error(std::string(who) + ": profile space exceeds cap");
    const int r = part.atom_count();
    const int s = dec.width();
    SpinProfile y(r, 0);
    std::vector<double> net(part.source_sets.size(), 0.0);
    for (std::size_t t = 0; t < part.source_sets.size(); ++t) {
        double v = 0.0;
        for (int a : part.incidence[t]) v -= part.size(a);
        net[t] = v;
    }
    std::vector<std::vector<int>> sets_of_atom(r);
    for (std::size_t t = 0; t < part.incidence.size(); ++t)
        for (int a : part.incidence[t]) sets_of_atom[a].push_back(static_cast<int>(t));

    auto cut_energy = [&]() {
        double e = dec.diag_shift;
        for (int t = 0; t < s; ++t) e += dec.cuts[t].coeff * net[2 * t] * net[2 * t + 1];
        return e;
    };

    for (;;) {
        visit(y, cut_energy());
        int a = 0;
        while (a < r && y[a] == part.size(a)) {
            for (int t : sets_of_atom[a]) net[t] -= 2.0 * y[a];
            y[a] = 0;
            ++a;
        }
        if (a == r) break;
        ++y[a];
        for (int t : sets_of_atom[a]) net[t] += 2.0;
    }
}

} // namespace detail

/// log Z'' = log sum_y exp(sum_t d_t r'(y)_t c'(y)_t + diag_shift
///                          + sum_a |V_a| H(y_a / |V_a|)),
/// y ranging over {0..|V_1|} x ... x {0..|V_r|} (endpoints included; all-down
/// and all-up atoms are legitimate profiles and H(0) = H(1) = 0).
inline ExactResult exact_log_z_doubleprime(const AtomPartition& part, const CutDecomposition& dec,
                                           double cap_profiles = 1e7) {
    std::vector<std::vector<double>> ent(part.atom_count());
    for (int a = 0; a < part.atom_count(); ++a) {
        const int m = part.size(a);
        ent[a].resize(m + 1);
        for (int y = 0; y <= m; ++y)
            ent[a][y] = m * binary_entropy(static_cast<double>(y) / m);
    }
    LogSumExp lse;
    std::uint64_t count = 0;
    detail::profile_walk(part, dec, cap_profiles, "exact_log_z_doubleprime",
                         [&](const SpinProfile& y, double cut_e) {
                             double e = cut_e;
                             for (int a = 0; a < part.atom_count(); ++a) e += ent[a][y[a]];
                             lse.add(e);
                             ++count;
                         });
    return {lse.value(), count};
}

/// log sum_y exp(cut energy) * prod_a C(|V_a|, y_a): the pre-Stirling form.
/// Agrees with exact_log_z_prime exactly (same sum, regrouped by profile).
inline ExactResult binomial_profile_sum(const AtomPartition& part, const CutDecomposition& dec,
                                        double cap_profiles = 1e7) {
    std::vector<std::vector<double>> lb(part.atom_count());
    for (int a = 0; a < part.atom_count(); ++a) {
        const int m = part.size(a);
        lb[a].resize(m + 1);
        for (int y = 0; y <= m; ++y) lb[a][y] = log_choose(m, y);
    }
    LogSumExp lse;
    std::uint64_t count = 0;
    detail::profile_walk(part, dec, cap_profiles, "binomial_profile_sum",
                         [&](const SpinProfile& y, double cut_e) {
                             double e = cut_e;
                             for (int a = 0; a < part.atom_count(); ++a) e += lb[a][y[a]];
                             lse.add(e);
                             ++count;
                         });
    return {lse.value(), count};
}

/// Largest summand of Z'' and the profile attaining it.
inline std::pair<double, SpinProfile> max_profile_summand(const AtomPartition& part,
                                                          const CutDecomposition& dec,
                                                          double cap_profiles = 1e7) {
    std::vector<std::vector<double>> ent(part.atom_count());
    for (int a = 0; a < part.atom_count(); ++a) {
        const int m = part.size(a);
        ent[a].resize(m + 1);
        for (int y = 0; y <= m; ++y)
            ent[a][y] = m * binary_entropy(static_cast<double>(y) / m);
    }
    double best = -std::numeric_limits<double>::infinity();
    SpinProfile arg;
    detail::profile_walk(part, dec, cap_profiles, "max_profile_summand",
                         [&](const SpinProfile& y, double cut_e) {
                             double e = cut_e;
                             for (int a = 0; a < part.atom_count(); ++a) e += ent[a][y[a]];
                             if (e > best) {
                                 best = e;
                                 arg = y;
                             }
                         });
    return {best, arg};
}

/// max over x in {-1,+1}^n of ||Wx||_1. The supremum over the unit cube is
/// attained at a vertex since ||Wx||_1 is convex in x.
inline double exact_inf_to_one_norm(const Matrix& w, int cap = 24) {
    const int n = w.n();
    detail::check_state_cap(n, cap, "exact_inf_to_one_norm");
    if (n == 0) return 0.0;

    std::vector<double> g(n, 0.0); // g = W x
    std::vector<int> x;
    double best = 0.0;
    auto flip = [&](int b) {
        const double dx = -2.0 * x[b];
        for (int i = 0; i < n; ++i) g[i] += w(i, b) * dx;
    };
    auto visit = [&]() {
        double v = 0.0;
        for (int i = 0; i < n; ++i) v += std::abs(g[i]);
        best = std::max(best, v);
    };
    x.assign(n, -1);
    for (int i = 0; i < n; ++i) {
        g[i] = 0.0;
        for (int j = 0; j < n; ++j) g[i] -= w(i, j);
    }
    visit();
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t t = 1; t < total; ++t) {
        const int b = std::countr_zero(t);
        flip(b);
        x[b] = -x[b];
        visit();
    }
    return best;
}

/// E[sum_i x_i] under the Gibbs distribution with fields h_i + h_shift.
inline double exact_magnetization(const IsingInstance& inst, double h_shift, int cap = 24) {
    inst.validate();
    const int n = inst.n;
    detail::check_state_cap(n, cap, "exact_magnetization");

    IsingInstance shifted = inst;
    for (int i = 0; i < n; ++i) shifted.h[i] += h_shift;

    // pass 1: max energy
    std::vector<int> x;
    std::vector<double> s(n, 0.0);
    double energy = 0.0;
    auto recompute = [&]() {
        energy = 0.0;
        for (int i = 0; i < n; ++i) {
            s[i] = 0.0;
            for (int j = 0; j < n; ++j)
                if (j != i) s[i] += shifted.j(i, j) * x[j];
        }
        for (int i = 0; i < n; ++i)
            energy += shifted.j(i, i) + x[i] * (s[i] + shifted.h[i]);
    };
    auto flip = [&](int b) {
        energy += -2.0 * x[b] * (2.0 * s[b] + shifted.h[b]);
        const double xb_new = -x[b];
        for (int j = 0; j < n; ++j)
            if (j != b) s[j] += 2.0 * shifted.j(j, b) * xb_new;
    };

    double emax = -std::numeric_limits<double>::infinity();
    x.assign(n, -1);
    recompute();
    std::uint64_t count = 0;
    detail::gray_walk(n, x, flip, [&]() {
        if ((count & 0xFFFFu) == 0xFFFFu) recompute();
        emax = std::max(emax, energy);
        ++count;
    });

    // pass 2: expectation with the shift applied
    double num = 0.0, den = 0.0;
    int mag = -n;
    count = 0;
    x.assign(n, -1);
    recompute();
    auto flip2 = [&](int b) {
        flip(b);
        mag += -2 * x[b]; // x[b] still holds the pre-flip spin here
    };
    detail::gray_walk(n, x, flip2, [&]() {
        if ((count & 0xFFFFu) == 0xFFFFu) recompute();
        const double wgt = std::exp(energy - emax);
        num += mag * wgt;
        den += wgt;
        ++count;
    });
    return num / den;
}

/// Exact log partition function of a k-uniform tensor model.
inline ExactResult exact_log_z_mrf(const MrfInstance& inst, int cap = 22) {
    inst.validate();
    const int n = inst.n;
    detail::check_state_cap(n, cap, "exact_log_z_mrf");

    // entries with odd multiplicity of vertex v flip sign when v flips
    std::vector<std::pair<std::vector<int>, double>> entries(inst.entries.begin(),
                                                             inst.entries.end());
    std::vector<std::vector<int>> odd_adj(n);
    for (std::size_t e = 0; e < entries.size(); ++e) {
        std::vector<int> mult(n, 0);
        for (int i : entries[e].first) ++mult[i];
        for (int v = 0; v < n; ++v)
            if (mult[v] % 2 == 1) odd_adj[v].push_back(static_cast<int>(e));
    }

    std::vector<int> x;
    std::vector<double> val(entries.size());
    double energy = 0.0;
    auto recompute = [&]() {
        energy = 0.0;
        for (std::size_t e = 0; e < entries.size(); ++e) {
            double v = entries[e].second;
            for (int i : entries[e].first) v *= x[i];
            val[e] = v;
            energy += v;
        }
    };

    LogSumExp lse;
    std::uint64_t count = 0;
    x.assign(n, -1);
    recompute();
    auto flip = [&](int b) {
        for (int e : odd_adj[b]) {
            energy -= 2.0 * val[e];
            val[e] = -val[e];
        }
    };
    detail::gray_walk(n, x, flip, [&]() {
        if ((count & 0xFFFFu) == 0xFFFFu) recompute();
        lse.add(energy);
        ++count;
    });
    return {lse.value(), count};
}

} // namespace dising
