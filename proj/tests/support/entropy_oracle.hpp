#pragma once

// Test-side oracle machinery for the window-constrained entropy programs.
// Independent of the solver: plain grids plus the one-dimensional closed form
// for the final coordinate. Shared by the unit tests and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dising/entropy.hpp"
#include "dising/rng.hpp"

namespace dising_test {

using dising::EntropyProgram;
using dising::SplitMix64;

/// Random feasible program built around a hidden interior point, so phase-one
/// feasibility is guaranteed with slack.
inline EntropyProgram random_program(SplitMix64& rng, int max_atoms = 4, bool with_field = false) {
    EntropyProgram prog;
    const int r = 2 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_atoms - 1)));
    prog.v.resize(r);
    double total = 0.0;
    for (auto& v : prog.v) {
        v = rng.next_double(0.5, 1.5);
        total += v;
    }
    for (auto& v : prog.v) v /= total;

    std::vector<double> z0(r);
    for (int a = 0; a < r; ++a) z0[a] = prog.v[a] * rng.next_double(0.15, 0.85);

    const int nw = 1 + static_cast<int>(rng.next_below(3));
    for (int w = 0; w < nw; ++w) {
        EntropyProgram::Window win;
        for (int a = 0; a < r; ++a)
            if (rng.next_bool()) win.atoms.push_back(a);
        if (win.atoms.empty()) win.atoms.push_back(static_cast<int>(rng.next_below(r)));
        double sum0 = 0.0;
        for (int a : win.atoms) sum0 += z0[a];
        const double width = rng.next_double(0.05, 0.2);
        win.lo = std::max(0.0, sum0 - rng.next_double(0.2, 0.8) * width);
        win.hi = win.lo + width;
        prog.windows.push_back(std::move(win));
    }
    if (with_field) {
        prog.linear.resize(r);
        for (auto& c : prog.linear) c = rng.next_double(-0.5, 0.5);
    }
    return prog;
}

/// Clearly contradictory program: the same all-atom sum confined to two
/// disjoint windows.
inline EntropyProgram contradictory_program(int r) {
    EntropyProgram prog;
    prog.v.assign(r, 1.0 / r);
    EntropyProgram::Window high, low;
    for (int a = 0; a < r; ++a) {
        high.atoms.push_back(a);
        low.atoms.push_back(a);
    }
    high.lo = 0.9;
    high.hi = 0.91;
    low.lo = 0.0;
    low.hi = 0.01;
    prog.windows.push_back(high);
    prog.windows.push_back(low);
    return prog;
}

namespace detail {

inline double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Best value of the final coordinate given the earlier ones: clamp the
// unconstrained maximizer v * sigmoid(linear) into the interval the windows
// leave open. Returns -inf when no value works.
inline double best_last(const EntropyProgram& p, const std::vector<double>& prefix) {
    const int last = p.dim() - 1;
    double lo = 0.0, hi = p.v[last];
    for (const auto& w : p.windows) {
        double partial = 0.0;
        bool has_last = false;
        for (int a : w.atoms) {
            if (a == last)
                has_last = true;
            else
                partial += prefix[a];
        }
        if (has_last) {
            lo = std::max(lo, w.lo - partial);
            hi = std::min(hi, w.hi - partial);
        } else if (partial < w.lo - 1e-12 || partial > w.hi + 1e-12) {
            return -std::numeric_limits<double>::infinity();
        }
    }
    if (lo > hi + 1e-12) return -std::numeric_limits<double>::infinity();
    hi = std::max(lo, hi);
    const double z = std::clamp(p.v[last] * logistic(p.linear_at(last)), lo, hi);
    double f = p.v[last] * dising::binary_entropy(std::clamp(z / p.v[last], 0.0, 1.0)) +
               p.linear_at(last) * z;
    for (int a = 0; a < last; ++a)
        f += p.v[a] * dising::binary_entropy(std::clamp(prefix[a] / p.v[a], 0.0, 1.0)) +
             p.linear_at(a) * prefix[a];
    return f;
}

inline double sweep(const EntropyProgram& p, const std::vector<double>& lo,
                    const std::vector<double>& hi, double step, std::vector<double>& best_prefix) {
    const int dims = p.dim() - 1;
    std::vector<double> prefix(p.dim(), 0.0);
    std::vector<int> idx(std::max(dims, 1), 0);
    std::vector<int> counts(std::max(dims, 1), 1);
    for (int d = 0; d < dims; ++d)
        counts[d] = static_cast<int>(std::floor((hi[d] - lo[d]) / step + 1e-12)) + 1;

    double best = -std::numeric_limits<double>::infinity();
    for (;;) {
        for (int d = 0; d < dims; ++d)
            prefix[d] = std::min(lo[d] + idx[d] * step, p.v[d]);
        const double f = best_last(p, prefix);
        if (f > best) {
            best = f;
            best_prefix.assign(prefix.begin(), prefix.begin() + std::max(dims, 0));
        }
        int d = 0;
        while (d < dims && idx[d] + 1 >= counts[d]) {
            idx[d] = 0;
            ++d;
        }
        if (d >= dims) break;
        ++idx[d];
    }
    return best;
}

} // namespace detail

/// Grid maximum: the first r-1 coordinates on a step-wide lattice (refined
/// once around the coarse best), the final coordinate in closed form.
inline double grid_opt(const EntropyProgram& p, double step = 1e-3) {
    const int dims = p.dim() - 1;
    std::vector<double> lo(std::max(dims, 1), 0.0), hi(std::max(dims, 1), 0.0);
    for (int d = 0; d < dims; ++d) hi[d] = p.v[d];
    std::vector<double> coarse_best;
    const double coarse = detail::sweep(p, lo, hi, step, coarse_best);
    if (!std::isfinite(coarse) || dims == 0) return coarse;

    // local refinement around the coarse winner
    std::vector<double> rlo(dims), rhi(dims);
    for (int d = 0; d < dims; ++d) {
        rlo[d] = std::max(0.0, coarse_best[d] - step);
        rhi[d] = std::min(p.v[d], coarse_best[d] + step);
    }
    std::vector<double> fine_best;
    const double fine = detail::sweep(p, rlo, rhi, step / 40.0, fine_best);
    return std::max(coarse, fine);
}

/// Grid feasibility probe at the same resolution.
inline bool grid_feasible(const EntropyProgram& p, double step = 1e-3) {
    std::vector<double> ignored;
    const int dims = p.dim() - 1;
    std::vector<double> lo(std::max(dims, 1), 0.0), hi(std::max(dims, 1), 0.0);
    for (int d = 0; d < dims; ++d) hi[d] = p.v[d];
    return std::isfinite(detail::sweep(p, lo, hi, step, ignored));
}

} // namespace dising_test
