#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "dising/errors.hpp"
#include "dising/scalar.hpp"
#include "dising/simplex.hpp"

namespace dising {

/**
 * The per-grid-cell concave program: maximize
 *     sum_a v_a H(z_a / v_a) + sum_a linear_a z_a
 * over 0 <= z_a <= v_a and window constraints lo <= sum_{a in atoms} z_a <= hi.
 * The linear part carries atom-averaged external fields; it is zero for the
 * plain entropy program.
 */
struct EntropyProgram {
    struct Window {
        std::vector<int> atoms;
        double lo = 0.0;
        double hi = 0.0;
    };

    std::vector<double> v;
    std::vector<double> linear; // empty means all-zero
    std::vector<Window> windows;

    int dim() const { return static_cast<int>(v.size()); }

    double linear_at(int a) const { return linear.empty() ? 0.0 : linear[a]; }

    double objective(const std::vector<double>& z) const {
        double f = 0.0;
        for (int a = 0; a < dim(); ++a) {
            const double p = std::clamp(z[a] / v[a], 0.0, 1.0);
            f += v[a] * binary_entropy(p) + linear_at(a) * z[a];
        }
        return f;
    }

    /// Largest violation of any box or window constraint at z.
    double max_residual(const std::vector<double>& z) const {
        double r = 0.0;
        for (int a = 0; a < dim(); ++a) {
            r = std::max(r, -z[a]);
            r = std::max(r, z[a] - v[a]);
        }
        for (const auto& w : windows) {
            double s = 0.0;
            for (int a : w.atoms) s += z[a];
            r = std::max(r, w.lo - s);
            r = std::max(r, s - w.hi);
        }
        return r;
    }

    LpProblem to_lp() const {
        LpProblem p;
        p.num_vars = dim();
        for (int a = 0; a < dim(); ++a) {
            std::vector<double> row(dim(), 0.0);
            row[a] = 1.0;
            p.add_row(std::move(row), v[a]);
        }
        for (const auto& w : windows) {
            std::vector<double> up(dim(), 0.0), down(dim(), 0.0);
            for (int a : w.atoms) {
                up[a] = 1.0;
                down[a] = -1.0;
            }
            p.add_row(std::move(up), w.hi);
            p.add_row(std::move(down), -w.lo);
        }
        return p;
    }
};

struct FeasibilityResult {
    bool feasible = false;
    std::vector<double> witness;
    double violation = 0.0; // phase-1 residual; the separating certificate when infeasible
};

/// Linear feasibility by simplex phase one; points within 1e-9 of the boundary
/// count as feasible.
inline FeasibilityResult check_feasible(const EntropyProgram& program) {
    const LpResult lp = lp_feasible(program.to_lp());
    FeasibilityResult r;
    r.violation = lp.infeasibility;
    if (lp.status == LpResult::Status::Optimal) {
        r.feasible = true;
        r.witness = lp.x;
    }
    return r;
}

struct EntropySolution {
    enum class Status { Feasible, Infeasible };
    Status status = Status::Infeasible;
    std::vector<double> z; // feasible point attaining `value`
    double value = 0.0;    // L: best feasible objective seen
    double upper = 0.0;    // U: certified bound on the true optimum, U - L <= lambda
    double lambda = 0.0;
    int iterations = 0;
};

namespace detail {

// Gradient of the program objective with iterates clamped to
// [eta v, (1-eta) v]; the entropy gradient is unbounded at the box faces and
// the clamp keeps the linearization finite while staying a valid upper bound
// (concavity over the whole box).
inline constexpr double kEntropyEta = 1e-9;

inline std::vector<double> clamp_interior(const EntropyProgram& prog, const std::vector<double>& z) {
    std::vector<double> out(z.size());
    for (int a = 0; a < prog.dim(); ++a)
        out[a] = std::clamp(z[a], kEntropyEta * prog.v[a], (1.0 - kEntropyEta) * prog.v[a]);
    return out;
}

inline std::vector<double> gradient(const EntropyProgram& prog, const std::vector<double>& zt) {
    std::vector<double> g(zt.size());
    for (int a = 0; a < prog.dim(); ++a)
        g[a] = std::log((prog.v[a] - zt[a]) / zt[a]) + prog.linear_at(a);
    return g;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace detail

/**
 * Away-step conditional gradient over the window polytope. Every iteration
 * produces a valid upper bound U = f(z~) + max_{w in P} g(z~).(w - z~) from
 * the clamped-gradient linearization; the loop stops once the smallest U seen
 * and the best feasible value L satisfy U - L <= lambda. The returned value is
 * L, attained exactly by the returned point.
 */
inline EntropySolution solve(const EntropyProgram& program, double lambda, int max_iters = 200000) {
    if (!(lambda > 0.0)) throw std::invalid_argument("solve: lambda must be positive");
    EntropySolution sol;
    sol.lambda = lambda;

    const FeasibilityResult feas = check_feasible(program);
    if (!feas.feasible) return sol;

    const int r = program.dim();
    const LpProblem lp = program.to_lp();

    // active set: point -> weight; seeded with the half point when feasible
    // (it is the unconstrained maximizer of the pure entropy objective),
    // otherwise with the phase-1 witness
    std::map<std::vector<double>, double> active;
    {
        std::vector<double> half(r);
        for (int a = 0; a < r; ++a) half[a] = 0.5 * program.v[a];
        if (program.max_residual(half) <= 0.0)
            active[half] = 1.0;
        else
            active[feas.witness] = 1.0;
    }

    auto combine = [&]() {
        std::vector<double> z(r, 0.0);
        for (const auto& [pt, w] : active)
            for (int a = 0; a < r; ++a) z[a] += w * pt[a];
        return z;
    };

    std::vector<double> z = combine();
    std::vector<double> z_best = z;
    double L = program.objective(z);
    double U = std::numeric_limits<double>::infinity();

    for (int it = 0; it < max_iters; ++it) {
        sol.iterations = it;
        const std::vector<double> zt = detail::clamp_interior(program, z);
        const std::vector<double> g = detail::gradient(program, zt);

        const LpResult lin = lp_maximize(lp, g);
        if (lin.status != LpResult::Status::Optimal)
            throw internal_error("solve: linear subproblem failed on a feasible program");
        U = std::min(U, program.objective(zt) + lin.value - detail::dot(g, zt));

        {
            const double fz = program.objective(z);
            if (fz > L) {
                L = fz;
                z_best = z;
            }
        }
        if (U - L <= lambda) break;

        // direction choice: Frank-Wolfe toward the LP vertex, or away from the
        // worst active point
        std::vector<double> dir(r);
        double fw_gap = 0.0;
        for (int a = 0; a < r; ++a) {
            dir[a] = lin.x[a] - z[a];
            fw_gap += g[a] * dir[a];
        }
        auto away_it = active.begin();
        double away_score = std::numeric_limits<double>::infinity();
        for (auto it2 = active.begin(); it2 != active.end(); ++it2) {
            const double s = detail::dot(g, it2->first);
            if (s < away_score) {
                away_score = s;
                away_it = it2;
            }
        }
        double aw_gap = detail::dot(g, z) - away_score;
        const double aw_weight = away_it->second;
        const bool use_away = (aw_gap > fw_gap) && (aw_weight < 1.0) && (active.size() > 1);
        double alpha_max = 1.0;
        if (use_away) {
            for (int a = 0; a < r; ++a) dir[a] = z[a] - away_it->first[a];
            alpha_max = aw_weight / (1.0 - aw_weight);
        }

        // exact-ish line search: bisection on the monotone derivative
        auto dphi = [&](double alpha) {
            std::vector<double> p(r);
            for (int a = 0; a < r; ++a) p[a] = z[a] + alpha * dir[a];
            const std::vector<double> pc = detail::clamp_interior(program, p);
            const std::vector<double> gp = detail::gradient(program, pc);
            return detail::dot(gp, dir);
        };
        // a zero step in the FW direction means the gap at the clamped point
        // is already dust; the next U check ends the loop
        double alpha = alpha_max;
        if (dphi(0.0) <= 0.0) {
            alpha = 0.0;
        } else if (dphi(alpha_max) < 0.0) {
            double lo = 0.0, hi = alpha_max;
            for (int b = 0; b < 100; ++b) {
                const double mid = 0.5 * (lo + hi);
                (dphi(mid) > 0.0 ? lo : hi) = mid;
            }
            alpha = 0.5 * (lo + hi);
        }

        if (use_away) {
            for (auto& [pt, w] : active) w *= (1.0 + alpha);
            away_it->second -= alpha;
            if (away_it->second <= 1e-15) active.erase(away_it);
        } else {
            for (auto& [pt, w] : active) w *= (1.0 - alpha);
            active[lin.x] += alpha;
        }
        // drop dust and renormalize the convex weights
        for (auto it2 = active.begin(); it2 != active.end();) {
            if (it2->second <= 1e-15)
                it2 = active.erase(it2);
            else
                ++it2;
        }
        double wsum = 0.0;
        for (const auto& [pt, w] : active) wsum += w;
        for (auto& [pt, w] : active) w /= wsum;
        z = combine();

        if (it + 1 >= max_iters)
            throw accuracy_error("solve: certificate gap did not close within the iteration cap");
    }

    sol.status = EntropySolution::Status::Feasible;
    sol.z = z_best;
    sol.value = L;
    sol.upper = U;
    return sol;
}

} // namespace dising
