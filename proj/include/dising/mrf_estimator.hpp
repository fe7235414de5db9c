#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include "dising/entropy.hpp"
#include "dising/errors.hpp"
#include "dising/estimator.hpp"
#include "dising/model.hpp"
#include "dising/refine.hpp"
#include "dising/rng.hpp"
#include "dising/tensor.hpp"

namespace dising {

/// Granulation step for k axes per cut, the k-linear analogue of the pairwise
/// formula (coefficient bound 27^(k/2), one factor of net-spin error per axis).
inline double compute_gamma_mrf(double eps, double delta_density, int s, int k) {
    if (s <= 0) return 1.0;
    return eps * std::sqrt(delta_density) / (4.0 * k * std::pow(27.0, k / 2.0) * s);
}

struct MrfEstimatorOptions {
    double epsilon = 0.5;
    double fail_prob = 0.125;
    std::uint64_t seed = 0;
    CutSearchMode mode = CutSearchMode::Exact;
    TensorRegMode reg_mode = TensorRegMode::Constant;
    int threads = 0;
    double lambda = -1.0;
    int max_width = 2;
    double cap_cells = 2e5;
    int exact_norm_cap = 12;
    int exact_cut_cap = 12;
    int solver_max_iters = 200000;
    bool width_selection = true;
    double regularity_share = 0.25;
};

namespace detail {

inline std::optional<double> mrf_cell_value(const AtomPartition& part,
                                            const TensorCutDecomposition& dec,
                                            const GridSpec& grid, const std::vector<int>& coords,
                                            double lambda, int solver_max_iters) {
    const EntropyProgram prog = make_cell_program(part, grid, coords, FieldSplit{});
    if (!cell_plausible(prog)) return std::nullopt;
    const EntropySolution sol = solve(prog, lambda, solver_max_iters);
    if (sol.status != EntropySolution::Status::Feasible) return std::nullopt;

    const int n = part.n;
    double e = 0.0;
    for (int i = 0; i < dec.width(); ++i) {
        double prod = dec.cuts[i].coeff;
        for (int j = 0; j < dec.k; ++j) {
            const double sbar = coords[i * dec.k + j] * grid.gamma;
            prod *= 2.0 * n * sbar - static_cast<double>(dec.cuts[i].axis_sets[j].size());
        }
        e += prod;
    }
    e += n * sol.value;
    return e;
}

inline BudgetBreakdown assemble_budget_mrf(const TensorCutDecomposition& dec,
                                           const AtomPartition& part, const GridSpec& grid,
                                           double lambda, double regularity, bool certified) {
    BudgetBreakdown b;
    b.regularity = regularity;
    b.regularity_certified = certified;
    const int n = part.n;
    const int k = dec.k;
    for (int a = 0; a < part.atom_count(); ++a) b.stirling += 2.0 * std::log(part.size(a) + 1.0);
    for (int i = 0; i < dec.width(); ++i) {
        const double di = std::abs(dec.cuts[i].coeff);
        double gran_i = 0.0, round_i = 0.0;
        for (int j = 0; j < k; ++j) {
            double prod_other = 1.0;
            for (int l = 0; l < k; ++l)
                if (l != j) prod_other *= static_cast<double>(dec.cuts[i].axis_sets[l].size());
            gran_i += 2.0 * grid.gamma * n * prod_other;
            round_i += 2.0 * part.incidence[i * k + j].size() * prod_other;
        }
        b.granulation += di * gran_i;
        b.small_n += di * round_i;
    }
    b.solver = lambda * n;
    b.rounding = part.atom_count() * std::log(5.0);
    return b;
}

// Same structure as the matrix case: oracle norm within the cap, the next
// accepted block value scaled by 2^k in exact mode, and the residual's
// entrywise L1 as the unconditional certified fallback.
inline std::vector<std::pair<double, bool>> prefix_residual_norms_mrf(
    const MrfInstance& inst, const TensorCutDecomposition& dec, CutSearchMode mode,
    int exact_norm_cap) {
    const int s = dec.width();
    std::vector<std::pair<double, bool>> out(s + 1, {0.0, true});
    Tensor w = Tensor::from_instance(inst);
    const double two_k = std::pow(2.0, dec.k);
    for (int t = 0; t <= s; ++t) {
        double l1 = 0.0;
        for (double v : w.data()) l1 += std::abs(v);
        double bound = l1;
        if (inst.n <= exact_norm_cap)
            bound = std::min(bound, exact_tensor_inf_to_one_norm(w, exact_norm_cap));
        if (mode == CutSearchMode::Exact) {
            if (t < s)
                bound = std::min(bound, two_k * dec.step_values[t]);
            else if (!dec.stopped_by_width_cap)
                bound = std::min(bound, dec.claimed_error);
        }
        out[t] = {bound, true};
        if (t < s) {
            const auto& c = dec.cuts[t];
            std::vector<int> pos(dec.k, 0);
            for (;;) {
                std::size_t flat = 0;
                for (int a = 0; a < dec.k; ++a) flat = flat * inst.n + c.axis_sets[a][pos[a]];
                w.data()[flat] -= c.coeff;
                int a = dec.k - 1;
                while (a >= 0 && pos[a] + 1 == static_cast<int>(c.axis_sets[a].size())) {
                    pos[a] = 0;
                    --a;
                }
                if (a < 0) break;
                ++pos[a];
            }
        }
    }
    return out;
}

inline SweepBest sweep_grid_mrf(const AtomPartition& part, const TensorCutDecomposition& dec,
                                const GridSpec& grid, double lambda, int threads,
                                int solver_max_iters) {
    const std::uint64_t total = static_cast<std::uint64_t>(grid.cells());
    const int nw = std::max(1, threads);
    std::vector<SweepBest> partial(nw);
    auto worker = [&](int wi) {
        SweepBest local;
        std::vector<int> coords(grid.dims, 0);
        const std::uint64_t lo = total * wi / nw;
        const std::uint64_t hi = total * (wi + 1) / nw;
        for (std::uint64_t f = lo; f < hi; ++f) {
            std::uint64_t rem = f;
            for (int d = grid.dims - 1; d >= 0; --d) {
                coords[d] = static_cast<int>(rem % grid.points);
                rem /= grid.points;
            }
            const auto val = mrf_cell_value(part, dec, grid, coords, lambda, solver_max_iters);
            if (!val) continue;
            ++local.feasible;
            if (!local.any || *val > local.value) {
                local.any = true;
                local.value = *val;
                local.cell = f;
            }
        }
        partial[wi] = local;
    };
    if (nw == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nw);
        for (int wi = 0; wi < nw; ++wi) pool.emplace_back(worker, wi);
        for (auto& t : pool) t.join();
    }
    SweepBest best;
    for (const auto& p : partial) {
        if (!p.any) continue;
        if (!best.any || p.value > best.value || (p.value == best.value && p.cell < best.cell)) {
            best.any = true;
            best.value = p.value;
            best.cell = p.cell;
        }
    }
    for (const auto& p : partial) best.feasible += p.feasible;
    return best;
}

} // namespace detail

/// Tensor analogue of the main estimator: decompose, refine the k*s axis sets,
/// sweep the k*s-dimensional window grid, report the best cell and a budget
/// certified term by term.
inline EstimateReport estimate_log_z_mrf(const MrfInstance& inst, const MrfEstimatorOptions& opts) {
    if (!(opts.epsilon > 0.0 && opts.epsilon <= 1.0))
        throw std::invalid_argument("estimate_log_z_mrf: epsilon must be in (0,1]");
    inst.validate();
    const int n = inst.n;
    const int k = inst.k;
    const DensityReport dens = norms(inst);
    const double delta = std::isfinite(dens.delta_max) ? std::min(dens.delta_max, 1.0) : 1.0;
    const double eps_prime =
        opts.epsilon * std::sqrt(delta) * opts.regularity_share / std::pow(2.0, k);
    const double lambda = opts.lambda > 0.0 ? opts.lambda : opts.epsilon / 2.0;
    const int threads =
        opts.threads > 0 ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    const int reps = (opts.mode == CutSearchMode::Exact)
                         ? 1
                         : std::max(1, static_cast<int>(std::ceil(8.0 * std::log(1.0 / opts.fail_prob))));

    EstimateReport rep;
    rep.lambda = lambda;
    rep.eps_prime = eps_prime;
    rep.delta_density = delta;
    rep.seed = opts.seed;
    rep.repetitions = reps;

    int max_width_seen = 0;
    for (int run = 0; run < reps; ++run) {
        const std::uint64_t run_seed = derive_seed(opts.seed, run);
        TensorFkLimits limits;
        limits.max_width = opts.max_width;
        limits.exact_cap = opts.exact_cut_cap;
        TensorCutDecomposition dec = tensor_decompose(inst, eps_prime, 1.0 / 8.0, opts.mode,
                                                      run_seed, opts.reg_mode, limits);
        max_width_seen = std::max(max_width_seen, dec.width());

        const auto norms_by_width =
            detail::prefix_residual_norms_mrf(inst, dec, opts.mode, opts.exact_norm_cap);
        int best_w = dec.width();
        double best_total = std::numeric_limits<double>::infinity();
        AtomPartition part;
        GridSpec grid;
        BudgetBreakdown budget;
        const int w_lo = opts.width_selection ? 0 : dec.width();
        for (int w = dec.width(); w >= w_lo; --w) {
            TensorCutDecomposition prefix = dec;
            prefix.cuts.resize(w);
            const AtomPartition part_w = refine_tensor(n, prefix);
            const GridSpec grid_w =
                detail::make_grid(compute_gamma_mrf(opts.epsilon, delta, w, k), k * w,
                                  opts.cap_cells, "estimate_log_z_mrf");
            const BudgetBreakdown b = detail::assemble_budget_mrf(
                prefix, part_w, grid_w, lambda, norms_by_width[w].first, norms_by_width[w].second);
            if (b.total() < best_total) {
                best_total = b.total();
                best_w = w;
                part = part_w;
                grid = grid_w;
                budget = b;
            }
        }
        dec.cuts.resize(best_w);
        dec.step_values.resize(best_w);
        dec.step_potentials.resize(best_w);
        if (norms_by_width[best_w].second) dec.certified_error = norms_by_width[best_w].first;
        budget.regularity_claimed = dec.claimed_error;
        budget.granulation_claimed = opts.epsilon * dens.l1 / 2.0;

        const detail::SweepBest best =
            detail::sweep_grid_mrf(part, dec, grid, lambda, threads, opts.solver_max_iters);
        if (!best.any)
            throw internal_error("estimate_log_z_mrf: every grid cell infeasible");

        RunDiagnostics diag;
        diag.value = best.value;
        diag.width = best_w;
        diag.atoms = part.atom_count();
        diag.gamma = grid.gamma;
        diag.grid_cells = grid.cells();
        diag.feasible_cells = best.feasible;
        diag.stopped_by_width_cap = dec.stopped_by_width_cap;
        diag.budget = budget;

        rep.runs.push_back(best.value);
        rep.run_details.push_back(std::move(diag));
    }

    rep.log_z_hat = detail::median_of(rep.runs);
    rep.budget.regularity_certified = true;
    for (const auto& d : rep.run_details) {
        const BudgetBreakdown& b = d.budget;
        rep.budget.regularity = std::max(rep.budget.regularity, b.regularity);
        rep.budget.field = std::max(rep.budget.field, b.field);
        rep.budget.stirling = std::max(rep.budget.stirling, b.stirling);
        rep.budget.granulation = std::max(rep.budget.granulation, b.granulation);
        rep.budget.solver = std::max(rep.budget.solver, b.solver);
        rep.budget.rounding = std::max(rep.budget.rounding, b.rounding);
        rep.budget.small_n = std::max(rep.budget.small_n, b.small_n);
        rep.budget.regularity_claimed = std::max(rep.budget.regularity_claimed, b.regularity_claimed);
        rep.budget.granulation_claimed =
            std::max(rep.budget.granulation_claimed, b.granulation_claimed);
        rep.budget.regularity_certified = rep.budget.regularity_certified && b.regularity_certified;
        rep.width = std::max(rep.width, d.width);
        rep.atoms = std::max(rep.atoms, d.atoms);
        rep.gamma = std::max(rep.gamma, d.gamma);
    }

    const double s = max_width_seen;
    rep.large_n_condition_met =
        n >= 4.0 * std::sqrt(27.0) * s * std::pow(2.0, k * s) / (std::sqrt(delta) * opts.epsilon);
    return rep;
}

} // namespace dising
