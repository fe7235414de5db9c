#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include "dising/cut.hpp"
#include "dising/entropy.hpp"
#include "dising/errors.hpp"
#include "dising/exact.hpp"
#include "dising/model.hpp"
#include "dising/refine.hpp"
#include "dising/rng.hpp"
#include "dising/scalar.hpp"

namespace dising {

/// Grid step for the net-spin windows: eps * sqrt(delta) / (4 * sqrt(27) * s),
/// or 1 when there are no cuts to granulate.
inline double compute_gamma(double eps, double delta_density, int s) {
    if (s <= 0) return 1.0;
    return eps * std::sqrt(delta_density) / (4.0 * std::sqrt(27.0) * s);
}

/// Round a fractional up-spin count to an integer profile entry: ceil below
/// the midpoint, floor above. Loses at most log 5 of per-atom entropy.
inline int entropy_round(int n_atom, double z) {
    const double y = (z <= n_atom / 2.0) ? std::ceil(z) : std::floor(z);
    return static_cast<int>(std::clamp(y, 0.0, static_cast<double>(n_atom)));
}

struct GridSpec {
    double gamma = 1.0;
    int points = 1; // |S| = floor(1/gamma) + 1
    int dims = 0;

    static GridSpec from_gamma(double gamma, int dims) {
        GridSpec g;
        g.gamma = gamma;
        g.points = static_cast<int>(std::floor(1.0 / gamma + 1e-12)) + 1;
        g.dims = dims;
        return g;
    }

    double cells() const { return std::pow(static_cast<double>(points), dims); }
};

/**
 * Additive error budget of one estimator run. Every term is an inequality the
 * run actually certifies, computed from the run's own cuts, atoms and grid:
 *
 *   |log Z - log Z'|   <= regularity + field
 *   |log Z' - log Z''| <= stirling / 2
 *   |log Z'' - log M|  <= stirling / 2 + granulation + solver   (one side)
 *                         granulation + rounding + small_n      (other side)
 *
 * so |estimate - log Z| <= total(). The `*_claimed` values are a-priori closed
 * forms, reported for comparison but never asserted.
 */
struct BudgetBreakdown {
    double regularity = 0.0;  // inf->1 norm of the residual (certified when possible)
    double field = 0.0;       // L1 distance from h to its atom averages
    double stirling = 0.0;    // 2 * sum_a log(|V_a| + 1)
    double granulation = 0.0; // sum_i |d_i| * 2 gamma n * (|R_i| + |C_i|)
    double solver = 0.0;      // lambda * n
    double rounding = 0.0;    // r * log 5
    double small_n = 0.0;     // integer-rounding energy slack and field rounding

    bool regularity_certified = false;
    double regularity_claimed = 0.0;  // 4 eps' n ||J_off||_2
    double granulation_claimed = 0.0; // eps ||J||_1 / 2

    double total() const {
        return regularity + field + stirling + granulation + solver + rounding + small_n;
    }
};

struct RunDiagnostics {
    double value = 0.0;
    int width = 0;
    int atoms = 0;
    double gamma = 0.0;
    double grid_cells = 0.0;
    std::uint64_t feasible_cells = 0;
    bool stopped_by_width_cap = false;
    BudgetBreakdown budget;
};

struct EstimateReport {
    double log_z_hat = 0.0;
    BudgetBreakdown budget; // per-term max across runs
    std::vector<double> runs;
    std::vector<RunDiagnostics> run_details;
    int width = 0; // max across runs
    int atoms = 0; // max across runs
    double gamma = 0.0;
    double lambda = 0.0;
    double eps_prime = 0.0;
    double delta_density = 1.0;
    bool large_n_condition_met = false;
    std::uint64_t seed = 0;
    int repetitions = 1;
};

struct EstimatorOptions {
    double epsilon = 0.5;
    double fail_prob = 0.125;
    std::uint64_t seed = 0;
    CutSearchMode mode = CutSearchMode::Exact;
    int threads = 0;          // 0 = all cores
    double lambda = -1.0;     // <= 0 picks epsilon / 2
    int max_width = 3;        // resource cap on the peeling width
    double cap_cells = 2e5;   // resource cap on |S|^(2s)
    int exact_norm_cap = 24;  // residual certification cap
    int exact_cut_cap = 24;   // exact cut-norm search cap
    int sample_size = 12;     // row sample per sampled cut search
    int solver_max_iters = 200000;
    bool width_selection = true;    // keep the peel prefix with the smallest budget
    double regularity_share = 0.25; // target fraction of eps*||J||_1 spent on the residual
};

namespace detail {

struct FieldSplit {
    std::vector<double> atom_avg;   // mean field per atom
    double residual_l1 = 0.0;       // sum_i |h_i - avg(atom(i))|
    double avg_abs_sum = 0.0;       // sum_a |avg_a|
    double avg_weighted_sum = 0.0;  // sum_a avg_a * |V_a| == sum_i h_i
    bool any = false;
};

inline FieldSplit split_field(const IsingInstance& inst, const AtomPartition& part) {
    FieldSplit f;
    f.atom_avg.assign(part.atom_count(), 0.0);
    for (int v = 0; v < inst.n; ++v) f.atom_avg[part.atom_of[v]] += inst.h[v];
    for (int a = 0; a < part.atom_count(); ++a) {
        f.avg_weighted_sum += f.atom_avg[a];
        f.atom_avg[a] /= part.size(a);
        f.avg_abs_sum += std::abs(f.atom_avg[a]);
        if (f.atom_avg[a] != 0.0) f.any = true;
    }
    for (int v = 0; v < inst.n; ++v) {
        f.residual_l1 += std::abs(inst.h[v] - f.atom_avg[part.atom_of[v]]);
        if (inst.h[v] != 0.0) f.any = true;
    }
    return f;
}

// One grid cell of the sweep, ready for the entropy solver.
inline EntropyProgram make_cell_program(const AtomPartition& part, const GridSpec& grid,
                                        const std::vector<int>& coords,
                                        const FieldSplit& field) {
    EntropyProgram prog;
    const int r = part.atom_count();
    prog.v.resize(r);
    for (int a = 0; a < r; ++a) prog.v[a] = part.fraction(a);
    if (field.any) {
        prog.linear.resize(r);
        for (int a = 0; a < r; ++a) prog.linear[a] = 2.0 * field.atom_avg[a];
    }
    prog.windows.reserve(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) {
        EntropyProgram::Window w;
        w.atoms = part.incidence[i];
        w.lo = coords[i] * grid.gamma;
        w.hi = w.lo + grid.gamma;
        prog.windows.push_back(std::move(w));
    }
    return prog;
}

// Necessary condition, checked before the LP: each window must intersect the
// achievable range [0, sum of member fractions].
inline bool cell_plausible(const EntropyProgram& prog) {
    for (const auto& w : prog.windows) {
        double reach = 0.0;
        for (int a : w.atoms) reach += prog.v[a];
        if (w.lo > reach + 1e-12) return false;
    }
    return true;
}

} // namespace detail

/**
 * log M for one grid cell, or nothing when the cell's program is infeasible.
 * coords holds 2s grid indices (rows then columns); with the lower corner
 * rbar_i = coords[i] * gamma, the cell contributes
 *   sum_i d_i (2n rbar_i - |R_i|)(2n cbar_i - |C_i|) + n H_cell + diag_shift
 * where H_cell is the certified solver value (entropy plus any field term).
 */
inline std::optional<double> cell_value(const AtomPartition& part, const CutDecomposition& dec,
                                        const GridSpec& grid, const std::vector<int>& coords,
                                        double lambda, const detail::FieldSplit& field,
                                        int solver_max_iters = 200000) {
    const EntropyProgram prog = detail::make_cell_program(part, grid, coords, field);
    if (!detail::cell_plausible(prog)) return std::nullopt;
    const EntropySolution sol = solve(prog, lambda, solver_max_iters);
    if (sol.status != EntropySolution::Status::Feasible) return std::nullopt;

    const int n = part.n;
    const int s = dec.width();
    double e = dec.diag_shift;
    for (int i = 0; i < s; ++i) {
        const double rbar = coords[i] * grid.gamma;
        const double cbar = coords[s + i] * grid.gamma;
        const double rp = 2.0 * n * rbar - static_cast<double>(dec.cuts[i].rows.size());
        const double cp = 2.0 * n * cbar - static_cast<double>(dec.cuts[i].cols.size());
        e += dec.cuts[i].coeff * rp * cp;
    }
    e += n * sol.value - field.avg_weighted_sum;
    return e;
}

/// Field-free cell value.
inline std::optional<double> cell_value(const AtomPartition& part, const CutDecomposition& dec,
                                        const GridSpec& grid, const std::vector<int>& coords,
                                        double lambda) {
    return cell_value(part, dec, grid, coords, lambda, detail::FieldSplit{});
}

namespace detail {

struct SweepBest {
    double value = -std::numeric_limits<double>::infinity();
    std::uint64_t cell = 0;
    std::uint64_t feasible = 0;
    bool any = false;
};

// Deterministic parallel max over all cells: per-thread bests merged by value,
// ties resolved toward the lowest flat cell index, so the result does not
// depend on the worker count.
inline SweepBest sweep_grid(const AtomPartition& part, const CutDecomposition& dec,
                            const GridSpec& grid, double lambda, const FieldSplit& field,
                            int threads, int solver_max_iters) {
    const double cells_d = grid.cells();
    const std::uint64_t total = static_cast<std::uint64_t>(cells_d);
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
            const auto val = cell_value(part, dec, grid, coords, lambda, field, solver_max_iters);
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
        best.feasible += p.feasible;
        if (!p.any) continue;
        if (!best.any || p.value > best.value || (p.value == best.value && p.cell < best.cell)) {
            best.any = true;
            best.value = p.value;
            best.cell = p.cell;
        }
    }
    return best;
}

inline double median_of(std::vector<double> vals) {
    std::sort(vals.begin(), vals.end());
    const std::size_t m = vals.size() / 2;
    if (vals.size() % 2 == 1) return vals[m];
    return 0.5 * (vals[m - 1] + vals[m]);
}

inline GridSpec make_grid(double gamma_formula, int dims, double cap_cells, const char* who) {
    GridSpec grid = GridSpec::from_gamma(gamma_formula, dims);
    if (dims > 0 && grid.cells() > cap_cells) {
        const int pmax = static_cast<int>(
            std::floor(std::pow(cap_cells, 1.0 / static_cast<double>(dims)) + 1e-9));
        if (pmax < 2)
            throw resource_error(std::string(who) + ": the granulated grid needs " +
                                     std::to_string(grid.cells()) +
                                     " cells and exceeds the cap even at two points per axis",
                                 grid.cells());
        grid = GridSpec::from_gamma(1.0 / (pmax - 1), dims);
    }
    return grid;
}

// Budget of a concrete (decomposition prefix, partition, grid) triple; the
// regularity term is supplied by the caller, everything else is assembled
// from the run's own quantities.
inline BudgetBreakdown assemble_budget(const CutDecomposition& dec, const AtomPartition& part,
                                       const GridSpec& grid, double lambda,
                                       const FieldSplit& field, double regularity,
                                       bool certified) {
    BudgetBreakdown b;
    b.regularity = regularity;
    b.regularity_certified = certified;
    b.field = field.residual_l1;
    const int n = part.n;
    for (int a = 0; a < part.atom_count(); ++a) b.stirling += 2.0 * std::log(part.size(a) + 1.0);
    for (int i = 0; i < dec.width(); ++i) {
        const double di = std::abs(dec.cuts[i].coeff);
        const double rsz = static_cast<double>(dec.cuts[i].rows.size());
        const double csz = static_cast<double>(dec.cuts[i].cols.size());
        b.granulation += di * 2.0 * grid.gamma * n * (rsz + csz);
        b.small_n += di * 2.0 *
                     (rsz * part.incidence[2 * i + 1].size() + csz * part.incidence[2 * i].size());
    }
    b.solver = lambda * n;
    b.rounding = part.atom_count() * std::log(5.0);
    b.small_n += 2.0 * field.avg_abs_sum;
    return b;
}

// Certified residual inf->1 bound after each prefix of the peel: the exact
// oracle norm when the cap allows, tightened by four times the next accepted
// cut value in exact mode (the exact search makes that the true residual cut
// norm), and always backed by the residual's entrywise L1 norm, which bounds
// the inf->1 norm unconditionally. Every entry is a proven bound; the
// sampled-mode a-priori form stays a separately reported claim.
inline std::vector<std::pair<double, bool>> prefix_residual_norms(const IsingInstance& stripped,
                                                                  const CutDecomposition& dec,
                                                                  CutSearchMode mode,
                                                                  int exact_norm_cap) {
    const int s = dec.width();
    std::vector<std::pair<double, bool>> out(s + 1, {0.0, true});
    Matrix w = stripped.j;
    for (int t = 0; t <= s; ++t) {
        double bound = w.abs_sum();
        if (stripped.n <= exact_norm_cap)
            bound = std::min(bound, exact_inf_to_one_norm(w, exact_norm_cap));
        if (mode == CutSearchMode::Exact) {
            if (t < s)
                bound = std::min(bound, 4.0 * dec.step_values[t]);
            else if (!dec.stopped_by_width_cap)
                bound = std::min(bound, dec.claimed_error);
        }
        out[t] = {bound, true};
        if (t < s)
            for (int i : dec.cuts[t].rows)
                for (int j : dec.cuts[t].cols) w(i, j) -= dec.cuts[t].coeff;
    }
    return out;
}

} // namespace detail

/**
 * Cut-decompose, refine, sweep the granulated grid, and keep the best cell;
 * in sampled mode the run is repeated with independent seeds and the median
 * reported (exact mode is deterministic, so repetitions collapse to one).
 * The returned budget is a per-term maximum across runs and certifies
 * |log_z_hat - log Z| <= budget.total(); at oracle scale the regularity term
 * is the exact residual norm, beyond it a proven upper bound.
 */
inline EstimateReport estimate_log_z(const IsingInstance& inst, const EstimatorOptions& opts) {
    if (!(opts.epsilon > 0.0 && opts.epsilon <= 1.0))
        throw std::invalid_argument("estimate_log_z: epsilon must be in (0,1]");
    inst.validate();
    const int n = inst.n;
    const DensityReport dens = norms(inst);
    const double delta = std::isfinite(dens.delta_max) ? std::min(dens.delta_max, 1.0) : 1.0;
    // the replacement error is at most 4 eps' ||J||_1 / sqrt(delta); this choice
    // spends regularity_share of the eps ||J||_1 target on it
    const double eps_prime = opts.epsilon * std::sqrt(delta) * opts.regularity_share / 4.0;
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

    // the cuts target the bilinear part; the diagonal is an exact constant
    IsingInstance stripped = inst;
    for (int i = 0; i < n; ++i) stripped.j(i, i) = 0.0;
    const double diag_const = inst.diagonal_sum();

    int max_width_seen = 0;
    for (int run = 0; run < reps; ++run) {
        const std::uint64_t run_seed = derive_seed(opts.seed, run);
        FkLimits limits;
        limits.max_width = opts.max_width;
        limits.exact_cap = opts.exact_cut_cap;
        limits.sample_size = opts.sample_size;
        CutDecomposition dec =
            fk_decompose(stripped, eps_prime, 1.0 / 8.0, opts.mode, run_seed, limits);
        dec.diag_shift = diag_const;
        max_width_seen = std::max(max_width_seen, dec.width());

        // every prefix of the peel is itself a valid decomposition; keep the
        // one whose assembled budget is smallest (extra cuts buy a smaller
        // residual but cost atoms and grid resolution)
        const auto norms_by_width =
            detail::prefix_residual_norms(stripped, dec, opts.mode, opts.exact_norm_cap);
        int best_w = dec.width();
        double best_total = std::numeric_limits<double>::infinity();
        AtomPartition part;
        detail::FieldSplit field;
        GridSpec grid;
        BudgetBreakdown budget;
        const int w_lo = opts.width_selection ? 0 : dec.width();
        for (int w = dec.width(); w >= w_lo; --w) {
            CutDecomposition prefix = dec;
            prefix.cuts.resize(w);
            const AtomPartition part_w = refine(n, prefix);
            const detail::FieldSplit field_w = detail::split_field(inst, part_w);
            const GridSpec grid_w = detail::make_grid(compute_gamma(opts.epsilon, delta, w),
                                                      2 * w, opts.cap_cells, "estimate_log_z");
            const BudgetBreakdown b =
                detail::assemble_budget(prefix, part_w, grid_w, lambda, field_w,
                                        norms_by_width[w].first, norms_by_width[w].second);
            if (b.total() < best_total) {
                best_total = b.total();
                best_w = w;
                part = part_w;
                field = field_w;
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
            detail::sweep_grid(part, dec, grid, lambda, field, threads, opts.solver_max_iters);
        if (!best.any)
            throw internal_error("estimate_log_z: every grid cell infeasible (grid broken)");

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
        n >= 4.0 * std::sqrt(27.0) * s * std::pow(2.0, 2.0 * s) / (std::sqrt(delta) * opts.epsilon);
    return rep;
}

} // namespace dising
