// Acceptance suite: one binary, one line per criterion. Each criterion is an
// oracle- or property-based check with its tolerance pinned in code; the
// binary exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "dising/dising.hpp"
#include "../support/entropy_oracle.hpp"

using namespace dising;

namespace {

int g_failures = 0;

void criterion(int id, const std::string& name, const std::function<bool(std::string&)>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %2d: %-22s (%6.1fs)%s%s\n", ok ? "PASS" : "FAIL", id,
                name.c_str(), secs, detail.empty() ? "" : "  ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

struct SuiteCase {
    IsingInstance inst;
    CutDecomposition dec;
    AtomPartition part;
};

// shared instance family for criteria 1 and 3
std::vector<SuiteCase> build_identity_suite() {
    std::vector<SuiteCase> cases;
    std::uint64_t seed = 1000;
    int n = 6;
    int di = 0;
    const double deltas[3] = {0.3, 0.5, 1.0};
    for (int t = 0; t < 50; ++t) {
        const double eps = (t % 2 == 0) ? 0.4 : 0.7;
        SuiteCase c;
        c.inst = gen_random_dense(n, deltas[di], ++seed);
        c.dec = fk_decompose(c.inst, eps, 0.125, CutSearchMode::Exact, seed);
        c.part = refine(c.inst.n, c.dec);
        cases.push_back(std::move(c));
        n = (n == 14) ? 6 : n + 1;
        di = (di + 1) % 3;
    }
    return cases;
}

bool criterion1(std::string& detail, const std::vector<SuiteCase>& suite) {
    double worst = 0.0;
    for (const auto& c : suite) {
        const double lhs = binomial_profile_sum(c.part, c.dec).log_value;
        const double rhs = exact_log_z_prime(c.inst, c.dec).log_value;
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    detail = "max |identity gap| = " + std::to_string(worst);
    return worst <= 1e-9;
}

bool criterion2(std::string& detail) {
    double worst_ratio = 0.0;
    for (int t = 0; t < 30; ++t) {
        const int n = 8 + t % 5;
        const double delta = (t % 2 == 0) ? 0.3 : 1.0;
        const double eps = (t % 3 == 0) ? 0.7 : 0.4;
        const IsingInstance inst = gen_random_dense(n, delta, 2000 + t);
        const DensityReport r = norms(inst);
        const CutDecomposition dec =
            fk_decompose(inst, eps, 0.125, CutSearchMode::Exact, 2000 + t);

        if (dec.width() > width_cap(eps)) return false;
        if (dec.coefficient_length() > std::sqrt(27.0) * r.l2 / n + 1e-12) return false;
        const double wnorm = exact_inf_to_one_norm(residual_matrix(inst, dec));
        const double bound = 4.0 * eps * n * r.l2;
        if (wnorm > bound + 1e-9) return false;
        worst_ratio = std::max(worst_ratio, wnorm / bound);
    }
    detail = "max residual/bound = " + std::to_string(worst_ratio);
    return true;
}

bool criterion3(std::string& detail, const std::vector<SuiteCase>& suite) {
    double worst_high = 0.0;
    for (const auto& c : suite) {
        double stirling = 0.0;
        for (int a = 0; a < c.part.atom_count(); ++a)
            stirling += std::log(c.part.size(a) + 1.0);
        const double lzp = exact_log_z_prime(c.inst, c.dec).log_value;
        const double lzpp = exact_log_z_doubleprime(c.part, c.dec).log_value;
        const auto [maxsummand, arg] = max_profile_summand(c.part, c.dec);

        const double low = lzpp - maxsummand; // must be >= 0
        if (low < -1e-9) return false;
        if (low > stirling + 1e-9) return false;
        if (std::abs(lzp - lzpp) > stirling + 1e-9) return false;
        worst_high = std::max(worst_high, std::abs(lzp - lzpp) / std::max(stirling, 1e-30));
    }
    detail = "max |logZ'-logZ''|/stirling = " + std::to_string(worst_high);
    return true;
}

bool criterion4(std::string& detail) {
    double worst = 1e300;
    for (int n = 1; n <= 64; ++n) {
        for (double z = 0.0; z <= n + 1e-12; z += 0.01) {
            const double zc = std::min(z, static_cast<double>(n));
            const int y = entropy_round(n, zc);
            const double margin = n * binary_entropy(static_cast<double>(y) / n) -
                                  (n * binary_entropy(zc / n) - std::log(5.0));
            if (margin < -1e-12) {
                detail = "violated at n=" + std::to_string(n) + " z=" + std::to_string(zc);
                return false;
            }
            worst = std::min(worst, margin);
        }
    }
    detail = "min slack in log5 bound = " + std::to_string(worst);
    return true;
}

bool criterion5(std::string& detail) {
    SplitMix64 rng(777);
    const double lambda = 1e-3;
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const EntropyProgram p = dising_test::random_program(rng, 4);
        const EntropySolution s = solve(p, lambda);
        if (s.status != EntropySolution::Status::Feasible) {
            detail = "program " + std::to_string(t) + " unexpectedly infeasible";
            return false;
        }
        if (s.upper - s.value > lambda) {
            detail = "certificate gap " + std::to_string(s.upper - s.value);
            return false;
        }
        const double oracle = dising_test::grid_opt(p, 1e-3);
        const double err = std::abs(s.value - oracle);
        if (err > lambda + 2e-3) {
            detail = "program " + std::to_string(t) + " off oracle by " + std::to_string(err);
            return false;
        }
        worst = std::max(worst, err);
    }
    detail = "max |solver - grid| = " + std::to_string(worst) + " (tol 3e-3)";
    return true;
}

bool criterion6(std::string& detail) {
    std::vector<IsingInstance> instances;
    for (int n : {12, 14})
        for (double beta : {0.5, 1.5}) instances.push_back(gen_curie_weiss(n, beta));
    {
        int n = 8;
        for (int t = 0; t < 12; ++t) {
            const double delta = (t % 2 == 0) ? 0.3 : 1.0;
            instances.push_back(gen_random_dense(n, delta, 3000 + t));
            n = (n == 14) ? 8 : n + 1;
        }
    }
    for (std::uint64_t seed : {1u, 2u}) {
        const auto [planted, uniform] = gen_tightness_pair(12, 3.0, 0.2, 0.2, seed);
        instances.push_back(planted);
        instances.push_back(uniform);
    }
    if (instances.size() != 20) {
        detail = "instance family miscount";
        return false;
    }

    double worst_ratio = 0.0;
    int checked = 0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const IsingInstance& inst = instances[i];
        const double exact = exact_log_z(inst).log_value;
        for (double eps : {0.4, 0.6, 0.8}) {
            for (std::uint64_t seed = 0; seed < 5; ++seed) {
                EstimatorOptions opts;
                opts.epsilon = eps;
                opts.seed = seed;
                opts.threads = 2;
                const EstimateReport rep = estimate_log_z(inst, opts);
                if (!rep.budget.regularity_certified) {
                    detail = "budget not certified at n=" + std::to_string(inst.n);
                    return false;
                }
                const double diff = std::abs(rep.log_z_hat - exact);
                if (diff > rep.budget.total()) {
                    detail = "instance " + std::to_string(i) + " eps " + std::to_string(eps) +
                             " seed " + std::to_string(seed) + ": diff " + std::to_string(diff) +
                             " > budget " + std::to_string(rep.budget.total());
                    return false;
                }
                worst_ratio = std::max(worst_ratio, diff / rep.budget.total());
                ++checked;
            }
        }
        // sampled-mode spot check on two instances
        if (i < 2) {
            EstimatorOptions opts;
            opts.epsilon = 0.6;
            opts.seed = 99 + i;
            opts.threads = 2;
            opts.mode = CutSearchMode::Sampled;
            opts.fail_prob = 0.5;
            const EstimateReport rep = estimate_log_z(inst, opts);
            const double diff = std::abs(rep.log_z_hat - exact);
            if (diff > rep.budget.total()) {
                detail = "sampled run out of budget";
                return false;
            }
            ++checked;
        }
    }
    detail = std::to_string(checked) + " runs, max |diff|/budget = " + std::to_string(worst_ratio);
    return true;
}

bool criterion7(std::string& detail) {
    std::vector<MrfInstance> instances;
    {
        MrfInstance single(10, 3);
        single.set_entry({0, 4, 7}, 1.2);
        instances.push_back(single);
    }
    {
        MrfInstance sparse(10, 3);
        SplitMix64 rng(41);
        for (int t = 0; t < 40; ++t) {
            std::vector<int> idx = {static_cast<int>(rng.next_below(10)),
                                    static_cast<int>(rng.next_below(10)),
                                    static_cast<int>(rng.next_below(10))};
            sparse.set_entry(idx, rng.next_double(-0.4, 0.4));
        }
        instances.push_back(sparse);
    }
    for (std::uint64_t seed : {51u, 52u, 53u}) {
        MrfInstance dense(8, 3);
        SplitMix64 rng(seed);
        for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 8; ++b)
                for (int c = 0; c < 8; ++c)
                    if (rng.next_double() < 0.5)
                        dense.set_entry({a, b, c}, rng.next_double(-0.12, 0.12));
        instances.push_back(dense);
    }

    double worst_ratio = 0.0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const double exact = exact_log_z_mrf(instances[i]).log_value;
        for (double eps : {0.4, 0.6, 0.8}) {
            MrfEstimatorOptions opts;
            opts.epsilon = eps;
            opts.seed = i;
            opts.threads = 2;
            opts.reg_mode = (i % 2 == 0) ? TensorRegMode::Constant : TensorRegMode::Linear;
            const EstimateReport rep = estimate_log_z_mrf(instances[i], opts);
            if (!rep.budget.regularity_certified) {
                detail = "tensor budget not certified";
                return false;
            }
            const double diff = std::abs(rep.log_z_hat - exact);
            if (diff > rep.budget.total()) {
                detail = "mrf instance " + std::to_string(i) + ": diff " + std::to_string(diff) +
                         " > budget " + std::to_string(rep.budget.total());
                return false;
            }
            worst_ratio = std::max(worst_ratio, diff / rep.budget.total());
        }
    }
    detail = "max |diff|/budget = " + std::to_string(worst_ratio);
    return true;
}

bool criterion8(std::string& detail) {
    // exact convexity of log Z in a uniform shift
    for (std::uint64_t seed : {61u, 62u, 63u}) {
        const IsingInstance inst = gen_random_dense(10, 0.5, seed);
        std::vector<double> vals;
        for (int t = 0; t <= 10; ++t) {
            IsingInstance shifted = inst;
            for (auto& h : shifted.h) h += -1.0 + 0.2 * t;
            vals.push_back(exact_log_z(shifted).log_value);
        }
        for (std::size_t i = 1; i + 1 < vals.size(); ++i)
            if (vals[i + 1] - 2.0 * vals[i] + vals[i - 1] < -1e-9) {
                detail = "convexity violated";
                return false;
            }
    }

    // bracket catches the exact magnetization somewhere in the window
    std::vector<IsingInstance> family;
    for (std::uint64_t seed : {71u, 72u, 73u, 74u, 75u, 76u})
        family.push_back(gen_random_dense(10 + seed % 3, 0.5, seed));
    for (double beta : {0.5, 0.9}) family.push_back(gen_curie_weiss(12, beta));
    family.push_back(gen_curie_weiss(10, 1.4));
    family.push_back(gen_random_dense(12, 1.0, 80));

    for (std::size_t i = 0; i < family.size(); ++i) {
        const IsingInstance& inst = family[i];
        const double h0 = 0.3;
        EstimatorOptions base;
        base.threads = 2;
        const MagnetizationEstimate est =
            estimate_magnetization(inst, h0, 0.25, 0.125, 7 + i, base);
        double budget = 0.0;
        for (const EstimateReport* r : {&est.at_minus, &est.at_mid, &est.at_plus})
            budget = std::max(budget, r->budget.total());
        const double tol = 2.0 * budget / est.delta_used;
        bool hit = false;
        for (int t = 0; t <= 40 && !hit; ++t) {
            const double hp = h0 - est.delta_used + 2.0 * est.delta_used * t / 40.0;
            const double m = exact_magnetization(inst, hp);
            hit = (m >= est.lower - tol) && (m <= est.upper + tol);
        }
        if (!hit) {
            detail = "bracket missed the oracle on instance " + std::to_string(i);
            return false;
        }
    }
    detail = "10 instances bracketed";
    return true;
}

bool criterion9(std::string& detail) {
    const int n = 10;
    const double eps = 0.2, delta = 0.25;
    const double edges = n * (n - 1) / 2.0;
    const long heavy = std::lround(eps * delta * edges);

    std::vector<double> gap_over_m;
    double gap8 = 0.0;
    for (double M : {2.0, 4.0, 6.0, 8.0}) {
        const auto [planted, uniform] = gen_tightness_pair(n, M, eps, delta, 5);
        const double gap =
            exact_log_z(planted).log_value - exact_log_z(uniform).log_value;
        gap_over_m.push_back(gap / M);
        if (M == 8.0) gap8 = gap / M;
    }
    for (std::size_t i = 1; i < gap_over_m.size(); ++i)
        if (gap_over_m[i] < gap_over_m[i - 1] - 1e-9) {
            detail = "gap/M not monotone";
            return false;
        }

    // finite-M correction from the oracle-side ground-state argument:
    // gap(M) >= D*M - n log 2 with D the exact heavy-edge energy advantage
    const double D = 2.0 * heavy * (1.0 / delta - 1.0);
    const double asym_unrounded = 2.0 * eps * delta * edges * (1.0 / delta - 1.0);
    const double kappa = std::max(0.0, (D * 8.0 - n * std::log(2.0)) / (8.0 * asym_unrounded));
    const double target = 0.8 * (eps / 2.0) * edges * (1.0 - delta) * kappa;
    if (gap8 < target) {
        detail = "gap(8)/8 = " + std::to_string(gap8) + " below " + std::to_string(target);
        return false;
    }
    detail = "gap/M in [" + std::to_string(gap_over_m.front()) + ", " + std::to_string(gap8) +
             "], target " + std::to_string(target) + "; (eps/2)||J'||_1 = " +
             std::to_string((eps / 2.0) * 2.0 * 8.0 * edges) + " reported";
    return true;
}

bool criterion10(std::string& detail) {
    const IsingInstance inst = gen_random_dense(11, 0.5, 90);

    // generators
    {
        const IsingInstance a = gen_random_dense(9, 0.4, 17);
        const IsingInstance b = gen_random_dense(9, 0.4, 17);
        if (a.j.data() != b.j.data()) {
            detail = "generator not reproducible";
            return false;
        }
    }

    // decompositions, both backends
    for (CutSearchMode mode : {CutSearchMode::Exact, CutSearchMode::Sampled}) {
        const CutDecomposition a = fk_decompose(inst, 0.3, 0.25, mode, 5);
        const CutDecomposition b = fk_decompose(inst, 0.3, 0.25, mode, 5);
        if (a.width() != b.width()) return false;
        for (int t = 0; t < a.width(); ++t)
            if (a.cuts[t].coeff != b.cuts[t].coeff || a.cuts[t].rows != b.cuts[t].rows ||
                a.cuts[t].cols != b.cuts[t].cols) {
                detail = "decomposition not reproducible";
                return false;
            }
    }

    // estimator across thread counts and modes
    for (CutSearchMode mode : {CutSearchMode::Exact, CutSearchMode::Sampled}) {
        EstimatorOptions opts;
        opts.epsilon = 0.5;
        opts.seed = 23;
        opts.mode = mode;
        opts.fail_prob = 0.5;
        opts.threads = 1;
        const EstimateReport a = estimate_log_z(inst, opts);
        opts.threads = 3;
        const EstimateReport b = estimate_log_z(inst, opts);
        if (a.log_z_hat != b.log_z_hat || a.runs != b.runs ||
            a.budget.total() != b.budget.total()) {
            detail = "estimate differs across thread counts";
            return false;
        }
    }

    // tensor estimator
    {
        MrfInstance mrf(7, 3);
        SplitMix64 rng(3);
        for (int t = 0; t < 30; ++t)
            mrf.set_entry({static_cast<int>(rng.next_below(7)),
                           static_cast<int>(rng.next_below(7)),
                           static_cast<int>(rng.next_below(7))},
                          rng.next_double(-0.3, 0.3));
        MrfEstimatorOptions opts;
        opts.epsilon = 0.6;
        opts.seed = 4;
        opts.threads = 1;
        const EstimateReport a = estimate_log_z_mrf(mrf, opts);
        opts.threads = 2;
        const EstimateReport b = estimate_log_z_mrf(mrf, opts);
        if (a.log_z_hat != b.log_z_hat) {
            detail = "tensor estimate differs across thread counts";
            return false;
        }
    }

    // magnetization wrapper
    {
        EstimatorOptions base;
        base.threads = 2;
        const MagnetizationEstimate a = estimate_magnetization(inst, 0.2, 0.25, 0.125, 6, base);
        base.threads = 1;
        const MagnetizationEstimate b = estimate_magnetization(inst, 0.2, 0.25, 0.125, 6, base);
        if (a.value != b.value || a.lower != b.lower || a.upper != b.upper) {
            detail = "magnetization differs across thread counts";
            return false;
        }
    }
    detail = "generators, decompositions, estimators, magnetization";
    return true;
}

} // namespace

int main() {
    std::printf("acceptance suite\n");
    const auto suite = build_identity_suite();
    criterion(1, "identity suite", [&](std::string& d) { return criterion1(d, suite); });
    criterion(2, "regularity certificate", [](std::string& d) { return criterion2(d); });
    criterion(3, "sandwich + Stirling", [&](std::string& d) { return criterion3(d, suite); });
    criterion(4, "entropy rounding sweep", [](std::string& d) { return criterion4(d); });
    criterion(5, "convex certification", [](std::string& d) { return criterion5(d); });
    criterion(6, "end-to-end budget", [](std::string& d) { return criterion6(d); });
    criterion(7, "mrf end-to-end", [](std::string& d) { return criterion7(d); });
    criterion(8, "magnetization", [](std::string& d) { return criterion8(d); });
    criterion(9, "tightness experiment", [](std::string& d) { return criterion9(d); });
    criterion(10, "determinism", [](std::string& d) { return criterion10(d); });
    if (g_failures == 0)
        std::printf("all criteria passed\n");
    else
        std::printf("%d criteria FAILED\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
