// Estimate log Z of a small Curie-Weiss model across a few accuracy targets,
// compare against the brute-force oracle, and show the magnetization bracket.

#include <cstdio>

#include "dising/estimator.hpp"
#include "dising/exact.hpp"
#include "dising/magnetize.hpp"
#include "dising/model.hpp"

using namespace dising;

int main() {
    const int n = 14;
    const IsingInstance inst = gen_curie_weiss(n, 0.9);
    const double exact = exact_log_z(inst).log_value;
    std::printf("Curie-Weiss n=%d beta=0.9, exact log Z = %.6f\n\n", n, exact);

    std::printf("%6s %12s %10s %12s %7s %7s\n", "eps", "estimate", "|error|", "budget", "width",
                "atoms");
    for (double eps : {0.3, 0.5, 0.8}) {
        EstimatorOptions opts;
        opts.epsilon = eps;
        opts.seed = 1;
        const EstimateReport rep = estimate_log_z(inst, opts);
        std::printf("%6.2f %12.6f %10.6f %12.6f %7d %7d\n", eps, rep.log_z_hat,
                    std::abs(rep.log_z_hat - exact), rep.budget.total(), rep.width, rep.atoms);
    }

    std::printf("\nmagnetization bracket at h0 = 0.3 (eps = 0.25):\n");
    const MagnetizationEstimate mag = estimate_magnetization(inst, 0.3, 0.25, 0.125, 1);
    double budget = mag.at_mid.budget.total();
    budget = std::max(budget, mag.at_minus.budget.total());
    budget = std::max(budget, mag.at_plus.budget.total());
    const double tol = 2.0 * budget / mag.delta_used;
    std::printf("  slopes [%.4f, %.4f] +- %.2f, point estimate %.4f\n", mag.lower, mag.upper, tol,
                mag.value);
    std::printf("  the bracket covers the exact magnetization at some shift within %.2f of h0:\n",
                mag.delta_used);
    for (double hp : {-0.2, 0.05, 0.3, 0.55, 0.8})
        std::printf("    exact m(h'=%.2f) = %+9.4f%s\n", hp, exact_magnetization(inst, hp),
                    (exact_magnetization(inst, hp) >= mag.lower - tol &&
                     exact_magnetization(inst, hp) <= mag.upper + tol)
                        ? "  [inside]"
                        : "");

    std::printf("\nphase sensitivity (4n = 16 vertices, planted field X):\n");
    const PhaseSensitivityReport demo = phase_sensitivity_demo(4, 2.0, 7);
    for (int t = 0; t < 3; ++t)
        std::printf("  X = %+d -> total magnetization %+8.4f\n", t - 1, demo.magnetization[t]);
    return 0;
}
