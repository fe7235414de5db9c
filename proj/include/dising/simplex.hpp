#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "dising/errors.hpp"

namespace dising {

/// maximize c.x  subject to  rows.x <= rhs,  x >= 0.
struct LpProblem {
    int num_vars = 0;
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;

    void add_row(std::vector<double> coeffs, double bound) {
        rows.push_back(std::move(coeffs));
        rhs.push_back(bound);
    }
};

struct LpResult {
    enum class Status { Optimal, Infeasible, Unbounded };
    Status status = Status::Infeasible;
    std::vector<double> x;
    double value = 0.0;
    double infeasibility = 0.0; // phase-1 residual
};

/**
 * Dense two-phase tableau simplex with Bland's rule. Sized for the tiny
 * window polytopes this project solves (tens of rows); pivoting is on the
 * full tableau, anti-cycling comes from lowest-index entering/leaving
 * selection, tolerances are 1e-9 throughout.
 */
class Simplex {
public:
    explicit Simplex(const LpProblem& p, double tol = 1e-9) : tol_(tol), nv_(p.num_vars) {
        m_ = static_cast<int>(p.rows.size());
        na_ = 0;
        std::vector<bool> negated(m_, false);
        for (int i = 0; i < m_; ++i)
            if (p.rhs[i] < 0.0) {
                negated[i] = true;
                ++na_;
            }
        ncols_ = nv_ + m_ + na_;
        tab_.assign(m_, std::vector<double>(ncols_ + 1, 0.0));
        basis_.assign(m_, -1);
        int art = 0;
        for (int i = 0; i < m_; ++i) {
            const double sgn = negated[i] ? -1.0 : 1.0;
            for (int j = 0; j < nv_; ++j) tab_[i][j] = sgn * p.rows[i][j];
            tab_[i][nv_ + i] = sgn; // slack
            tab_[i][ncols_] = sgn * p.rhs[i];
            if (negated[i]) {
                const int acol = nv_ + m_ + art;
                tab_[i][acol] = 1.0;
                basis_[i] = acol;
                ++art;
            } else {
                basis_[i] = nv_ + i;
            }
        }
    }

    /// Runs phase 1; returns the residual infeasibility (0 when feasible).
    double phase1() {
        std::vector<double> cost(ncols_, 0.0);
        for (int j = nv_ + m_; j < ncols_; ++j) cost[j] = -1.0;
        run(cost, /*allow_artificial=*/true);
        double viol = 0.0;
        for (int i = 0; i < m_; ++i)
            if (basis_[i] >= nv_ + m_) viol += tab_[i][ncols_];
        if (viol <= tol_) drive_out_artificials();
        return viol;
    }

    /// Phase 2 for the given objective on the structural variables.
    LpResult phase2(const std::vector<double>& c) {
        std::vector<double> cost(ncols_, 0.0);
        for (int j = 0; j < nv_; ++j) cost[j] = c[j];
        const bool bounded = run(cost, /*allow_artificial=*/false);
        LpResult res;
        res.status = bounded ? LpResult::Status::Optimal : LpResult::Status::Unbounded;
        res.x = extract();
        res.value = 0.0;
        for (int j = 0; j < nv_; ++j) res.value += c[j] * res.x[j];
        return res;
    }

    std::vector<double> extract() const {
        std::vector<double> x(nv_, 0.0);
        for (int i = 0; i < m_; ++i)
            if (basis_[i] < nv_) x[basis_[i]] = tab_[i][ncols_];
        return x;
    }

private:
    // Primal simplex on the current tableau; returns false on unboundedness.
    bool run(const std::vector<double>& cost, bool allow_artificial) {
        std::vector<double> red(ncols_, 0.0);
        for (long iter = 0; iter < 200000; ++iter) {
            // reduced costs z_j - c_j, recomputed from the basis each pass
            for (int j = 0; j < ncols_; ++j) {
                double z = 0.0;
                for (int i = 0; i < m_; ++i) z += cost[basis_[i]] * tab_[i][j];
                red[j] = z - cost[j];
            }
            int enter = -1;
            for (int j = 0; j < ncols_; ++j) {
                if (!allow_artificial && j >= nv_ + m_) break;
                if (is_basic(j)) continue;
                if (red[j] < -tol_) {
                    enter = j;
                    break; // Bland: lowest index
                }
            }
            if (enter < 0) return true;
            int leave = -1;
            double best_ratio = 0.0;
            for (int i = 0; i < m_; ++i) {
                if (tab_[i][enter] <= tol_) continue;
                const double ratio = tab_[i][ncols_] / tab_[i][enter];
                if (leave < 0 || ratio < best_ratio ||
                    (ratio == best_ratio && basis_[i] < basis_[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
            if (leave < 0) return false; // unbounded direction
            pivot(leave, enter);
        }
        throw internal_error("simplex: pivot limit exceeded");
    }

    bool is_basic(int j) const {
        for (int i = 0; i < m_; ++i)
            if (basis_[i] == j) return true;
        return false;
    }

    void pivot(int row, int col) {
        const double piv = tab_[row][col];
        for (int j = 0; j <= ncols_; ++j) tab_[row][j] /= piv;
        for (int i = 0; i < m_; ++i) {
            if (i == row) continue;
            const double f = tab_[i][col];
            if (f == 0.0) continue;
            for (int j = 0; j <= ncols_; ++j) tab_[i][j] -= f * tab_[row][j];
        }
        basis_[row] = col;
    }

    // After a feasible phase 1, replace basic artificials (at value ~0) with
    // structural or slack columns where possible; redundant rows keep their
    // artificial at zero, which phase 2 never re-enters.
    void drive_out_artificials() {
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] < nv_ + m_) continue;
            int col = -1;
            for (int j = 0; j < nv_ + m_; ++j)
                if (!is_basic(j) && std::abs(tab_[i][j]) > tol_) {
                    col = j;
                    break;
                }
            if (col >= 0) pivot(i, col);
        }
    }

    double tol_;
    int nv_, m_, na_, ncols_;
    std::vector<std::vector<double>> tab_;
    std::vector<int> basis_;
};

/// Phase-1 feasibility test with witness.
inline LpResult lp_feasible(const LpProblem& p, double tol = 1e-9) {
    Simplex s(p, tol);
    const double viol = s.phase1();
    LpResult res;
    res.infeasibility = viol;
    if (viol <= tol) {
        res.status = LpResult::Status::Optimal;
        res.x = s.extract();
    } else {
        res.status = LpResult::Status::Infeasible;
    }
    return res;
}

/// Full solve: phase 1 then maximize c.x.
inline LpResult lp_maximize(const LpProblem& p, const std::vector<double>& c, double tol = 1e-9) {
    Simplex s(p, tol);
    const double viol = s.phase1();
    if (viol > tol) {
        LpResult res;
        res.status = LpResult::Status::Infeasible;
        res.infeasibility = viol;
        return res;
    }
    return s.phase2(c);
}

} // namespace dising
