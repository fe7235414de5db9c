#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "dising/cut.hpp"
#include "dising/errors.hpp"

namespace dising {

/// Per-atom up-spin counts, y[a] in {0, ..., |V_a|}.
using SpinProfile = std::vector<int>;

/**
 * Common refinement of a family of vertex sets. Vertices with the same
 * membership signature across all sets form one atom; atoms are indexed in
 * signature-lexicographic order. Every source set is recoverable as the union
 * of the atoms listed in its incidence row.
 */
struct AtomPartition {
    int n = 0;
    std::vector<std::vector<int>> source_sets;
    std::vector<std::vector<int>> atoms;     // disjoint, cover [n], each sorted
    std::vector<int> atom_of;                // vertex -> atom index
    std::vector<std::vector<int>> incidence; // per source set: atoms inside it

    int atom_count() const { return static_cast<int>(atoms.size()); }
    int size(int a) const { return static_cast<int>(atoms[a].size()); }
    double fraction(int a) const { return static_cast<double>(atoms[a].size()) / n; }

    bool profile_valid(const SpinProfile& y) const {
        if (static_cast<int>(y.size()) != atom_count()) return false;
        for (int a = 0; a < atom_count(); ++a)
            if (y[a] < 0 || y[a] > size(a)) return false;
        return true;
    }
};

inline AtomPartition refine_sets(int n, const std::vector<std::vector<int>>& sets) {
    if (n < 1) throw std::invalid_argument("refine_sets: n must be >= 1");
    AtomPartition part;
    part.n = n;
    part.source_sets = sets;

    std::vector<std::vector<bool>> signature(n, std::vector<bool>(sets.size(), false));
    for (std::size_t s = 0; s < sets.size(); ++s)
        for (int v : sets[s]) {
            if (v < 0 || v >= n) throw std::invalid_argument("refine_sets: vertex out of range");
            signature[v][s] = true;
        }

    // std::map over vector<bool> orders atoms signature-lexicographically
    std::map<std::vector<bool>, std::vector<int>> classes;
    for (int v = 0; v < n; ++v) classes[signature[v]].push_back(v);

    part.atom_of.assign(n, -1);
    part.incidence.assign(sets.size(), {});
    for (auto& [sig, members] : classes) {
        const int a = static_cast<int>(part.atoms.size());
        for (int v : members) part.atom_of[v] = a;
        for (std::size_t s = 0; s < sets.size(); ++s)
            if (sig[s]) part.incidence[s].push_back(a);
        part.atoms.push_back(members);
    }
    return part;
}

/// Refinement of all R_i and C_i of a cut decomposition; source set 2i is R_i,
/// source set 2i+1 is C_i.
inline AtomPartition refine(int n, const CutDecomposition& dec) {
    std::vector<std::vector<int>> sets;
    sets.reserve(2 * dec.cuts.size());
    for (const auto& c : dec.cuts) {
        sets.push_back(c.rows);
        sets.push_back(c.cols);
    }
    return refine_sets(n, sets);
}

/// Net spin of source set s under profile y: sum over atoms inside s of
/// (2 y_a - |V_a|).
inline int net_spin(const AtomPartition& part, const SpinProfile& y, int set_index) {
    int v = 0;
    for (int a : part.incidence[set_index]) v += 2 * y[a] - part.size(a);
    return v;
}

/// (r_vec, c_vec) with r_vec[i] the net spin of R_i and c_vec[i] of C_i.
inline std::pair<std::vector<int>, std::vector<int>> net_spins(const AtomPartition& part,
                                                               const SpinProfile& y) {
    if (!part.profile_valid(y)) throw std::invalid_argument("net_spins: invalid profile");
    const int s = static_cast<int>(part.source_sets.size()) / 2;
    std::vector<int> r(s), c(s);
    for (int i = 0; i < s; ++i) {
        r[i] = net_spin(part, y, 2 * i);
        c[i] = net_spin(part, y, 2 * i + 1);
    }
    return {r, c};
}

/// sum_i d_i * r'(y)_i * c'(y)_i plus the decomposition's diagonal constant.
/// Equals x^T (sum_i D_i) x + diag_shift for every state x inducing profile y.
inline double profile_energy(const AtomPartition& part, const CutDecomposition& dec,
                             const SpinProfile& y) {
    if (!part.profile_valid(y)) throw std::invalid_argument("profile_energy: invalid profile");
    double e = dec.diag_shift;
    for (std::size_t i = 0; i < dec.cuts.size(); ++i)
        e += dec.cuts[i].coeff * net_spin(part, y, static_cast<int>(2 * i)) *
             net_spin(part, y, static_cast<int>(2 * i + 1));
    return e;
}

/// Profile induced by a +-1 state: up-spin count per atom.
inline SpinProfile profile_of_state(const AtomPartition& part, const std::vector<int>& x) {
    if (static_cast<int>(x.size()) != part.n)
        throw std::invalid_argument("profile_of_state: state size mismatch");
    SpinProfile y(part.atom_count(), 0);
    for (int v = 0; v < part.n; ++v)
        if (x[v] > 0) ++y[part.atom_of[v]];
    return y;
}

} // namespace dising
