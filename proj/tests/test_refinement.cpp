#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "dising/cut.hpp"
#include "dising/model.hpp"
#include "dising/refine.hpp"

using namespace dising;

TEST_CASE("no cuts refine to a single atom") {
    CutDecomposition dec;
    dec.n = 7;
    const AtomPartition part = refine(7, dec);
    REQUIRE(part.atom_count() == 1);
    CHECK(part.size(0) == 7);
    CHECK(part.fraction(0) == Catch::Approx(1.0));
}

TEST_CASE("one overlapping cut splits into its four signature classes") {
    CutDecomposition dec;
    dec.n = 4;
    dec.cuts.push_back(CutMatrix{{0, 1}, {1, 2}, 1.0});
    const AtomPartition part = refine(4, dec);
    REQUIRE(part.atom_count() == 4);
    std::set<std::vector<int>> got(part.atoms.begin(), part.atoms.end());
    const std::set<std::vector<int>> expect = {{0}, {1}, {2}, {3}};
    CHECK(got == expect);

    // incidence reconstructs R and C
    std::set<int> r_union, c_union;
    for (int a : part.incidence[0])
        for (int v : part.atoms[a]) r_union.insert(v);
    for (int a : part.incidence[1])
        for (int v : part.atoms[a]) c_union.insert(v);
    CHECK(r_union == std::set<int>{0, 1});
    CHECK(c_union == std::set<int>{1, 2});
}

TEST_CASE("random decompositions obey the atom-count bound and reconstruct") {
    for (std::uint64_t seed : {2u, 9u, 33u}) {
        const IsingInstance inst = gen_random_dense(12, 0.4, seed);
        const CutDecomposition dec =
            fk_decompose(inst, 0.35, 0.125, CutSearchMode::Exact, seed);
        const AtomPartition part = refine(12, dec);

        CHECK(part.atom_count() <= 1 << (2 * dec.width()));

        // disjoint cover of [n]
        std::vector<int> seen(12, 0);
        for (const auto& atom : part.atoms)
            for (int v : atom) ++seen[v];
        CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));

        // each source set is exactly the union of its incident atoms
        for (std::size_t s = 0; s < part.source_sets.size(); ++s) {
            std::set<int> uni;
            for (int a : part.incidence[s])
                for (int v : part.atoms[a]) uni.insert(v);
            CHECK(uni == std::set<int>(part.source_sets[s].begin(), part.source_sets[s].end()));
        }
    }
}

TEST_CASE("net spins at the profile extremes") {
    CutDecomposition dec;
    dec.n = 6;
    dec.cuts.push_back(CutMatrix{{0, 1, 2, 3}, {2, 3, 4, 5}, 0.5});
    const AtomPartition part = refine(6, dec);

    SpinProfile all_up(part.atom_count());
    for (int a = 0; a < part.atom_count(); ++a) all_up[a] = part.size(a);
    auto [r_up, c_up] = net_spins(part, all_up);
    CHECK(r_up[0] == 4);
    CHECK(c_up[0] == 4);

    // even-sized atoms at half occupancy have zero net spin
    SpinProfile half(part.atom_count());
    for (int a = 0; a < part.atom_count(); ++a) {
        REQUIRE(part.size(a) % 2 == 0);
        half[a] = part.size(a) / 2;
    }
    auto [r_half, c_half] = net_spins(part, half);
    CHECK(r_half[0] == 0);
    CHECK(c_half[0] == 0);
}

TEST_CASE("net spins match direct spin sums for induced profiles") {
    const IsingInstance inst = gen_random_dense(10, 0.5, 14);
    const CutDecomposition dec = fk_decompose(inst, 0.4, 0.125, CutSearchMode::Exact, 14);
    const AtomPartition part = refine(10, dec);

    SplitMix64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> x(10);
        for (auto& v : x) v = rng.next_bool() ? 1 : -1;
        const SpinProfile y = profile_of_state(part, x);
        const auto [r, c] = net_spins(part, y);
        for (int i = 0; i < dec.width(); ++i) {
            int rs = 0, cs = 0;
            for (int v : dec.cuts[i].rows) rs += x[v];
            for (int v : dec.cuts[i].cols) cs += x[v];
            CHECK(r[i] == rs);
            CHECK(c[i] == cs);
        }
    }
}

TEST_CASE("profile energy equals the quadratic form on every consistent state") {
    const IsingInstance inst = gen_random_dense(9, 0.5, 91);
    CutDecomposition dec = fk_decompose(inst, 0.45, 0.125, CutSearchMode::Exact, 91);
    dec.diag_shift = 0.25; // exercise the constant
    const AtomPartition part = refine(9, dec);
    const Matrix cuts = cut_sum(dec);

    for (std::uint64_t m = 0; m < (std::uint64_t{1} << 9); ++m) {
        std::vector<int> x(9);
        for (int i = 0; i < 9; ++i) x[i] = (m >> i) & 1 ? 1 : -1;
        double quad = dec.diag_shift;
        for (int i = 0; i < 9; ++i)
            for (int j = 0; j < 9; ++j) quad += cuts(i, j) * x[i] * x[j];
        const double pe = profile_energy(part, dec, profile_of_state(part, x));
        CHECK(pe == Catch::Approx(quad).margin(1e-9));
    }
}

TEST_CASE("zero coefficients leave only the diagonal constant") {
    CutDecomposition dec;
    dec.n = 5;
    dec.diag_shift = -1.5;
    dec.cuts.push_back(CutMatrix{{0, 1}, {3, 4}, 0.0});
    const AtomPartition part = refine(5, dec);
    SpinProfile y(part.atom_count(), 0);
    CHECK(profile_energy(part, dec, y) == Catch::Approx(-1.5));
}

TEST_CASE("one cut with a hand profile") {
    CutDecomposition dec;
    dec.n = 4;
    dec.cuts.push_back(CutMatrix{{0, 1}, {2, 3}, 2.0});
    const AtomPartition part = refine(4, dec);
    REQUIRE(part.atom_count() == 2);
    // atom order is signature-lex; map explicitly
    SpinProfile y(2, 0);
    for (int a = 0; a < 2; ++a) {
        // rows atom {0,1} gets 2 up-spins, cols atom {2,3} gets 1
        y[a] = (part.atoms[a][0] == 0) ? 2 : 1;
    }
    // net row spin 2, net col spin 0 -> energy 0 + d * 2 * 0
    CHECK(profile_energy(part, dec, y) == Catch::Approx(0.0));
    // all cols down instead: net col spin -2
    for (int a = 0; a < 2; ++a)
        if (part.atoms[a][0] == 2) y[a] = 0;
    CHECK(profile_energy(part, dec, y) == Catch::Approx(2.0 * 2.0 * -2.0));
}
