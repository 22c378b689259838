#include "doctest.h"

#include <numeric>
#include <random>

#include "monomval/lexgroup.hpp"
#include "oracles.hpp"

using namespace monomval;

namespace {

std::vector<LexVec> example_rows() { return {LexVec{0, 0, 1}, LexVec{0, 0, 1}, LexVec{0, 0, 1}, LexVec{0, 0, 3}}; }

// distinct rows of a matrix, sorted
std::vector<LexVec> distinct(std::vector<LexVec> rows) {
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    return rows;
}

std::vector<LexVec> sorted(std::vector<LexVec> rows) {
    std::sort(rows.begin(), rows.end());
    return rows;
}

} // namespace

TEST_CASE("lex_cmp") {
    CHECK(lex_cmp(LexVec{0, 1, 0}, LexVec{0, 0, 5}) == std::strong_ordering::greater);
    CHECK(lex_cmp(LexVec{1, 0, -2}, LexVec{1, 0, -2}) == std::strong_ordering::equal);
    CHECK(lex_cmp(LexVec{0, 0, 3}, LexVec{0, 1, 0}) == std::strong_ordering::less);
    CHECK_THROWS_AS(lex_cmp(LexVec{0, 1}, LexVec{0, 0, 1}), LengthMismatch);
}

TEST_CASE("lex order is compatible with addition") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<long> d(-5, 5);
    for (int k = 0; k < 500; ++k) {
        LexVec a{d(rng), d(rng), d(rng)}, b{d(rng), d(rng), d(rng)}, c{d(rng), d(rng), d(rng)};
        if (a < b) CHECK(a + c < b + c);
        CHECK((lex_cmp(a, b) == std::strong_ordering::less) == (lex_cmp(b, a) == std::strong_ordering::greater));
    }
}

TEST_CASE("degree_L") {
    std::vector<LexVec> L = example_rows();
    std::vector<Int> A{2, 0, 0, 1};
    CHECK(degree_L(A, L) == LexVec{0, 0, 5});
    std::vector<Int> zero(4);
    CHECK(degree_L(zero, L) == LexVec{0, 0, 0});
    std::vector<Int> e1{1, 0, 0, 0};
    CHECK(degree_L(e1, L) == LexVec{0, 0, 1});
    std::vector<Int> short_A{1, 0};
    CHECK_THROWS_AS(degree_L(short_A, L), LengthMismatch);
}

TEST_CASE("echelon on the example rows") {
    EchelonResult e = echelon_reduce(example_rows());
    REQUIRE(e.basis.rank() == 1);
    CHECK(e.basis.basis[0] == LexVec{0, 0, 1});
    CHECK(e.basis.pivots[0] == 1);
    CHECK(e.basis.pivot_cols[0] == 2);
    bool found = std::find(e.log.begin(), e.log.end(), RowOp::add(3, 0, Int(-2))) != e.log.end();
    CHECK(found);
    CHECK(distinct(replay(example_rows(), e.log)) == e.basis.basis);
}

TEST_CASE("echelon: identity rows need nothing") {
    EchelonResult e = echelon_reduce({LexVec{1, 0}, LexVec{0, 1}});
    CHECK(e.log.empty());
    REQUIRE(e.basis.rank() == 2);
    CHECK(e.basis.basis[0] == LexVec{1, 0});
    CHECK(e.basis.basis[1] == LexVec{0, 1});
}

TEST_CASE("echelon: (2,3),(3,5) generate Z^2") {
    std::vector<LexVec> rows{LexVec{2, 3}, LexVec{3, 5}};
    EchelonResult e = echelon_reduce(rows);
    REQUIRE(e.basis.rank() == 2);
    CHECK(e.basis.pivots[0] == 1);
    CHECK(e.basis.pivots[1] == 1);
    CHECK(oracle::hnf(oracle::to_matrix(e.basis.basis)) == oracle::hnf(oracle::to_matrix(rows)));
    CHECK(distinct(replay(rows, e.log)) == sorted(e.basis.basis));
}

TEST_CASE("echelon rejects rows not above zero") {
    CHECK_THROWS_AS(echelon_reduce({LexVec{0, 0}, LexVec{1, 0}}), InvalidInput);
    CHECK_THROWS_AS(echelon_reduce({LexVec{0, -1}}), InvalidInput);
    CHECK_THROWS_AS(echelon_reduce({LexVec{0, 1}, LexVec{1, 0, 0}}), LengthMismatch);
}

TEST_CASE("echelon properties on random matrices") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 200; ++k) {
        std::size_t n = std::uniform_int_distribution<std::size_t>(1, 5)(rng);
        std::size_t m = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
        auto rows = oracle::random_rows(rng, n, m);
        EchelonResult e = echelon_reduce(rows);
        CAPTURE(k);
        CHECK(oracle::hnf(oracle::to_matrix(e.basis.basis)) == oracle::hnf(oracle::to_matrix(rows)));
        for (std::size_t j = 0; j < e.basis.rank(); ++j) {
            const LexVec& b = e.basis.basis[j];
            CHECK(b.leading_index() == e.basis.pivot_cols[j]);
            CHECK(b[e.basis.pivot_cols[j]] == e.basis.pivots[j]);
            CHECK(e.basis.pivots[j] > 0);
            if (j > 0) CHECK(e.basis.pivot_cols[j] > e.basis.pivot_cols[j - 1]);
        }
        // the first pivot is the gcd of the first nonzero column
        std::size_t c0 = e.basis.pivot_cols[0];
        Int g = 0;
        for (const auto& r : rows) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), r[c0].get_mpz_t());
        CHECK(e.basis.pivots[0] == g);
        CHECK(distinct(replay(rows, e.log)) == sorted(e.basis.basis));
    }
}

TEST_CASE("solve_in_basis") {
    SubgroupBasis b = echelon_reduce({LexVec{0, 0, 1}}).basis;
    CHECK(solve_in_basis(LexVec{0, 0, 4}, b) == std::vector<Int>{4});
    CHECK(solve_in_basis(LexVec{0, 0, 1}, b) == std::vector<Int>{1});
    CHECK_THROWS_AS(solve_in_basis(LexVec{0, 1, 0}, b), NotInSubgroup);
    CHECK_FALSE(in_subgroup(LexVec{0, 1, 0}, b));

    SubgroupBasis b2 = echelon_reduce({LexVec{2, 3}, LexVec{0, 4}}).basis;
    auto r = solve_in_basis(LexVec{4, -2}, b2);
    LexVec back(2);
    for (std::size_t k = 0; k < r.size(); ++k) back += r[k] * b2.basis[k];
    CHECK(back == LexVec{4, -2});
    CHECK_FALSE(in_subgroup(LexVec{1, 0}, b2));
    CHECK_FALSE(in_subgroup(LexVec{0, 2}, b2));
}
