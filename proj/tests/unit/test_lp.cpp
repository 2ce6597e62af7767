#include <cmath>

#include "bilevel/common/error.hpp"
#include "bilevel/common/matrix.hpp"
#include "bilevel/common/rng.hpp"
#include "bilevel/lp/lp.hpp"
#include "doctest.h"
#include "support/solver_oracles.hpp"

using namespace bilevel;

TEST_SUITE("lp") {

TEST_CASE("single bound case") {
    LpProblem p;
    p.sense = Sense::Maximize;
    p.add_variable(0, 10, 1);
    p.add_row({1}, RowSense::Le, 5);
    const auto r = solve_lp(p);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.primal[0] == doctest::Approx(5));
    CHECK(r.objective == doctest::Approx(5));
    CHECK(r.duals[0] == doctest::Approx(1));
}

TEST_CASE("empty feasible set") {
    LpProblem p;
    p.sense = Sense::Maximize;
    p.add_variable(0, 1, 1);
    p.add_row({1}, RowSense::Le, -1);
    CHECK(solve_lp(p).status == LpStatus::Infeasible);
}

TEST_CASE("simplex corner") {
    LpProblem p;
    p.sense = Sense::Maximize;
    p.add_variable(0, 1, 1);
    p.add_variable(0, 1, 1);
    p.add_row({1, 1}, RowSense::Le, 1);
    const auto r = solve_lp(p);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(1));
}

TEST_CASE("unbounded and free variables") {
    LpProblem p;
    p.sense = Sense::Maximize;
    p.add_variable(-kInf, kInf, 1);
    p.add_variable(0, kInf, 0);
    p.add_row({1, -1}, RowSense::Le, 2);
    CHECK(solve_lp(p).status == LpStatus::Unbounded);

    LpProblem q;
    q.add_variable(-kInf, kInf, 1);  // min x s.t. x >= -3
    q.add_row({1}, RowSense::Ge, -3);
    const auto r = solve_lp(q);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.primal[0] == doctest::Approx(-3));
    CHECK(r.duals[0] == doctest::Approx(1));
}

TEST_CASE("equality rows and negative lower bounds") {
    // min x + 2y s.t. x + y = 3, x - y >= -1, x in [-5,2], y in [0,4]
    LpProblem p;
    p.add_variable(-5, 2, 1);
    p.add_variable(0, 4, 2);
    p.add_row({1, 1}, RowSense::Eq, 3);
    p.add_row({1, -1}, RowSense::Ge, -1);
    const auto r = solve_lp(p);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.primal[0] == doctest::Approx(2));
    CHECK(r.primal[1] == doctest::Approx(1));
    CHECK(r.objective == doctest::Approx(4));
    CHECK(testing::dual_objective(p, r.duals) == doctest::Approx(4));
}

TEST_CASE("redundant equality rows") {
    LpProblem p;
    p.sense = Sense::Maximize;
    p.add_variable(0, 5, 1);
    p.add_variable(0, 5, 1);
    p.add_row({1, 1}, RowSense::Eq, 4);
    p.add_row({2, 2}, RowSense::Eq, 8);
    const auto r = solve_lp(p);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(4));
}

TEST_CASE("malformed problems are rejected before pivoting") {
    LpProblem p;
    p.add_variable(0, 1, 1);
    p.rows.push_back({1, 2});
    p.row_senses.push_back(RowSense::Le);
    p.rhs.push_back(1);
    CHECK_THROWS_AS(solve_lp(p), MalformedProblem);

    LpProblem q;
    q.add_variable(2, 1, 1);
    CHECK_THROWS_AS(solve_lp(q), MalformedProblem);

    LpProblem r;
    r.add_variable(0, 1, std::nan(""));
    CHECK_THROWS_AS(solve_lp(r), MalformedProblem);
}

TEST_CASE("degenerate problem terminates under the smallest-index rule") {
    // Classic cycling example (Beale), bounded by a box.
    LpProblem p;
    p.sense = Sense::Maximize;
    for (double c : {0.75, -150.0, 0.02, -6.0}) p.add_variable(0, 1e4, c);
    p.add_row({0.25, -60, -0.04, 9}, RowSense::Le, 0);
    p.add_row({0.5, -90, -0.02, 3}, RowSense::Le, 0);
    p.add_row({0, 0, 1, 0}, RowSense::Le, 1);
    for (bool bland : {false, true}) {
        LpOptions o;
        o.bland_from_start = bland;
        const auto r = solve_lp(p, o);
        REQUIRE(r.status == LpStatus::Optimal);
        CHECK(r.objective == doctest::Approx(0.05));
    }
}

TEST_CASE("random LPs match vertex enumeration") {
    Rng rng(2024);
    int optimal = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + rng.below(6), m = 1 + rng.below(6);
        const auto p = testing::random_lp(rng, n, m);
        const auto r = solve_lp(p);
        const auto oracle = testing::lp_by_vertices(p);
        CAPTURE(t);
        if (!oracle) {
            CHECK(r.status == LpStatus::Infeasible);
            continue;
        }
        REQUIRE(r.status == LpStatus::Optimal);
        ++optimal;
        CHECK(std::abs(r.objective - *oracle) <= 1e-6);
        CHECK(max_violation(p, r.primal) <= 1e-7);
    }
    CHECK(optimal > 50);
}

TEST_CASE("strong duality and dual sign on random LPs") {
    Rng rng(77);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + rng.below(8), m = 1 + rng.below(8);
        auto p = testing::random_lp(rng, n, m);
        if (rng.bernoulli(0.5)) {
            p.sense = Sense::Minimize;
            for (auto& c : p.objective) c = -c;
        }
        const auto r = solve_lp(p);
        if (r.status != LpStatus::Optimal) continue;
        CAPTURE(t);
        CHECK(std::abs(testing::dual_objective(p, r.duals) - r.objective) <= 1e-6);
        // Sign: relaxing a row can only help.
        const double s = p.sense == Sense::Maximize ? 1.0 : -1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (p.row_senses[i] == RowSense::Le) CHECK(s * r.duals[i] >= -1e-7);
            if (p.row_senses[i] == RowSense::Ge) CHECK(s * r.duals[i] <= 1e-7);
            // complementary slackness
            const double slack = p.rhs[i] - dot(p.rows[i], r.primal);
            CHECK(std::abs(slack * r.duals[i]) <= 1e-6);
        }
    }
}

}
