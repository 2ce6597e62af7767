#include <cmath>

#include "bilevel/common/error.hpp"
#include "bilevel/common/rng.hpp"
#include "bilevel/milp/milp.hpp"
#include "doctest.h"
#include "support/solver_oracles.hpp"

using namespace bilevel;

TEST_SUITE("milp") {

TEST_CASE("rounding forced") {
    ModelBuilder b(Sense::Maximize);
    b.add_binary(1);
    b.add_binary(1);
    b.add_row({{0, 1}, {1, 1}}, RowSense::Le, 1.5);
    const auto r = solve_milp(b.build());
    REQUIRE(r.status == MilpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(1));
}

TEST_CASE("two item knapsack") {
    ModelBuilder b(Sense::Maximize);
    b.add_binary(3);
    b.add_binary(2);
    b.add_row({{0, 2}, {1, 2}}, RowSense::Le, 3);
    const auto r = solve_milp(b.build());
    REQUIRE(r.status == MilpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(3));
    CHECK(r.x[0] == 1);
    CHECK(r.x[1] == 0);
}

TEST_CASE("callback excluding x1 = 1") {
    ModelBuilder b(Sense::Maximize);
    b.add_binary(5);
    b.add_binary(3);
    b.add_binary(2);
    b.add_row({{0, 1}, {1, 1}, {2, 1}}, RowSense::Le, 2);
    std::size_t rejected = 0;
    const auto cb = [&](std::span<const double> x, double) {
        if (x[0] > 0.5) {
            ++rejected;
            return LazyCutDecision::Reject({CutRow{{1, 0, 0}, RowSense::Le, 0}});
        }
        return LazyCutDecision::Accept();
    };
    const auto r = solve_milp(b.build(), cb);
    REQUIRE(r.status == MilpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(5));
    CHECK(r.x[0] == 0);
    CHECK(rejected == 1);
    CHECK(r.cuts_added == 1);
}

TEST_CASE("rejection without a separating cut is an error") {
    ModelBuilder b(Sense::Maximize);
    b.add_binary(1);
    const auto cb = [](std::span<const double>, double) {
        return LazyCutDecision::Reject({CutRow{{1}, RowSense::Le, 5}});
    };
    CHECK_THROWS_AS(solve_milp(b.build(), cb), NumericalTrouble);
}

TEST_CASE("infeasible and unbounded are distinguished") {
    ModelBuilder b;
    b.add_binary(1);
    b.add_row({{0, 1}}, RowSense::Ge, 2);
    CHECK(solve_milp(b.build()).status == MilpStatus::Infeasible);

    ModelBuilder u;
    u.add_binary(1);
    u.add_var(-kInf, kInf, 1);
    CHECK(solve_milp(u.build()).status == MilpStatus::Unbounded);
}

TEST_CASE("integer variables need finite bounds") {
    ModelBuilder b;
    b.add_var(0, kInf, 1, true);
    CHECK_THROWS_AS(solve_milp(b.build()), MalformedProblem);
}

TEST_CASE("node limit returns best incumbent with a gap") {
    Rng rng(9);
    const auto p = testing::random_milp(rng, 12, 0, 3);
    MilpLimits lim;
    lim.max_nodes = 2;
    const auto r = solve_milp(p, {}, lim);
    const auto full = solve_milp(p);
    CHECK((r.status == MilpStatus::NodeLimit || r.status == MilpStatus::Optimal));
    if (r.status == MilpStatus::NodeLimit) {
        // maximization: bound is an upper bound
        CHECK(r.bound >= full.objective - 1e-6);
        if (r.has_incumbent) CHECK(r.objective <= full.objective + 1e-6);
    }
}

TEST_CASE("random MILPs match exhaustive enumeration") {
    Rng rng(99);
    for (int t = 0; t < 100; ++t) {
        const std::size_t bins = 1 + rng.below(12);
        const std::size_t cont = rng.below(3);
        const auto p = testing::random_milp(rng, bins, cont, 1 + rng.below(4));
        const auto r = solve_milp(p);
        const auto oracle = testing::milp_by_enumeration(p);
        CAPTURE(t);
        if (!oracle) {
            CHECK(r.status == MilpStatus::Infeasible);
            continue;
        }
        REQUIRE(r.status == MilpStatus::Optimal);
        CHECK(std::abs(r.objective - *oracle) <= 1e-6);
        CHECK(std::abs(r.bound - r.objective) <= 1e-6);
    }
}

TEST_CASE("incumbents satisfy every cut the callback emitted") {
    Rng rng(31);
    for (int t = 0; t < 20; ++t) {
        const auto p = testing::random_milp(rng, 8, 0, 2);
        std::vector<CutRow> emitted;
        // Forbid every point with an even number of ones via a no-good cut.
        const auto cb = [&](std::span<const double> x, double) {
            int ones = 0;
            for (double v : x) ones += v > 0.5;
            if (ones % 2 == 0) {
                CutRow c{std::vector<double>(x.size()), RowSense::Ge, 1.0 - ones};
                for (std::size_t j = 0; j < x.size(); ++j) c.coeffs[j] = x[j] > 0.5 ? -1.0 : 1.0;
                emitted.push_back(c);
                return LazyCutDecision::Reject({c});
            }
            return LazyCutDecision::Accept();
        };
        const auto r = solve_milp(p, cb);
        if (!r.has_incumbent) continue;
        for (const auto& c : emitted) CHECK(c.violation(r.x) <= 1e-6);
    }
}

}
