#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "bilevel/common/error.hpp"
#include "bilevel/model/instance_io.hpp"
#include "bilevel/model/value_function.hpp"
#include "doctest.h"
#include "support/toy_instances.hpp"

using namespace bilevel;
using testing::toy_t1;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("bilevel_test_" + name)).string();
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("toy T1 value function") {
    const auto inst = toy_t1();
    PhiCache cache(inst);
    CHECK(*eval_phi(inst, BinaryVector{0}, cache) == doctest::Approx(1));
    CHECK(*eval_phi(inst, BinaryVector{1}, cache) == doctest::Approx(0));
}

TEST_CASE("infeasible lower level yields the marker") {
    // max y s.t. y <= -x + 0.4 ... with y >= 0.5: infeasible at x = 1 and x = 0
    const auto inst = make_instance({0}, {0}, {}, {}, {}, {1}, {{1}}, {{1}}, {0}, {}, {{0.5, 1.0}});
    PhiCache cache(inst);
    CHECK_FALSE(eval_phi(inst, BinaryVector{1}, cache).has_value());
    CHECK_FALSE(lower_feasible_everywhere(cache));
}

TEST_CASE("unbounded lower level is a hard error") {
    auto inst = make_instance({0}, {0}, {}, {}, {}, {1}, {}, {}, {}, {}, {{0.0, 1.0}});
    inst.y2_bounds[0].second = kInf;  // bypass the loader's finite-bound rule
    CHECK_THROWS_AS(solve_lower(inst, BinaryVector{0}), AssumptionViolation);
}

TEST_CASE("cache hits are bit-identical and counted") {
    const auto inst = testing::quasi_coverage_instance(5, 6, 2, 3);
    PhiCache cache(inst);
    const BinaryVector x{1, 0, 1, 1, 0};
    const auto a = eval_phi(inst, x, cache);
    const auto b = eval_phi(inst, x, cache);
    REQUIRE(a.has_value());
    CHECK(std::memcmp(&*a, &*b, sizeof(double)) == 0);
    CHECK(cache.phi_lookups() == 2);
    CHECK(cache.phi_solves() == 1);
    const auto fresh = solve_lower(inst, x);
    CHECK(std::abs(*fresh.value - *a) <= 1e-6);
}

TEST_CASE("phi decomposes over the binary block") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto inst = testing::quasi_coverage_instance(4, 5, 1 + seed % 4, seed);
        PhiCache cache(inst);
        for_each_vertex(inst.n_x, [&](const BinaryVector& x) {
            const auto phi = eval_phi(inst, x, cache);
            double best = -kInf;
            for_each_vertex(inst.n_b(), [&](const BinaryVector& y1) {
                const auto v = eval_varphi(inst, x, y1, cache);
                if (!v) return;
                double lin = 0.0;
                for (std::size_t k = 0; k < inst.n_b(); ++k) lin += inst.d_l[inst.binary_y[k]] * y1[k];
                best = std::max(best, lin + *v);
            });
            REQUIRE(phi.has_value());
            CHECK(std::abs(*phi - best) <= 1e-6);
        });
    }
}

TEST_CASE("residual value ignores x when the tender does not enter the lower level") {
    const auto inst = make_instance({0, 0}, {0, 0}, {}, {}, {}, {2, 1}, {{0, 0}}, {{1, 1}}, {1.5}, {},
                                    {{0.0, 1.0}, {0.0, 1.0}});
    PhiCache cache(inst);
    const BinaryVector none;
    const auto v0 = eval_varphi(inst, BinaryVector{0, 0}, none, cache);
    const auto v1 = eval_varphi(inst, BinaryVector{1, 1}, none, cache);
    CHECK(*v0 == doctest::Approx(2.5));
    CHECK(*v1 == doctest::Approx(2.5));
}

TEST_CASE("two by two transport residual") {
    // Two sources with capacities x-dependent, two sinks of demand 1; profit
    // per unit routed differs. Binary y1 opens a third (unused) route.
    // y = [f11, f12, f21, f22, open]
    const auto inst = make_instance(
        {0, 0}, {0, 0, 0, 0, 0}, {}, {}, {}, {4, 1, 2, 3, -1},
        {{-1, 0}, {0, -1}, {0, 0}, {0, 0}},
        {{1, 1, 0, 0, 0}, {0, 0, 1, 1, 0}, {1, 0, 1, 0, 0}, {0, 1, 0, 1, 0}}, {0, 0, 1, 1}, {4});
    PhiCache cache(inst);
    // Both sources open: route f11 and f22 for 4 + 3 = 7.
    CHECK(*eval_varphi(inst, BinaryVector{1, 1}, BinaryVector{0}, cache) == doctest::Approx(7));
    // Only source 2: best of f21 (2) or f22 (3), and one unit only.
    CHECK(*eval_varphi(inst, BinaryVector{0, 1}, BinaryVector{0}, cache) == doctest::Approx(3));
    CHECK(*eval_varphi(inst, BinaryVector{0, 0}, BinaryVector{0}, cache) == doctest::Approx(0));
}

TEST_CASE("multilinear extension") {
    const auto inst = toy_t1();
    PhiCache cache(inst);
    CHECK(eval_psi(inst, std::vector<double>{0.5}, cache) == doctest::Approx(0.5));
    const auto cov = testing::coverage_instance(4, 5, 9);
    PhiCache cc(cov);
    for_each_vertex(4, [&](const BinaryVector& x) {
        CHECK(eval_psi(cov, to_doubles(x), cc) == *eval_phi(cov, x, cc));
    });
    // constant phi
    const auto flat = make_instance({0, 0}, {0}, {}, {}, {}, {3}, {}, {}, {}, {}, {{0.0, 1.0}});
    PhiCache fc(flat);
    CHECK(eval_psi(flat, std::vector<double>{0.3, 0.8}, fc) == doctest::Approx(3));
    // linear in each coordinate
    const std::vector<double> a{0.2, 0.4, 0.9, 0.1}, b{0.6, 0.4, 0.9, 0.1}, mid{0.4, 0.4, 0.9, 0.1};
    CHECK(eval_psi(cov, mid, cc) == doctest::Approx(0.5 * (eval_psi(cov, a, cc) + eval_psi(cov, b, cc))));
}

TEST_CASE("high point relaxation") {
    const auto inst = toy_t1();
    const auto hpr = build_hpr(inst);
    REQUIRE(hpr.group("x") != nullptr);
    CHECK(hpr.group("y")->begin == 1);
    const auto r = solve_milp(hpr);
    REQUIRE(r.status == MilpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(-1));

    const auto bad = make_instance({0}, {0}, {{0}}, {{0}}, {-1}, {1}, {}, {}, {}, {}, {{0.0, 1.0}});
    CHECK(solve_milp(build_hpr(bad)).status == MilpStatus::Infeasible);
}

TEST_CASE("instance file round trip is bit-exact") {
    auto inst = testing::quasi_coverage_instance(5, 4, 2, 12);
    inst.c_u[0] = 0.1 + 0.2;  // not representable in short decimal
    const auto path = temp_path("roundtrip.json");
    save_instance(inst, path);
    const auto back = load_instance(path);
    CHECK(back.c_u == inst.c_u);
    CHECK(back.d_u == inst.d_u);
    CHECK(back.A_u == inst.A_u);
    CHECK(back.B_u == inst.B_u);
    CHECK(back.h_u == inst.h_u);
    CHECK(back.d_l == inst.d_l);
    CHECK(back.A_l == inst.A_l);
    CHECK(back.B_l == inst.B_l);
    CHECK(back.h_l == inst.h_l);
    CHECK(back.binary_y == inst.binary_y);
    CHECK(back.y2_bounds == inst.y2_bounds);
    CHECK(instance_to_string(back) == instance_to_string(inst));
    std::filesystem::remove(path);
}

TEST_CASE("schema errors name the field") {
    auto j = instance_to_json(toy_t1());
    j["lower"].erase("d_l");
    try {
        instance_from_json(j);
        FAIL("expected a schema error");
    } catch (const SchemaError& e) {
        CHECK(e.path() == "lower.d_l");
    }

    auto k = instance_to_json(toy_t1());
    k["upper"]["c_u"] = {1, 2};
    CHECK_THROWS_AS(instance_from_json(k), SchemaError);

    auto d = instance_to_json(toy_t1());
    d["x_domain"] = "integer";
    try {
        instance_from_json(d);
        FAIL("expected a schema error");
    } catch (const SchemaError& e) {
        CHECK(e.path() == "x_domain");
        CHECK(std::string(e.what()).find("binary") != std::string::npos);
    }
}

TEST_CASE("missing y2 bounds default to a finite box") {
    auto j = instance_to_json(toy_t1());
    j["lower"].erase("y2_bounds");
    const auto inst = instance_from_json(j);
    REQUIRE(inst.y2_bounds.size() == 1);
    CHECK(inst.y2_bounds[0].first == 0.0);
    CHECK(inst.y2_bounds[0].second == BilevelInstance::kDefaultY2Upper);
}

}
