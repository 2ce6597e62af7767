#include <algorithm>
#include <bit>
#include <cmath>

#include "bilevel/common/error.hpp"
#include "bilevel/common/lattice.hpp"
#include "bilevel/common/rng.hpp"
#include "bilevel/instances/generators.hpp"
#include "bilevel/modularity/modularity.hpp"
#include "doctest.h"
#include "support/toy_instances.hpp"

using namespace bilevel;

namespace {

// Definition applied to every pair of tenders.
std::pair<bool, bool> global_modularity(const std::vector<double>& t, std::size_t n) {
    bool sub = true, super = true;
    const std::uint64_t count = std::uint64_t{1} << n;
    for (std::uint64_t a = 0; a < count; ++a)
        for (std::uint64_t b = 0; b < count; ++b) {
            const double lhs = t[a] + t[b], rhs = t[a | b] + t[a & b];
            if (lhs < rhs - 1e-9) sub = false;
            if (lhs > rhs + 1e-9) super = false;
        }
    return {sub, super};
}

std::vector<double> table_of(const ValueOracle& f) {
    std::vector<double> t(std::size_t{1} << f.n());
    for (std::uint64_t m = 0; m < t.size(); ++m) t[m] = f(vertex_from_mask(m, f.n()));
    return t;
}

std::vector<PhiValue> phi_table(const BilevelInstance& inst, PhiCache& cache) {
    std::vector<PhiValue> t(std::size_t{1} << inst.n_x);
    for (std::uint64_t m = 0; m < t.size(); ++m) t[m] = eval_phi(inst, vertex_from_mask(m, inst.n_x), cache);
    return t;
}

const ValueOracle coverage_table = ValueOracle::from_table(2, {1, 2, 2, 2});
const ValueOracle min_table = ValueOracle::from_table(2, {0, 0, 0, 1});
const ValueOracle linear_table = ValueOracle::from_table(2, {0, 2, 3, 5});

}  // namespace

TEST_SUITE("modularity") {

TEST_CASE("verdicts on the small tables") {
    const auto cov = check_modularity(coverage_table);
    CHECK(cov.submodular);
    CHECK_FALSE(cov.supermodular);
    REQUIRE(cov.super_witness);
    const auto& [a, b] = *cov.super_witness;
    const auto t = table_of(coverage_table);
    CHECK(t[mask_from_vertex(a)] + t[mask_from_vertex(b)] >
          t[mask_from_vertex(lattice_join(a, b))] + t[mask_from_vertex(lattice_meet(a, b))] + 1e-9);

    const auto mn = check_modularity(min_table);
    CHECK(mn.supermodular);
    CHECK_FALSE(mn.submodular);
    REQUIRE(mn.sub_witness);

    const auto lin = check_modularity(linear_table);
    CHECK(lin.submodular);
    CHECK(lin.supermodular);
    CHECK_FALSE(lin.neither());
}

TEST_CASE("local check agrees with the pairwise definition") {
    Rng rng(5);
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t n = 1 + trial % 5;
        std::vector<double> t(std::size_t{1} << n);
        const int shape = trial % 4;
        for (std::uint64_t m = 0; m < t.size(); ++m) {
            const double k = std::popcount(m);
            // concave / convex in the cardinality, or noise
            if (shape == 0) t[m] = std::sqrt(k) * 3 + (m & 1);
            else if (shape == 1) t[m] = k * k - 2.0 * (m & 2);
            else t[m] = std::round(rng.uniform(-3, 3));
        }
        const auto f = ValueOracle::from_table(n, t);
        const auto v = check_modularity(f);
        const auto [sub, super] = global_modularity(t, n);
        CAPTURE(trial);
        CHECK(v.submodular == sub);
        CHECK(v.supermodular == super);
        if (!v.submodular) {
            const auto& [a, b] = *v.sub_witness;
            CHECK(t[mask_from_vertex(a)] + t[mask_from_vertex(b)] <
                  t[mask_from_vertex(lattice_join(a, b))] + t[mask_from_vertex(lattice_meet(a, b))] - 1e-9);
        }
    }
}

TEST_CASE("undefined values make the verdict unavailable") {
    const ValueOracle f(2, [](std::span<const std::uint8_t> x) -> PhiValue {
        if (x[0] && x[1]) return std::nullopt;
        return 1.0;
    });
    CHECK_FALSE(check_modularity(f).available);
    CHECK_FALSE(check_modularity(f).holds(ModularityKind::Sub));
    CHECK_THROWS_AS(check_modularity(ValueOracle::from_table(15, std::vector<double>(1 << 15))), CapacityExceeded);
}

TEST_CASE("closed-form coefficients on the small tables") {
    auto cov = closed_form_UL(coverage_table, ModularityKind::Sub);
    CHECK(cov.L[0] == doctest::Approx(-1));
    CHECK(cov.U[0] == doctest::Approx(0));
    CHECK(cov.provenance == CoeffProvenance::ClosedFormSub);
    auto mn = closed_form_UL(min_table, ModularityKind::Super);
    CHECK(mn.L[0] == doctest::Approx(-1));
    CHECK(mn.U[0] == doctest::Approx(0));
    CHECK(mn.rho_hat == doctest::Approx(1));
    CHECK(mn.provenance == CoeffProvenance::ClosedFormSuper);
    const auto flat = ValueOracle::from_table(3, std::vector<double>(8, 4.0));
    for (auto kind : {ModularityKind::Sub, ModularityKind::Super}) {
        const auto cs = closed_form_UL(flat, kind);
        CHECK(cs.rho_hat == 0.0);
        for (std::size_t i = 0; i < 3; ++i) CHECK((cs.U[i] == 0.0 && cs.L[i] == 0.0));
    }
}

TEST_CASE("closed form needs 2n+2 evaluations") {
    for (std::size_t n : {1, 3, 6}) {
        const auto f = ValueOracle::from_table(n, std::vector<double>(std::size_t{1} << n, 1.0));
        closed_form_UL(f, ModularityKind::Super);
        CHECK(f.calls() == 2 * n + 2);
    }
    const auto inst = testing::coverage_instance(5, 8, 3);
    PhiCache cache(inst);
    closed_form_UL(ValueOracle::from_phi(inst, cache), ModularityKind::Sub);
    CHECK(cache.phi_lookups() == 12);
}

TEST_CASE("closed form matches exact enumeration when the structure holds") {
    int seen_sub = 0, seen_super = 0;
    for (std::uint64_t seed = 1; seed <= 16; ++seed) {
        const std::size_t n = 2 + seed % 5;
        const auto inst = seed % 2 ? testing::coverage_instance(n, 2 * n, seed)
                                   : testing::complementarity_instance(n, 2 * n, seed);
        PhiCache cache(inst);
        const auto f = ValueOracle::from_phi(inst, cache);
        const auto verdict = check_modularity(f);
        const auto exact = exact_coefficients(inst, cache);
        for (auto kind : {ModularityKind::Sub, ModularityKind::Super}) {
            if (!verdict.holds(kind)) continue;
            (kind == ModularityKind::Sub ? seen_sub : seen_super)++;
            const auto cf = closed_form_UL(f, kind);
            CAPTURE(seed);
            CHECK(cf.rho_hat == doctest::Approx(exact.rho_hat).epsilon(1e-9));
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(std::abs(cf.U[i] - exact.U[i]) <= 1e-9);
                CHECK(std::abs(cf.L[i] - exact.L[i]) <= 1e-9);
            }
        }
    }
    CHECK(seen_sub >= 8);
    CHECK(seen_super >= 8);
}

TEST_CASE("submodular cut examples") {
    const auto c = submodular_cut(coverage_table, BinaryVector{1, 1});
    CHECK(c.beta == doctest::Approx(1));
    CHECK(c.alpha[0] == doctest::Approx(1));
    CHECK(c.alpha[1] == doctest::Approx(0));
    CHECK(c.rhs(BinaryVector{1, 1}) == doctest::Approx(2));
    CHECK(c.rhs(BinaryVector{0, 1}) == doctest::Approx(1));
    CHECK(c.family == CutFamily::Submodular);

    // z = 0: order is the index order, marginal gains along 1, 12.
    const auto c0 = submodular_cut(coverage_table, BinaryVector{0, 0});
    CHECK(c0.alpha[0] == doctest::Approx(1));
    CHECK(c0.alpha[1] == doctest::Approx(0));
    CHECK(c0.rhs(BinaryVector{0, 0}) == doctest::Approx(1));

    // z = (0, 1): x2 enters first.
    const auto c01 = submodular_cut(coverage_table, BinaryVector{0, 1});
    CHECK(c01.alpha[1] == doctest::Approx(1));
    CHECK(c01.alpha[0] == doctest::Approx(0));

    for (std::uint64_t zm = 0; zm < 4; ++zm) {
        linear_table.reset_calls();
        const auto cl = submodular_cut(linear_table, vertex_from_mask(zm, 2));
        CHECK(linear_table.calls() == 3);
        for (std::uint64_t m = 0; m < 4; ++m)
            CHECK(cl.rhs(vertex_from_mask(m, 2)) == doctest::Approx(linear_table(vertex_from_mask(m, 2))));
    }
}

TEST_CASE("supermodular cut examples") {
    const auto c = supermodular_cut(min_table, BinaryVector{1, 0});
    CHECK(c.alpha[0] == doctest::Approx(1));
    CHECK(c.alpha[1] == doctest::Approx(1));
    CHECK(c.beta == doctest::Approx(-1));
    CHECK(c.rhs(BinaryVector{1, 1}) == doctest::Approx(1));
    CHECK(c.rhs(BinaryVector{0, 0}) == doctest::Approx(-1));
    CHECK(c.rhs(BinaryVector{1, 0}) == doctest::Approx(0));
    CHECK(c.family == CutFamily::Supermodular);

    const auto f = ValueOracle::from_table(3, {0, 1, 1, 3, 0, 2, 2, 6});
    f.reset_calls();
    supermodular_cut(f, BinaryVector{1, 1, 1});
    CHECK(f.calls() == 4);
    f.reset_calls();
    supermodular_cut(f, BinaryVector{1, 0, 0});
    CHECK(f.calls() == 5);

    for (std::uint64_t zm = 0; zm < 4; ++zm) {
        const auto cl = supermodular_cut(linear_table, vertex_from_mask(zm, 2));
        for (std::uint64_t m = 0; m < 4; ++m)
            CHECK(cl.rhs(vertex_from_mask(m, 2)) == doctest::Approx(linear_table(vertex_from_mask(m, 2))));
    }
}

TEST_CASE("structure cuts are valid, tight and dominate the Lagrangian cut") {
    for (std::uint64_t seed = 20; seed < 32; ++seed) {
        const std::size_t n = 2 + seed % 5;
        const bool sub = seed % 2 == 0;
        const auto inst =
            sub ? testing::coverage_instance(n, 2 * n, seed) : testing::complementarity_instance(n, 2 * n, seed);
        PhiCache cache(inst);
        const auto f = ValueOracle::from_phi(inst, cache);
        const auto kind = sub ? ModularityKind::Sub : ModularityKind::Super;
        if (!check_modularity(f).holds(kind)) continue;
        const auto cs = exact_coefficients(inst, cache);
        const auto phi = phi_table(inst, cache);
        for (std::uint64_t zm = 0; zm < phi.size(); ++zm) {
            const auto z = vertex_from_mask(zm, n);
            const Cut sc = sub ? submodular_cut(f, z) : supermodular_cut(f, z);
            const Cut lr = lagrangian_cut(z, cs.U, cs.L, *phi[zm]);
            CHECK(sc.rhs(z) == doctest::Approx(*phi[zm]).epsilon(1e-9));
            for (std::uint64_t xm = 0; xm < phi.size(); ++xm) {
                const auto x = vertex_from_mask(xm, n);
                CAPTURE(seed);
                CHECK(sc.rhs(x) <= *phi[xm] + 1e-6);
                CHECK(sc.rhs(x) >= lr.rhs(x) - 1e-9);
            }
        }
    }
}

TEST_CASE("quasi cuts are valid against the full value function") {
    for (std::uint64_t seed = 40; seed < 52; ++seed) {
        const std::size_t n = 2 + seed % 7;  // up to 8
        const std::size_t nb = 1 + seed % 4;
        const bool sub = seed % 2 == 0;
        const auto inst = sub ? testing::quasi_coverage_instance(n, n + 2, nb, seed)
                              : testing::quasi_complementarity_instance(n, n + 2, nb, seed);
        PhiCache cache(inst);
        const auto kind = sub ? ModularityKind::Sub : ModularityKind::Super;
        const auto phi = phi_table(inst, cache);
        // a few anchors are enough at the larger sizes
        const std::uint64_t step = n > 5 ? 37 : 1;
        for (std::uint64_t zm = 0; zm < phi.size(); zm += step) {
            const auto z = vertex_from_mask(zm, n);
            const auto lr = quasi_lagrangian_cut(inst, z, cache, kind);
            const auto st = sub ? quasi_submodular_cut(inst, z, cache) : quasi_supermodular_cut(inst, z, cache);
            REQUIRE(lr);
            REQUIRE(st);
            CHECK(lr->rhs(z) == doctest::Approx(*phi[zm]).epsilon(1e-9));
            CHECK(st->rhs(z) == doctest::Approx(*phi[zm]).epsilon(1e-9));
            CHECK(lr->family == CutFamily::QuasiLagrangian);
            for (std::uint64_t xm = 0; xm < phi.size(); ++xm) {
                const auto x = vertex_from_mask(xm, n);
                CAPTURE(seed);
                CAPTURE(zm);
                CHECK(lr->rhs(x) <= *phi[xm] + 1e-6);
                CHECK(st->rhs(x) <= *phi[xm] + 1e-6);
            }
        }
    }
}

TEST_CASE("quasi cuts on a small facility instance") {
    FacilityGenConfig cfg;
    cfg.n = 2;
    cfg.seed = 9;
    const auto inst = gen_facility(cfg);
    PhiCache cache(inst);
    const auto phi = phi_table(inst, cache);
    for (std::uint64_t zm = 0; zm < 4; ++zm) {
        const auto z = vertex_from_mask(zm, 2);
        const auto lr = quasi_lagrangian_cut(inst, z, cache, ModularityKind::Sub);
        const auto st = quasi_submodular_cut(inst, z, cache);
        REQUIRE(lr);
        REQUIRE(st);
        for (std::uint64_t xm = 0; xm < 4; ++xm) {
            const auto x = vertex_from_mask(xm, 2);
            CHECK(lr->rhs(x) <= *phi[xm] + 1e-6);
            CHECK(st->rhs(x) <= *phi[xm] + 1e-6);
        }
        CHECK(st->rhs(z) == doctest::Approx(*phi[zm]));
    }
}

TEST_CASE("quasi cuts without binary followers reduce to the plain ones") {
    const auto inst = testing::coverage_instance(4, 6, 8);
    REQUIRE(inst.n_b() == 0);
    PhiCache cache(inst);
    const auto f = ValueOracle::from_phi(inst, cache);
    const auto cs = closed_form_UL(f, ModularityKind::Sub);
    for (std::uint64_t zm = 0; zm < 16; ++zm) {
        const auto z = vertex_from_mask(zm, 4);
        const double pz = f(z);
        const auto q = quasi_lagrangian_cut(inst, z, cache, ModularityKind::Sub);
        const auto plain = lagrangian_cut(z, cs.U, cs.L, pz);
        const auto qs = quasi_submodular_cut(inst, z, cache);
        const auto ps = submodular_cut(f, z);
        for (std::uint64_t xm = 0; xm < 16; ++xm) {
            const auto x = vertex_from_mask(xm, 4);
            CHECK(q->rhs(x) == doctest::Approx(plain.rhs(x)));
            CHECK(qs->rhs(x) == doctest::Approx(ps.rhs(x)));
        }
    }
}

TEST_CASE("quasi cut with infeasible anchor gives nothing") {
    const auto inst = make_instance({0}, {0}, {}, {}, {}, {1}, {{1}}, {{1}}, {0}, {}, {{0.5, 1.0}});
    PhiCache cache(inst);
    CHECK_FALSE(quasi_submodular_cut(inst, BinaryVector{1}, cache));
    CHECK_FALSE(quasi_lagrangian_cut(inst, BinaryVector{1}, cache, ModularityKind::Super));
}

}  // TEST_SUITE
