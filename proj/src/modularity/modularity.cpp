#include "bilevel/modularity/modularity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bilevel/common/error.hpp"
#include "bilevel/common/tolerances.hpp"

namespace bilevel {

ValueOracle::ValueOracle(std::size_t n, Fn fn)
    : n_(n), fn_(std::move(fn)), calls_(std::make_shared<std::atomic<std::size_t>>(0)) {}

ValueOracle ValueOracle::from_phi(const BilevelInstance& inst, PhiCache& cache) {
    return ValueOracle(inst.n_x, [&inst, &cache](std::span<const std::uint8_t> x) { return eval_phi(inst, x, cache); });
}

ValueOracle ValueOracle::from_varphi(const BilevelInstance& inst, PhiCache& cache, BinaryVector y1) {
    return ValueOracle(inst.n_x, [&inst, &cache, y1 = std::move(y1)](std::span<const std::uint8_t> x) {
        return eval_varphi(inst, x, y1, cache);
    });
}

ValueOracle ValueOracle::from_table(std::size_t n, std::vector<double> table) {
    if (n >= 63 || table.size() != (std::size_t{1} << n)) throw MalformedProblem("value table must have 2^n entries");
    return ValueOracle(n, [t = std::move(table)](std::span<const std::uint8_t> x) -> PhiValue {
        return t[mask_from_vertex(x)];
    });
}

PhiValue ValueOracle::try_eval(std::span<const std::uint8_t> x) const {
    if (x.size() != n_) throw MalformedProblem("oracle argument has wrong length");
    ++*calls_;
    return fn_(x);
}

double ValueOracle::operator()(std::span<const std::uint8_t> x) const {
    const PhiValue v = try_eval(x);
    if (!v) throw AssumptionViolation("value function undefined at " + to_string(BinaryVector(x.begin(), x.end())));
    return *v;
}

const char* to_string(ModularityKind k) { return k == ModularityKind::Sub ? "sub" : "super"; }

ModularityVerdict check_modularity(const ValueOracle& f) {
    const std::size_t n = f.n();
    if (n > kModularityMaxTenders) throw CapacityExceeded("modularity check limited to 14 tenders");
    const std::uint64_t count = std::uint64_t{1} << n;
    std::vector<double> v(count);
    ModularityVerdict out;
    for (std::uint64_t m = 0; m < count; ++m) {
        const PhiValue p = f.try_eval(vertex_from_mask(m, n));
        if (!p) {
            out.available = false;
            return out;
        }
        v[m] = *p;
    }
    out.submodular = out.supermodular = true;
    for (std::uint64_t z = 0; z < count; ++z) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t bi = std::uint64_t{1} << i;
            if (z & bi) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                const std::uint64_t bj = std::uint64_t{1} << j;
                if (z & bj) continue;
                const double lhs = v[z | bi] + v[z | bj];
                const double rhs = v[z] + v[z | bi | bj];
                const double tol = Tolerances::equality *
                                   std::max({1.0, std::abs(v[z]), std::abs(v[z | bi]), std::abs(v[z | bj]),
                                             std::abs(v[z | bi | bj])});
                auto pair = [&] { return std::make_pair(vertex_from_mask(z | bi, n), vertex_from_mask(z | bj, n)); };
                if (lhs < rhs - tol && out.submodular) {
                    out.submodular = false;
                    out.sub_witness = pair();
                }
                if (lhs > rhs + tol && out.supermodular) {
                    out.supermodular = false;
                    out.super_witness = pair();
                }
            }
        }
    }
    return out;
}

CoefficientSet closed_form_UL(const ValueOracle& f, ModularityKind kind) {
    const std::size_t n = f.n();
    BinaryVector zeros(n, 0), ones(n, 1);
    const double f0 = f(zeros), f1 = f(ones);
    CoefficientSet cs;
    cs.provenance = kind == ModularityKind::Sub ? CoeffProvenance::ClosedFormSub : CoeffProvenance::ClosedFormSuper;
    cs.U.resize(n);
    cs.L.resize(n);
    cs.usable.assign(n, true);
    for (std::size_t i = 0; i < n; ++i) {
        BinaryVector e(n, 0), ce(n, 1);
        e[i] = 1;
        ce[i] = 0;
        const double low = f0 - f(e);    // first step up from 0
        const double high = f(ce) - f1;  // last step up to 1
        if (kind == ModularityKind::Sub) {
            cs.L[i] = low;
            cs.U[i] = high;
        } else {
            cs.L[i] = high;
            cs.U[i] = low;
        }
        cs.rho_hat = std::max({cs.rho_hat, cs.U[i], -cs.L[i]});
    }
    return cs;
}

Cut submodular_cut(const ValueOracle& f, std::span<const std::uint8_t> z) {
    const std::size_t n = f.n();
    if (z.size() != n) throw MalformedProblem("anchor tender has wrong length");
    std::vector<std::size_t> sigma(n);
    std::iota(sigma.begin(), sigma.end(), 0);
    std::stable_sort(sigma.begin(), sigma.end(), [&](std::size_t a, std::size_t b) { return z[a] > z[b]; });

    Cut c;
    c.family = CutFamily::Submodular;
    c.z.assign(z.begin(), z.end());
    c.alpha.assign(n, 0.0);
    BinaryVector s(n, 0);
    double prev = f(s);
    c.beta = prev;
    for (std::size_t k = 0; k < n; ++k) {
        s[sigma[k]] = 1;
        const double cur = f(s);
        c.alpha[sigma[k]] = cur - prev;
        prev = cur;
    }
    return c;
}

Cut supermodular_cut(const ValueOracle& f, std::span<const std::uint8_t> z) {
    const std::size_t n = f.n();
    if (z.size() != n) throw MalformedProblem("anchor tender has wrong length");
    const BinaryVector sz(z.begin(), z.end());
    const BinaryVector ones(n, 1);
    const double f_sz = f(sz);
    const bool full = std::all_of(sz.begin(), sz.end(), [](std::uint8_t b) { return b != 0; });
    const double f_all = full ? f_sz : f(ones);

    Cut c;
    c.family = CutFamily::Supermodular;
    c.z = sz;
    c.alpha.assign(n, 0.0);
    c.beta = f_sz;
    for (std::size_t i = 0; i < n; ++i) {
        BinaryVector s = sz[i] ? ones : sz;
        s[i] = static_cast<std::uint8_t>(!sz[i]);
        if (sz[i]) {
            const double delta = f_all - f(s);  // d([n]\i, i)
            c.alpha[i] = delta;
            c.beta -= delta;
        } else {
            c.alpha[i] = f(s) - f_sz;  // d(S_z, i)
        }
    }
    return c;
}

namespace {

struct QuasiAnchor {
    BinaryVector y1;
    double phi_z;
    double d1y1;
};

std::optional<QuasiAnchor> quasi_anchor(const BilevelInstance& inst, std::span<const std::uint8_t> z,
                                        PhiCache& cache) {
    if (&inst != &cache.instance()) throw Error("cache belongs to a different instance");
    const LowerSolution s = cache.lower(z);
    if (!s.value) return std::nullopt;
    QuasiAnchor a{s.y1(inst), *s.value, 0.0};
    for (std::size_t k = 0; k < inst.n_b(); ++k) a.d1y1 += inst.d_l[inst.binary_y[k]] * a.y1[k];
    return a;
}

}  // namespace

std::optional<Cut> quasi_lagrangian_cut(const BilevelInstance& inst, std::span<const std::uint8_t> z,
                                        PhiCache& cache, ModularityKind kind) {
    const auto a = quasi_anchor(inst, z, cache);
    if (!a) return std::nullopt;
    const auto f = ValueOracle::from_varphi(inst, cache, a->y1);
    const CoefficientSet cs = closed_form_UL(f, kind);
    Cut c = lagrangian_cut(z, cs.U, cs.L, a->phi_z);
    c.family = CutFamily::QuasiLagrangian;
    c.provenance = to_string(cs.provenance);
    return c;
}

std::optional<Cut> quasi_submodular_cut(const BilevelInstance& inst, std::span<const std::uint8_t> z,
                                        PhiCache& cache) {
    const auto a = quasi_anchor(inst, z, cache);
    if (!a) return std::nullopt;
    Cut c = submodular_cut(ValueOracle::from_varphi(inst, cache, a->y1), z);
    c.beta += a->d1y1;
    c.family = CutFamily::QuasiSubmodular;
    return c;
}

std::optional<Cut> quasi_supermodular_cut(const BilevelInstance& inst, std::span<const std::uint8_t> z,
                                          PhiCache& cache) {
    const auto a = quasi_anchor(inst, z, cache);
    if (!a) return std::nullopt;
    Cut c = supermodular_cut(ValueOracle::from_varphi(inst, cache, a->y1), z);
    c.beta += a->d1y1;
    c.family = CutFamily::QuasiSupermodular;
    return c;
}

}  // namespace bilevel
