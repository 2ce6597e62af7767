#include "bilevel/instances/generators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "bilevel/common/error.hpp"
#include "bilevel/common/rng.hpp"

namespace bilevel {

namespace {

// One stream per coefficient block.
enum Stream : std::uint64_t {
    kCu = 1, kDu, kDl, kAu, kBu, kAl, kBl, kHu, kHl, kSparsity,
    kDemand = 101, kCapacity, kTransport,
};

std::size_t round_count(double v) { return static_cast<std::size_t>(std::max(1L, std::lround(v))); }

std::vector<double> draw(Rng& r, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& e : v) e = r.uniform(lo, hi);
    return v;
}

Matrix draw_matrix(Rng& r, std::size_t rows, std::size_t cols, double lo, double hi) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = r.uniform(lo, hi);
    return m;
}

}  // namespace

void GeneralGenConfig::validate() const {
    if (n_x == 0) throw Error("n_x must be positive");
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(bin_ratio) || !in01(sparsity) || !in01(constraint_ratio))
        throw Error("ratios must lie in [0, 1]");
    if (!(ny_ratio > 0.0)) throw Error("ny ratio must be positive");
}

BilevelInstance gen_general(const GeneralGenConfig& cfg) {
    cfg.validate();
    BilevelInstance inst;
    inst.n_x = cfg.n_x;
    inst.n_y = round_count(cfg.ny_ratio * static_cast<double>(cfg.n_x));
    const std::size_t m_u = round_count(cfg.constraint_ratio * static_cast<double>(inst.n_x));
    const std::size_t m_l = round_count(cfg.constraint_ratio * static_cast<double>(inst.n_y));

    Rng cu(cfg.seed, kCu), du(cfg.seed, kDu), dl(cfg.seed, kDl), au(cfg.seed, kAu), bu(cfg.seed, kBu),
        al(cfg.seed, kAl), bl(cfg.seed, kBl), hu(cfg.seed, kHu), hl(cfg.seed, kHl), sp(cfg.seed, kSparsity);
    inst.c_u = draw(cu, inst.n_x, -50, 50);
    inst.d_u = draw(du, inst.n_y, -50, 50);
    inst.d_l = draw(dl, inst.n_y, -50, 50);
    inst.A_u = draw_matrix(au, m_u, inst.n_x, 0, 10);
    inst.B_u = draw_matrix(bu, m_u, inst.n_y, 0, 10);
    inst.A_l = draw_matrix(al, m_l, inst.n_x, 0, 10);
    inst.B_l = draw_matrix(bl, m_l, inst.n_y, 0, 10);
    inst.h_u = draw(hu, m_u, 30, 130);
    inst.h_l = draw(hl, m_l, 10, 110);
    if (cfg.sparsity > 0.0) {
        // Draw for every entry so the pattern does not depend on earlier hits.
        for (std::size_t i = 0; i < m_l; ++i) {
            for (std::size_t k = 0; k < inst.n_x; ++k)
                if (sp.uniform01() < cfg.sparsity) inst.A_l(i, k) = 0.0;
            for (std::size_t j = 0; j < inst.n_y; ++j)
                if (sp.uniform01() < cfg.sparsity) inst.B_l(i, j) = 0.0;
        }
    }
    const auto n_bin = static_cast<std::size_t>(std::lround(cfg.bin_ratio * static_cast<double>(inst.n_y)));
    for (std::size_t j = 0; j < std::min(n_bin, inst.n_y); ++j) inst.binary_y.push_back(j);
    inst.finalize_domain();
    inst.y2_bounds.assign(inst.n_c(), {0.0, 1.0});
    inst.validate();
    return inst;
}

std::size_t FacilityGenConfig::budget() const {
    return static_cast<std::size_t>(std::lround(static_cast<double>(n) / 3.0));
}

std::vector<bool> facility_conditions(const FacilityData& d) {
    const double demand = std::accumulate(d.demand.begin(), d.demand.end(), 0.0);
    const double cap = std::accumulate(d.capacity.begin(), d.capacity.end(), 0.0);
    const double repair = std::accumulate(d.repair_cap.begin(), d.repair_cap.end(), 0.0);
    std::vector<double> sorted = d.capacity;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double top = 0.0;
    for (std::size_t k = 0; k < std::min(d.budget, sorted.size()); ++k) top += sorted[k];
    return {demand <= cap, demand > cap - top, demand <= cap - top + repair};
}

FacilityData gen_facility_data(const FacilityGenConfig& cfg) {
    if (cfg.n < 2) throw Error("facility instances need at least 2 facilities");
    FacilityData d;
    d.n = cfg.n;
    d.m = cfg.customers();
    d.budget = cfg.budget();
    Rng dr(cfg.seed, kDemand), cr(cfg.seed, kCapacity), tr(cfg.seed, kTransport);
    d.demand = draw(dr, d.m, 0, 1);
    d.transport.resize(d.n);
    for (auto& row : d.transport) row = draw(tr, d.m, 0, 1);

    const double scale = static_cast<double>(d.m) / static_cast<double>(d.n);
    std::vector<bool> ok;
    for (d.draws = 1; d.draws <= cfg.max_draws; ++d.draws) {
        d.capacity = draw(cr, d.n, scale / 3.0, scale);
        d.repair_cap.resize(d.n);
        for (std::size_t i = 0; i < d.n; ++i)
            d.repair_cap[i] = d.capacity[i] * static_cast<double>(d.budget) / static_cast<double>(d.n);
        ok = facility_conditions(d);
        if (ok[0] && ok[1] && ok[2]) break;
    }
    if (d.draws > cfg.max_draws) {
        const auto bad = static_cast<std::size_t>(std::find(ok.begin(), ok.end(), false) - ok.begin());
        throw Error("facility capacities fail condition " + std::to_string(bad + 1) + " after " +
                    std::to_string(cfg.max_draws) + " draws");
    }
    d.repair_cost.resize(d.n);
    for (std::size_t i = 0; i < d.n; ++i)
        d.repair_cost[i] = 2.0 * d.repair_cap[i] * *std::max_element(d.transport[i].begin(), d.transport[i].end());
    return d;
}

BilevelInstance facility_instance(const FacilityData& d) {
    const std::size_t n = d.n, m = d.m;
    BilevelInstance inst;
    inst.n_x = n;
    inst.n_y = n + n * m;
    // Lower level maximizes -g; the attacker minimizes -g as well.
    inst.d_l.assign(inst.n_y, 0.0);
    for (std::size_t i = 0; i < n; ++i) inst.d_l[i] = -d.repair_cost[i];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            inst.d_l[n + i * m + j] = (d.unmet_penalty - d.transport[i][j]) * d.demand[j];
    inst.d_u = inst.d_l;
    inst.c_u.assign(n, 0.0);

    // 1'(1 - x) <= B
    inst.A_u = Matrix(1, n, -1.0);
    inst.B_u = Matrix(1, inst.n_y, 0.0);
    inst.h_u = {static_cast<double>(d.budget) - static_cast<double>(n)};

    inst.A_l = Matrix(m + n, n, 0.0);
    inst.B_l = Matrix(m + n, inst.n_y, 0.0);
    inst.h_l.assign(m + n, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) inst.B_l(j, n + i * m + j) = 1.0;
        inst.h_l[j] = 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = m + i;
        for (std::size_t j = 0; j < m; ++j) inst.B_l(r, n + i * m + j) = d.demand[j];
        inst.B_l(r, i) = -d.repair_cap[i];
        inst.A_l(r, i) = -d.capacity[i];
    }
    for (std::size_t i = 0; i < n; ++i) inst.binary_y.push_back(i);
    inst.finalize_domain();
    inst.y2_bounds.assign(inst.n_c(), {0.0, 1.0});
    inst.validate();
    return inst;
}

BilevelInstance gen_facility(const FacilityGenConfig& cfg) { return facility_instance(gen_facility_data(cfg)); }

}  // namespace bilevel
