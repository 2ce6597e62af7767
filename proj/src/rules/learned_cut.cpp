#include <algorithm>
#include <cmath>

#include "bilevel/common/error.hpp"
#include "bilevel/rules/neural.hpp"
#include "lower_rows.hpp"

namespace bilevel {

namespace {

struct Interval {
    double lo, hi;
};

Interval affine_range(const NeuralLayer& L, std::size_t i, const std::vector<Interval>& in) {
    Interval r{L.b[i], L.b[i]};
    auto add = [&](double w, Interval v) {
        r.lo += std::min(w * v.lo, w * v.hi);
        r.hi += std::max(w * v.lo, w * v.hi);
    };
    for (std::size_t j = 0; j < in.size(); ++j) add(L.W(i, j), in[j]);
    for (std::size_t j = 0; j < L.D.cols(); ++j) add(L.D(i, j), {0.0, 1.0});
    return r;
}

double checked_m(double m) {
    if (!(m <= kMaxBigM)) throw MalformedProblem("big-M above 1e7 in rule encoding; rescale the weights");
    return m;
}

}  // namespace

EncodedRule encode_rule(const NeuralRule& rule, ModelBuilder& b, const std::vector<std::size_t>& x_vars) {
    rule.validate();
    if (x_vars.size() != rule.n_in()) throw MalformedProblem("rule input has wrong length");
    EncodedRule enc;
    std::vector<std::size_t> in = x_vars;
    std::vector<Interval> range(x_vars.size(), Interval{0.0, 1.0});
    for (std::size_t l = 0; l < rule.layers.size(); ++l) {
        const auto& L = rule.layers[l];
        const bool last = l + 1 == rule.layers.size();
        std::vector<std::size_t> out;
        std::vector<Interval> out_range;
        for (std::size_t i = 0; i < L.width(); ++i) {
            // a = W in + D x + b as terms plus the constant b
            std::vector<Term> a;
            for (std::size_t j = 0; j < in.size(); ++j)
                if (L.W(i, j) != 0.0) a.emplace_back(in[j], L.W(i, j));
            for (std::size_t j = 0; j < L.D.cols(); ++j)
                if (L.D(i, j) != 0.0) a.emplace_back(x_vars[j], L.D(i, j));
            const Interval r = affine_range(L, i, range);
            auto with = [&](std::vector<std::pair<std::size_t, double>> extra, double scale) {
                std::vector<Term> t;
                for (const auto& [v, c] : a) t.emplace_back(v, c * scale);
                t.insert(t.end(), extra.begin(), extra.end());
                return t;
            };
            if (last) {
                const double th = -kStepTolerance;
                std::size_t y;
                if (r.lo >= th) y = b.add_var(1.0, 1.0, 0.0, true);
                else if (r.hi < th) y = b.add_var(0.0, 0.0, 0.0, true);
                else {
                    y = b.add_binary();
                    const double m0 = checked_m(1.1 * std::max(1.0, th - r.lo));
                    const double m1 = checked_m(1.1 * std::max(1.0, r.hi - th));
                    enc.max_big_m = std::max({enc.max_big_m, m0, m1});
                    // y = 0 forces a <= th; y = 1 forces a >= th
                    b.add_row(with({{y, -m1}}, 1.0), RowSense::Le, th - L.b[i]);
                    b.add_row(with({{y, -m0}}, 1.0), RowSense::Ge, th - m0 - L.b[i]);
                }
                out.push_back(y);
                out_range.push_back({0.0, 1.0});
                continue;
            }
            // s = clip(a/5 + 1/2, [0, 1])
            const Interval lin{r.lo / 5.0 + 0.5, r.hi / 5.0 + 0.5};
            const Interval sr{std::clamp(lin.lo, 0.0, 1.0), std::clamp(lin.hi, 0.0, 1.0)};
            const std::size_t s = b.add_var(sr.lo, sr.hi);
            if (lin.lo >= 1.0 || lin.hi <= 0.0) {
                // saturated: bounds already fix s
            } else if (lin.lo >= 0.0 && lin.hi <= 1.0) {
                b.add_row(with({{s, 1.0}}, -0.2), RowSense::Eq, L.b[i] / 5.0 + 0.5);
            } else {
                const double m = checked_m(1.1 * std::max({1.0, lin.hi - 1.0, -lin.lo}));
                enc.max_big_m = std::max(enc.max_big_m, m);
                std::vector<std::pair<std::size_t, double>> up_extra{{s, 1.0}}, lo_extra{{s, 1.0}};
                if (lin.lo < 0.0) {
                    const std::size_t d0 = b.add_binary();  // s = 0 branch
                    up_extra.emplace_back(d0, -m);
                    b.add_row({{s, 1.0}, {d0, 1.0}}, RowSense::Le, 1.0);
                }
                if (lin.hi > 1.0) {
                    const std::size_t d1 = b.add_binary();  // s = 1 branch
                    lo_extra.emplace_back(d1, m);
                    b.add_row({{s, 1.0}, {d1, -1.0}}, RowSense::Ge, 0.0);
                }
                // s <= a/5 + 1/2 + M d0 ; s >= a/5 + 1/2 - M d1
                b.add_row(with(up_extra, -0.2), RowSense::Le, L.b[i] / 5.0 + 0.5);
                b.add_row(with(lo_extra, -0.2), RowSense::Ge, L.b[i] / 5.0 + 0.5);
            }
            out.push_back(s);
            out_range.push_back(sr);
        }
        if (!last) enc.hidden.push_back(out);
        else enc.outputs = out;
        in = std::move(out);
        range = std::move(out_range);
    }
    return enc;
}

double default_pi_bound(const BilevelInstance& inst) {
    double d1 = 0.0, hmax = 0.0;
    for (std::size_t j : inst.continuous_y) d1 += std::abs(inst.d_l[j]);
    for (double h : inst.h_l) hmax = std::max(hmax, std::abs(h));
    return 10.0 * std::max({1.0, d1, hmax});
}

namespace {

void check_dual_system(const detail::LowerRows& rows, double bound) {
    auto solve_with = [&](double ub) {
        LpProblem p;
        for (std::size_t r = 0; r < rows.rows(); ++r) p.add_variable(0.0, ub, 0.0);
        for (std::size_t j = 0; j < rows.d2.size(); ++j) {
            std::vector<double> row(rows.rows());
            for (std::size_t r = 0; r < rows.rows(); ++r) row[r] = rows.B2(r, j);
            p.add_row(std::move(row), RowSense::Eq, rows.d2[j]);
        }
        return solve_lp(p).status == LpStatus::Optimal;
    };
    if (solve_with(bound)) return;
    if (!solve_with(kInf)) throw AssumptionViolation("no dual multipliers for the continuous follower block; lower level unbounded");
    throw AssumptionViolation("dual multipliers exceed the bound " + std::to_string(bound) + "; raise it");
}

}  // namespace

LearnedCutInfo learned_cut(const BilevelInstance& inst, const NeuralRule& rule, ModelBuilder& b,
                           const std::vector<std::size_t>& x_vars, const std::vector<std::size_t>& y_vars,
                           const LearnedCutOptions& opts) {
    if (rule.n_in() != inst.n_x || rule.n_out() != inst.n_b())
        throw MalformedProblem("rule shape does not match the instance");
    if (x_vars.size() != inst.n_x || y_vars.size() != inst.n_y) throw MalformedProblem("variable lists have wrong length");
    const auto rows = detail::split_lower(inst);
    LearnedCutInfo info;
    info.pi_bound = opts.pi_bound > 0.0 ? opts.pi_bound : default_pi_bound(inst);
    const double M = info.pi_bound;
    check_dual_system(rows, M);

    info.rule = encode_rule(rule, b, x_vars);
    const auto& yt = info.rule.outputs;
    for (std::size_t r = 0; r < rows.rows(); ++r) info.pi.push_back(b.add_var(0.0, M));
    for (std::size_t j = 0; j < rows.d2.size(); ++j) {
        std::vector<Term> row;
        for (std::size_t r = 0; r < rows.rows(); ++r)
            if (rows.B2(r, j) != 0.0) row.emplace_back(info.pi[r], rows.B2(r, j));
        b.add_row(std::move(row), RowSense::Eq, rows.d2[j]);
    }

    // pi_r * u for binary u, exact with pi in [0, M]
    auto product = [&](std::size_t pi, std::size_t u) {
        const std::size_t p = b.add_var(0.0, M);
        b.add_row({{p, 1.0}, {u, -M}}, RowSense::Le, 0.0);
        b.add_row({{p, 1.0}, {pi, -1.0}}, RowSense::Le, 0.0);
        b.add_row({{p, 1.0}, {pi, -1.0}, {u, -M}}, RowSense::Ge, -M);
        return p;
    };

    std::vector<Term> cut;
    for (std::size_t j = 0; j < inst.n_y; ++j)
        if (inst.d_l[j] != 0.0) cut.emplace_back(y_vars[j], inst.d_l[j]);
    for (std::size_t k = 0; k < inst.n_b(); ++k)
        if (rows.d1[k] != 0.0) cut.emplace_back(yt[k], -rows.d1[k]);
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        if (rows.h[r] != 0.0) cut.emplace_back(info.pi[r], -rows.h[r]);
        for (std::size_t k = 0; k < inst.n_x; ++k)
            if (rows.A(r, k) != 0.0) cut.emplace_back(product(info.pi[r], x_vars[k]), rows.A(r, k));
        for (std::size_t k = 0; k < inst.n_b(); ++k)
            if (rows.B1(r, k) != 0.0) cut.emplace_back(product(info.pi[r], yt[k]), rows.B1(r, k));
    }
    b.add_row(std::move(cut), RowSense::Ge, 0.0);
    return info;
}

double learned_cut_rhs(const BilevelInstance& inst, const NeuralRule& rule, std::span<const std::uint8_t> x,
                       const LearnedCutOptions& opts) {
    const auto rows = detail::split_lower(inst);
    const double M = opts.pi_bound > 0.0 ? opts.pi_bound : default_pi_bound(inst);
    const BinaryVector yt = evaluate_rule_pwl(rule, x);
    LpProblem p;
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        double slack = rows.h[r];
        for (std::size_t k = 0; k < inst.n_x; ++k) slack -= rows.A(r, k) * x[k];
        for (std::size_t k = 0; k < inst.n_b(); ++k) slack -= rows.B1(r, k) * yt[k];
        p.add_variable(0.0, M, slack);
    }
    for (std::size_t j = 0; j < rows.d2.size(); ++j) {
        std::vector<double> row(rows.rows());
        for (std::size_t r = 0; r < rows.rows(); ++r) row[r] = rows.B2(r, j);
        p.add_row(std::move(row), RowSense::Eq, rows.d2[j]);
    }
    const LpOutcome o = solve_lp(p);
    if (o.status != LpStatus::Optimal) throw AssumptionViolation("dual system of the learned cut has no solution");
    double v = o.objective;
    for (std::size_t k = 0; k < inst.n_b(); ++k) v += rows.d1[k] * yt[k];
    return v;
}

}  // namespace bilevel
