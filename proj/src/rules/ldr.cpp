#include "bilevel/rules/ldr.hpp"

#include <algorithm>
#include <cmath>

#include "bilevel/common/error.hpp"
#include "bilevel/common/tolerances.hpp"
#include "lower_rows.hpp"

namespace bilevel {

LdrMask default_ldr_mask(const BilevelInstance& inst) {
    LdrMask mask(inst.n_c(), BinaryVector(inst.n_x, 0));
    for (std::size_t k = 0; k < inst.n_x; ++k) {
        bool used = false;
        for (std::size_t i = 0; i < inst.m_l(); ++i) used = used || inst.A_l(i, k) != 0.0;
        if (!used)
            for (auto& row : mask) row[k] = 1;
    }
    return mask;
}

LdrMask free_ldr_mask(const BilevelInstance& inst) { return LdrMask(inst.n_c(), BinaryVector(inst.n_x, 0)); }

namespace {

void check_mask(const BilevelInstance& inst, const LdrMask& mask) {
    if (mask.size() != inst.n_c()) throw MalformedProblem("decision-rule mask needs one row per continuous follower");
    for (const auto& r : mask)
        if (r.size() != inst.n_x) throw MalformedProblem("decision-rule mask row has wrong length");
}

}  // namespace

LdrResult ldr_separate(const BilevelInstance& inst, std::span<const std::uint8_t> x_hat,
                       std::span<const double> y_hat, const LdrOptions& opts) {
    if (x_hat.size() != inst.n_x) throw MalformedProblem("tender has wrong length");
    if (y_hat.size() != inst.n_y) throw MalformedProblem("follower vector has wrong length");
    const LdrMask mask = opts.mask.empty() ? default_ldr_mask(inst) : opts.mask;
    check_mask(inst, mask);
    const bool fixed = opts.mode == Y1Mode::Fixed;
    if (fixed && opts.y1_hat.size() != inst.n_b()) throw MalformedProblem("fixed y1 has wrong length");

    const auto rows = detail::split_lower(inst);
    const std::size_t n = inst.n_x, nb = inst.n_b(), nc = inst.n_c(), m = rows.rows();

    LdrResult res;
    for (std::size_t j = 0; j < inst.n_y; ++j) res.incumbent_value += inst.d_l[j] * y_hat[j];

    ModelBuilder b(Sense::Maximize);
    std::vector<std::size_t> y1(nb), v(nc), alpha(n), w(n);
    if (!fixed)
        for (auto& e : y1) e = b.add_binary();
    for (auto& e : v) e = b.add_var(-kInf, kInf);
    // U entries, npos where fixed to zero
    const std::size_t npos = static_cast<std::size_t>(-1);
    std::vector<std::vector<std::size_t>> U(nc, std::vector<std::size_t>(n, npos));
    for (std::size_t j = 0; j < nc; ++j)
        for (std::size_t k = 0; k < n; ++k)
            if (!mask[j][k]) U[j][k] = b.add_var(-kInf, kInf);
    for (std::size_t k = 0; k < n; ++k) alpha[k] = b.add_var(-kInf, kInf, x_hat[k] ? 1.0 : 0.0);
    for (auto& e : w) e = b.add_var(-kInf, 0.0);
    const std::size_t beta = b.add_var(-kInf, kInf, 1.0);

    for (std::size_t r = 0; r < m; ++r) {
        std::vector<Term> row;
        double rhs = rows.h[r];
        for (std::size_t k = 0; k < nb; ++k) {
            if (rows.B1(r, k) == 0.0) continue;
            if (fixed) rhs -= rows.B1(r, k) * opts.y1_hat[k];
            else row.emplace_back(y1[k], rows.B1(r, k));
        }
        for (std::size_t j = 0; j < nc; ++j)
            if (rows.B2(r, j) != 0.0) row.emplace_back(v[j], rows.B2(r, j));
        for (std::size_t k = 0; k < n; ++k) {
            // t >= (A + B2 U)_rk, t >= 0
            std::vector<Term> expr;
            for (std::size_t j = 0; j < nc; ++j)
                if (rows.B2(r, j) != 0.0 && U[j][k] != npos) expr.emplace_back(U[j][k], -rows.B2(r, j));
            if (expr.empty()) {
                rhs -= std::max(rows.A(r, k), 0.0);
                continue;
            }
            const std::size_t t = b.add_var(0.0, kInf);
            expr.emplace_back(t, 1.0);
            b.add_row(std::move(expr), RowSense::Ge, rows.A(r, k));
            row.emplace_back(t, 1.0);
        }
        b.add_row(std::move(row), RowSense::Le, rhs);
    }
    for (std::size_t k = 0; k < n; ++k) {
        // w <= (U'd2)_k - alpha_k
        std::vector<Term> row{{w[k], 1.0}, {alpha[k], 1.0}};
        for (std::size_t j = 0; j < nc; ++j)
            if (U[j][k] != npos && rows.d2[j] != 0.0) row.emplace_back(U[j][k], -rows.d2[j]);
        b.add_row(std::move(row), RowSense::Le, 0.0);
    }
    {
        std::vector<Term> row{{beta, 1.0}};
        double rhs = 0.0;
        for (std::size_t k = 0; k < nb; ++k) {
            if (fixed) rhs += rows.d1[k] * opts.y1_hat[k];
            else row.emplace_back(y1[k], -rows.d1[k]);
        }
        for (std::size_t j = 0; j < nc; ++j) row.emplace_back(v[j], -rows.d2[j]);
        for (std::size_t k = 0; k < n; ++k) row.emplace_back(w[k], -1.0);
        b.add_row(std::move(row), RowSense::Le, rhs);
    }

    const MilpOutcome out = solve_milp(b.build(), {}, opts.limits);
    if (out.status == MilpStatus::Unbounded) throw AssumptionViolation("decision-rule separation unbounded");
    if (!out.has_incumbent) {
        res.omega_empty = out.status == MilpStatus::Infeasible;
        return res;
    }

    // Canonical certificate: alpha = U'd2 and beta = d_l1'y1 + d_l2'v dominate
    // any other (alpha, beta) the solver picked for the same rule.
    LdrCertificate cert;
    cert.mask = mask;
    cert.U = Matrix(nc, n, 0.0);
    for (std::size_t j = 0; j < nc; ++j)
        for (std::size_t k = 0; k < n; ++k)
            if (U[j][k] != npos) cert.U(j, k) = out.x[U[j][k]];
    cert.y2_anchor.resize(nc);
    for (std::size_t j = 0; j < nc; ++j) cert.y2_anchor[j] = out.x[v[j]];
    cert.y1_anchor = fixed ? opts.y1_hat : BinaryVector(nb);
    if (!fixed)
        for (std::size_t k = 0; k < nb; ++k) cert.y1_anchor[k] = out.x[y1[k]] > 0.5;
    cert.alpha.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < nc; ++j) cert.alpha[k] += rows.d2[j] * cert.U(j, k);
    for (std::size_t k = 0; k < nb; ++k) cert.beta += rows.d1[k] * cert.y1_anchor[k];
    for (std::size_t j = 0; j < nc; ++j) cert.beta += rows.d2[j] * cert.y2_anchor[j];

    res.gamma = cert.beta;
    for (std::size_t k = 0; k < n; ++k) res.gamma += cert.alpha[k] * x_hat[k];
    if (res.gamma > res.incumbent_value + Tolerances::cut_violation) {
        Cut c;
        c.family = CutFamily::Ldr;
        c.z.assign(x_hat.begin(), x_hat.end());
        c.alpha = cert.alpha;
        c.beta = cert.beta;
        c.provenance = fixed ? "ldr_fixed_y1" : "ldr_free_y1";
        res.cut = std::move(c);
    }
    res.certificate = std::move(cert);
    return res;
}

double ldr_certificate_violation(const BilevelInstance& inst, const LdrCertificate& cert) {
    check_mask(inst, cert.mask);
    const auto rows = detail::split_lower(inst);
    const std::size_t n = inst.n_x, nb = inst.n_b(), nc = inst.n_c();
    if (cert.U.rows() != nc || cert.U.cols() != n || cert.y2_anchor.size() != nc || cert.y1_anchor.size() != nb ||
        cert.alpha.size() != n)
        throw MalformedProblem("certificate dimensions do not match the instance");
    double worst = 0.0;
    for (std::size_t j = 0; j < nc; ++j)
        for (std::size_t k = 0; k < n; ++k)
            if (cert.mask[j][k]) worst = std::max(worst, std::abs(cert.U(j, k)));
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        double lhs = 0.0;
        for (std::size_t k = 0; k < nb; ++k) lhs += rows.B1(r, k) * cert.y1_anchor[k];
        for (std::size_t j = 0; j < nc; ++j) lhs += rows.B2(r, j) * cert.y2_anchor[j];
        for (std::size_t k = 0; k < n; ++k) {
            double e = rows.A(r, k);
            for (std::size_t j = 0; j < nc; ++j) e += rows.B2(r, j) * cert.U(j, k);
            lhs += std::max(e, 0.0);
        }
        worst = std::max(worst, lhs - rows.h[r]);
    }
    double bound = 0.0;
    for (std::size_t k = 0; k < nb; ++k) bound += rows.d1[k] * cert.y1_anchor[k];
    for (std::size_t j = 0; j < nc; ++j) bound += rows.d2[j] * cert.y2_anchor[j];
    for (std::size_t k = 0; k < n; ++k) {
        double s = -cert.alpha[k];
        for (std::size_t j = 0; j < nc; ++j) s += rows.d2[j] * cert.U(j, k);
        bound += std::min(s, 0.0);
    }
    return std::max(worst, cert.beta - bound);
}

}  // namespace bilevel
