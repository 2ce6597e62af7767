// Dense bounded-variable primal simplex on a full tableau.
//
// Column layout: [structural 0..n) [slack n..n+m) [artificial n+m..n+2m).
// Row i reads a_i'x + s_i + sgn_i * r_i = b_i, with the slack bounds encoding
// the row sense. Phase 1 minimizes the artificials; phase 2 drops their
// columns from the active width. Because the slack columns start as the
// identity, the slack block of the tableau is B^-1 at all times, which gives
// the duals and a drift-free recomputation of the basic values.

#include <algorithm>
#include <cmath>
#include <string>

#include "bilevel/common/error.hpp"
#include "bilevel/common/matrix.hpp"
#include "bilevel/common/tolerances.hpp"
#include "bilevel/kernels/kernels.hpp"
#include "bilevel/lp/lp.hpp"

namespace bilevel {

std::size_t LpProblem::add_variable(double lo, double hi, double cost) {
    objective.push_back(cost);
    lower.push_back(lo);
    upper.push_back(hi);
    for (auto& r : rows) r.push_back(0.0);
    return objective.size() - 1;
}

std::size_t LpProblem::add_row(std::vector<double> coeffs, RowSense s, double b) {
    if (coeffs.size() > num_vars()) throw MalformedProblem("row longer than variable count");
    coeffs.resize(num_vars(), 0.0);
    rows.push_back(std::move(coeffs));
    row_senses.push_back(s);
    rhs.push_back(b);
    return rows.size() - 1;
}

void LpProblem::validate() const {
    const std::size_t n = num_vars();
    if (lower.size() != n || upper.size() != n)
        throw MalformedProblem("bound vectors do not match objective length");
    if (row_senses.size() != rows.size() || rhs.size() != rows.size())
        throw MalformedProblem("row count, sense count and rhs length differ");
    for (std::size_t j = 0; j < n; ++j) {
        if (std::isnan(objective[j]) || !std::isfinite(objective[j]))
            throw MalformedProblem("objective entry " + std::to_string(j) + " is not finite");
        if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j] || lower[j] == kInf ||
            upper[j] == -kInf)
            throw MalformedProblem("bad bounds on variable " + std::to_string(j));
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != n) throw MalformedProblem("row " + std::to_string(i) + " has wrong length");
        if (!std::isfinite(rhs[i])) throw MalformedProblem("rhs " + std::to_string(i) + " is not finite");
        for (double a : rows[i])
            if (!std::isfinite(a)) throw MalformedProblem("row " + std::to_string(i) + " has a non-finite entry");
    }
}

const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
    }
    return "?";
}

double max_violation(const LpProblem& p, std::span<const double> x) {
    double worst = 0.0;
    for (std::size_t j = 0; j < p.num_vars(); ++j) {
        worst = std::max(worst, p.lower[j] - x[j]);
        worst = std::max(worst, x[j] - p.upper[j]);
    }
    for (std::size_t i = 0; i < p.num_rows(); ++i) {
        const double lhs = dot(p.rows[i], x);
        switch (p.row_senses[i]) {
            case RowSense::Le: worst = std::max(worst, lhs - p.rhs[i]); break;
            case RowSense::Ge: worst = std::max(worst, p.rhs[i] - lhs); break;
            case RowSense::Eq: worst = std::max(worst, std::abs(lhs - p.rhs[i])); break;
        }
    }
    return worst;
}

namespace {

enum class VarState : unsigned char { Basic, AtLower, AtUpper, FreeZero };

class Tableau {
public:
    Tableau(const LpProblem& p, const LpOptions& opts)
        : p_(p), m_(p.num_rows()), n_(p.num_vars()), cols_(n_ + 2 * m_), width_(cols_),
          t_(m_ * cols_, 0.0), d_(cols_, 0.0), cost_(cols_, 0.0), lo_(cols_), up_(cols_), x_(cols_, 0.0),
          state_(cols_, VarState::AtLower), basis_(m_), sign_(m_, 1.0), bland_(opts.bland_from_start) {
        max_iter_ = opts.max_iterations ? opts.max_iterations : 200 * (m_ + cols_) + 10000;
        degenerate_cap_ = 3 * (m_ + n_);
        for (std::size_t j = 0; j < n_; ++j) {
            lo_[j] = p.lower[j];
            up_[j] = p.upper[j];
            if (std::isfinite(lo_[j])) {
                x_[j] = lo_[j];
                state_[j] = VarState::AtLower;
            } else if (std::isfinite(up_[j])) {
                x_[j] = up_[j];
                state_[j] = VarState::AtUpper;
            } else {
                x_[j] = 0.0;
                state_[j] = VarState::FreeZero;
            }
        }
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t s = n_ + i;
            switch (p.row_senses[i]) {
                case RowSense::Le: lo_[s] = 0.0; up_[s] = kInf; break;
                case RowSense::Ge: lo_[s] = -kInf; up_[s] = 0.0; break;
                case RowSense::Eq: lo_[s] = 0.0; up_[s] = 0.0; break;
            }
            x_[s] = 0.0;
            state_[s] = p.row_senses[i] == RowSense::Ge ? VarState::AtUpper : VarState::AtLower;

            double resid = p.rhs[i];
            for (std::size_t j = 0; j < n_; ++j) resid -= p.rows[i][j] * x_[j];
            sign_[i] = resid >= 0.0 ? 1.0 : -1.0;

            const std::size_t a = n_ + m_ + i;
            lo_[a] = 0.0;
            up_[a] = kInf;
            x_[a] = std::abs(resid);
            state_[a] = VarState::Basic;
            basis_[i] = a;

            // Row of B^-1 A with B = diag(sign).
            double* row = &t_[i * cols_];
            for (std::size_t j = 0; j < n_; ++j) row[j] = sign_[i] * p.rows[i][j];
            row[s] = sign_[i];
            row[a] = 1.0;
        }
    }

    LpOutcome run() {
        LpOutcome out;

        // Phase 1
        std::fill(cost_.begin(), cost_.end(), 0.0);
        for (std::size_t i = 0; i < m_; ++i) cost_[n_ + m_ + i] = 1.0;
        reprice();
        if (iterate() == Step::Unbounded) throw NumericalTrouble("phase 1 reported unbounded");

        double infeas = 0.0;
        double scale = 1.0;
        for (std::size_t i = 0; i < m_; ++i) {
            infeas += x_[n_ + m_ + i];
            scale = std::max(scale, std::abs(p_.rhs[i]));
        }
        out.iterations = iterations_;
        if (infeas > Tolerances::feasibility * scale) {
            out.status = LpStatus::Infeasible;
            out.bland_engaged = bland_;
            return out;
        }
        expel_artificials();

        // Phase 2
        std::fill(cost_.begin(), cost_.end(), 0.0);
        const double flip = p_.sense == Sense::Maximize ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n_; ++j) cost_[j] = flip * p_.objective[j];
        reprice();
        const Step st = iterate();
        out.iterations = iterations_;
        out.bland_engaged = bland_;
        if (st == Step::Unbounded) {
            out.status = LpStatus::Unbounded;
            return out;
        }

        recompute_basics();
        reprice();

        out.status = LpStatus::Optimal;
        out.primal.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
        for (std::size_t j = 0; j < n_; ++j) {
            if (std::isfinite(lo_[j]) && out.primal[j] < lo_[j]) out.primal[j] = lo_[j];
            if (std::isfinite(up_[j]) && out.primal[j] > up_[j]) out.primal[j] = up_[j];
        }
        out.objective = 0.0;
        for (std::size_t j = 0; j < n_; ++j) out.objective += p_.objective[j] * out.primal[j];
        out.duals.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) out.duals[i] = -flip * d_[n_ + i];
        out.reduced_costs.resize(n_);
        for (std::size_t j = 0; j < n_; ++j) out.reduced_costs[j] = flip * d_[j];
        return out;
    }

private:
    enum class Step { Optimal, Unbounded };

    double* row(std::size_t i) { return &t_[i * cols_]; }

    void reprice() {
        for (std::size_t j = 0; j < width_; ++j) d_[j] = cost_[j];
        for (std::size_t i = 0; i < m_; ++i) {
            const double cb = cost_[basis_[i]];
            if (cb != 0.0) kernels::axpy({d_.data(), width_}, -cb, {row(i), width_});
        }
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < width_) d_[basis_[i]] = 0.0;
    }

    bool movable(std::size_t j) const {
        return state_[j] != VarState::Basic && lo_[j] != up_[j];
    }

    // Returns the entering column and its direction, or cols_ if optimal.
    std::size_t price(double& dir) const {
        const double eps = Tolerances::optimality;
        std::size_t best = cols_;
        double best_score = 0.0;
        for (std::size_t j = 0; j < width_; ++j) {
            if (!movable(j)) continue;
            double score = 0.0;
            double dj_dir = 0.0;
            switch (state_[j]) {
                case VarState::AtLower:
                    if (d_[j] < -eps) { score = -d_[j]; dj_dir = 1.0; }
                    break;
                case VarState::AtUpper:
                    if (d_[j] > eps) { score = d_[j]; dj_dir = -1.0; }
                    break;
                case VarState::FreeZero:
                    if (std::abs(d_[j]) > eps) { score = std::abs(d_[j]); dj_dir = d_[j] < 0 ? 1.0 : -1.0; }
                    break;
                case VarState::Basic:
                    break;
            }
            if (score == 0.0) continue;
            if (bland_) {
                dir = dj_dir;
                return j;
            }
            if (score > best_score) {
                best_score = score;
                best = j;
                dir = dj_dir;
            }
        }
        return best;
    }

    Step iterate() {
        while (true) {
            if (iterations_ >= max_iter_) throw NumericalTrouble("simplex iteration limit reached");
            double dir = 0.0;
            const std::size_t j = price(dir);
            if (j == cols_) return Step::Optimal;
            ++iterations_;

            // Ratio test over basic variables plus the entering variable's own range.
            double theta = (std::isfinite(lo_[j]) && std::isfinite(up_[j])) ? up_[j] - lo_[j] : kInf;
            std::size_t leave_row = m_;
            double leave_pivot = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                const double alpha = t_[i * cols_ + j];
                if (std::abs(alpha) <= Tolerances::pivot) continue;
                const double delta = -dir * alpha;
                const std::size_t b = basis_[i];
                double ti;
                if (delta < 0.0) {
                    if (!std::isfinite(lo_[b])) continue;
                    ti = (x_[b] - lo_[b]) / -delta;
                } else {
                    if (!std::isfinite(up_[b])) continue;
                    ti = (up_[b] - x_[b]) / delta;
                }
                ti = std::max(ti, 0.0);
                bool take = false;
                if (ti < theta - 1e-12) {
                    take = true;
                } else if (ti <= theta + 1e-12 && leave_row < m_) {
                    if (bland_) take = b < basis_[leave_row];
                    else take = std::abs(alpha) > std::abs(leave_pivot);
                } else if (ti <= theta + 1e-12 && leave_row == m_ && ti < theta) {
                    take = true;
                }
                if (take) {
                    theta = ti;
                    leave_row = i;
                    leave_pivot = alpha;
                }
            }
            if (!std::isfinite(theta)) return Step::Unbounded;

            if (theta <= 1e-12) {
                if (++degenerate_ > degenerate_cap_) bland_ = true;
            }

            // Move along the edge.
            if (theta > 0.0) {
                for (std::size_t i = 0; i < m_; ++i) {
                    const double alpha = t_[i * cols_ + j];
                    if (alpha != 0.0) x_[basis_[i]] -= dir * alpha * theta;
                }
            }

            if (leave_row == m_) {
                // Bound flip, basis unchanged.
                if (dir > 0) {
                    x_[j] = up_[j];
                    state_[j] = VarState::AtUpper;
                } else {
                    x_[j] = lo_[j];
                    state_[j] = VarState::AtLower;
                }
                continue;
            }

            x_[j] += dir * theta;
            const std::size_t b = basis_[leave_row];
            const double delta = -dir * leave_pivot;
            if (delta < 0.0) {
                x_[b] = lo_[b];
                state_[b] = VarState::AtLower;
            } else {
                x_[b] = up_[b];
                state_[b] = VarState::AtUpper;
            }
            pivot(leave_row, j);
        }
    }

    void pivot(std::size_t r, std::size_t j) {
        double* pr = row(r);
        const double piv = pr[j];
        kernels::divide({pr, width_}, piv);
        pr[j] = 1.0;
        const std::span<const double> src(pr, width_);
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r) continue;
            double* ri = row(i);
            const double f = ri[j];
            if (f == 0.0) continue;
            kernels::axpy({ri, width_}, -f, src);
            ri[j] = 0.0;
        }
        const double fd = d_[j];
        if (fd != 0.0) kernels::axpy({d_.data(), width_}, -fd, src);
        d_[j] = 0.0;

        state_[basis_[r]] = state_[basis_[r]] == VarState::Basic ? VarState::AtLower : state_[basis_[r]];
        basis_[r] = j;
        state_[j] = VarState::Basic;
    }

    // Pivot basic artificials (all at zero after a feasible phase 1) onto
    // structural or slack columns. Rows with nothing to pivot on are
    // redundant; their artificial stays basic, pinned to [0,0].
    void expel_artificials() {
        const std::size_t keep = n_ + m_;
        for (std::size_t r = 0; r < m_; ++r) {
            if (basis_[r] < keep) continue;
            const double* pr = &t_[r * cols_];
            std::size_t best = cols_;
            double best_abs = 1e-7;
            for (std::size_t j = 0; j < keep; ++j) {
                if (state_[j] == VarState::Basic) continue;
                if (std::abs(pr[j]) > best_abs) {
                    best_abs = std::abs(pr[j]);
                    best = j;
                }
            }
            const std::size_t a = basis_[r];
            if (best == cols_) {
                up_[a] = 0.0;
                continue;
            }
            x_[a] = 0.0;
            pivot(r, best);
            state_[a] = VarState::AtLower;
        }
        for (std::size_t a = keep; a < cols_; ++a) {
            up_[a] = 0.0;
            if (state_[a] != VarState::Basic) x_[a] = 0.0;
        }
        width_ = keep;
    }

    // x_B = B^-1 (b - N x_N); the slack block of the tableau holds B^-1.
    void recompute_basics() {
        std::vector<double> r(p_.rhs);
        for (std::size_t k = 0; k < m_; ++k) {
            for (std::size_t j = 0; j < n_; ++j)
                if (state_[j] != VarState::Basic && x_[j] != 0.0) r[k] -= p_.rows[k][j] * x_[j];
            if (state_[n_ + k] != VarState::Basic) r[k] -= x_[n_ + k];
        }
        for (std::size_t i = 0; i < m_; ++i) {
            const double* pr = &t_[i * cols_ + n_];
            x_[basis_[i]] = kernels::dot({pr, m_}, r);
        }
    }

    const LpProblem& p_;
    std::size_t m_, n_, cols_, width_;
    std::vector<double> t_, d_, cost_, lo_, up_, x_;
    std::vector<VarState> state_;
    std::vector<std::size_t> basis_;
    std::vector<double> sign_;
    bool bland_;
    std::size_t iterations_ = 0;
    std::size_t degenerate_ = 0;
    std::size_t degenerate_cap_ = 0;
    std::size_t max_iter_ = 0;
};

}  // namespace

LpOutcome solve_lp(const LpProblem& p, const LpOptions& opts) {
    p.validate();
    Tableau t(p, opts);
    return t.run();
}

}  // namespace bilevel
