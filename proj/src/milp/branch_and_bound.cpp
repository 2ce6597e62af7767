#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <string>

#include "bilevel/common/error.hpp"
#include "bilevel/common/matrix.hpp"
#include "bilevel/common/tolerances.hpp"
#include "bilevel/milp/milp.hpp"

namespace bilevel {

const VarGroup* MilpProblem::group(const std::string& name) const {
    for (const auto& g : groups)
        if (g.name == name) return &g;
    return nullptr;
}

void MilpProblem::validate() const {
    lp.validate();
    if (integer.size() != lp.num_vars()) throw MalformedProblem("integrality flags do not match variable count");
    for (std::size_t j = 0; j < integer.size(); ++j)
        if (integer[j] && (!std::isfinite(lp.lower[j]) || !std::isfinite(lp.upper[j])))
            throw MalformedProblem("integer variable " + std::to_string(j) + " has an infinite bound");
    for (const auto& g : groups)
        if (g.begin + g.size > lp.num_vars()) throw MalformedProblem("group " + g.name + " out of range");
    if (!priority.empty() && priority.size() != lp.num_vars())
        throw MalformedProblem("branching priorities do not match variable count");
}

double CutRow::violation(std::span<const double> v) const {
    const double lhs = dot(coeffs, v);
    switch (sense) {
        case RowSense::Le: return lhs - rhs;
        case RowSense::Ge: return rhs - lhs;
        case RowSense::Eq: return std::abs(lhs - rhs);
    }
    return 0.0;
}

const char* to_string(MilpStatus s) {
    switch (s) {
        case MilpStatus::Optimal: return "optimal";
        case MilpStatus::Infeasible: return "infeasible";
        case MilpStatus::Unbounded: return "unbounded";
        case MilpStatus::NodeLimit: return "node_limit";
        case MilpStatus::TimeLimit: return "time_limit";
    }
    return "?";
}

namespace {

struct Node {
    double bound;  // minimization terms
    std::size_t depth;
    std::size_t id;
    std::vector<double> lo, hi;
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.id > b.id;
    }
};

}  // namespace

MilpOutcome solve_milp(const MilpProblem& p, const LazyCallback& callback, const MilpLimits& limits) {
    p.validate();
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const double flip = p.lp.sense == Sense::Maximize ? -1.0 : 1.0;
    const std::size_t n = p.num_vars();

    MilpOutcome out;
    LpProblem work = p.lp;  // grows with the global cut pool
    std::vector<CutRow> pool;

    double incumbent = kInf;  // minimization terms
    std::vector<double> best_x;

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    std::size_t next_id = 0;
    open.push(Node{-kInf, 0, next_id++, p.lp.lower, p.lp.upper});

    auto prune_limit = [&](double b) {
        return std::isfinite(incumbent) && b >= incumbent - Tolerances::milp_absolute_gap;
    };

    bool limit_hit = false;
    MilpStatus limit_status = MilpStatus::Optimal;
    double frontier_bound = kInf;  // best bound among nodes dropped by a limit

    while (!open.empty()) {
        if (limits.max_nodes && out.nodes >= limits.max_nodes) {
            limit_hit = true;
            limit_status = MilpStatus::NodeLimit;
            break;
        }
        if (limits.time_limit_s > 0.0 &&
            std::chrono::duration<double>(clock::now() - start).count() > limits.time_limit_s) {
            limit_hit = true;
            limit_status = MilpStatus::TimeLimit;
            break;
        }

        Node node = open.top();
        open.pop();
        if (prune_limit(node.bound)) continue;
        ++out.nodes;

        while (true) {
            work.lower = node.lo;
            work.upper = node.hi;
            const LpOutcome lp = solve_lp(work);
            ++out.lp_solves;
            if (lp.status == LpStatus::Infeasible) break;
            if (lp.status == LpStatus::Unbounded) {
                out.status = MilpStatus::Unbounded;
                out.bound = -flip * kInf;
                return out;
            }
            const double val = flip * lp.objective;
            if (prune_limit(val)) break;

            // Highest priority, then most fractional, then lowest index.
            std::size_t branch = n;
            double best_frac = Tolerances::integrality;
            int best_prio = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (!p.integer[j]) continue;
                const double f = lp.primal[j] - std::floor(lp.primal[j]);
                const double dist = std::min(f, 1.0 - f);
                if (dist <= Tolerances::integrality) continue;
                const int prio = p.priority.empty() ? 0 : p.priority[j];
                if (branch == n || prio > best_prio || (prio == best_prio && dist > best_frac)) {
                    best_frac = dist;
                    best_prio = prio;
                    branch = j;
                }
            }

            if (branch == n) {
                std::vector<double> x = lp.primal;
                for (std::size_t j = 0; j < n; ++j)
                    if (p.integer[j]) x[j] = std::round(x[j]);
                if (callback) {
                    ++out.callback_rounds;
                    LazyCutDecision dec = callback(x, lp.objective);
                    if (!dec.accept) {
                        if (dec.cuts.empty()) throw NumericalTrouble("callback rejected a candidate without cuts");
                        bool violated = false;
                        for (const auto& c : dec.cuts)
                            if (c.violation(x) > Tolerances::cut_violation) violated = true;
                        if (!violated)
                            throw NumericalTrouble("callback rejected a candidate that none of its cuts separates");
                        for (auto& c : dec.cuts) {
                            if (c.coeffs.size() != n) throw MalformedProblem("cut has wrong length");
                            work.add_row(c.coeffs, c.sense, c.rhs);
                            if (std::isfinite(incumbent) && c.violation(best_x) > Tolerances::cut_violation) {
                                incumbent = kInf;
                                best_x.clear();
                                out.incumbent_dropped = true;
                            }
                            pool.push_back(std::move(c));
                            ++out.cuts_added;
                        }
                        continue;  // re-solve this node with the new rows
                    }
                }
                incumbent = val;
                best_x = std::move(x);
                break;
            }

            const double v = lp.primal[branch];
            Node down{val, node.depth + 1, next_id++, node.lo, node.hi};
            down.hi[branch] = std::floor(v);
            Node up{val, node.depth + 1, next_id++, node.lo, node.hi};
            up.lo[branch] = std::ceil(v);
            open.push(std::move(down));
            open.push(std::move(up));
            break;
        }
    }

    double bound = incumbent;
    if (limit_hit) {
        while (!open.empty()) {
            frontier_bound = std::min(frontier_bound, open.top().bound);
            open.pop();
        }
        bound = std::min(bound, frontier_bound);
    }

    out.has_incumbent = std::isfinite(incumbent);
    if (out.has_incumbent) {
        out.x = best_x;
        out.objective = flip * incumbent;
        out.status = limit_hit ? limit_status : MilpStatus::Optimal;
    } else {
        out.status = limit_hit ? limit_status : MilpStatus::Infeasible;
    }
    if (std::isfinite(bound)) {
        out.bound = flip * bound;
        out.gap = out.has_incumbent ? std::max(0.0, incumbent - bound) / std::max(1.0, std::abs(incumbent)) : kInf;
    } else {
        out.bound = flip * bound;
        out.gap = out.has_incumbent ? kInf : 0.0;
    }
    if (!limit_hit) out.gap = 0.0;
    return out;
}

std::size_t ModelBuilder::add_var(double lo, double hi, double cost, bool integer) {
    cost_.push_back(cost);
    lo_.push_back(lo);
    hi_.push_back(hi);
    integer_.push_back(integer);
    priority_.push_back(0);
    return cost_.size() - 1;
}

void ModelBuilder::set_priority(std::size_t j, int priority) { priority_.at(j) = priority; }

void ModelBuilder::set_bounds(std::size_t j, double lo, double hi) {
    lo_.at(j) = lo;
    hi_.at(j) = hi;
}

void ModelBuilder::add_row(std::vector<Term> terms, RowSense s, double rhs) {
    for (const auto& t : terms)
        if (t.first >= cost_.size()) throw MalformedProblem("row references unknown variable");
    rows_.push_back(SparseRow{std::move(terms), s, rhs});
}

void ModelBuilder::add_group(std::string name, std::size_t begin, std::size_t size) {
    groups_.push_back(VarGroup{std::move(name), begin, size});
}

MilpProblem ModelBuilder::build() const {
    MilpProblem p;
    p.lp.sense = sense_;
    p.lp.objective = cost_;
    p.lp.lower = lo_;
    p.lp.upper = hi_;
    const std::size_t n = cost_.size();
    p.lp.rows.reserve(rows_.size());
    for (const auto& r : rows_) {
        std::vector<double> dense(n, 0.0);
        for (const auto& [j, a] : r.terms) dense[j] += a;
        p.lp.rows.push_back(std::move(dense));
        p.lp.row_senses.push_back(r.sense);
        p.lp.rhs.push_back(r.rhs);
    }
    p.integer = integer_;
    p.groups = groups_;
    if (std::any_of(priority_.begin(), priority_.end(), [](int v) { return v != 0; })) p.priority = priority_;
    return p;
}

}  // namespace bilevel
