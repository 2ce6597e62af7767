#include <algorithm>
#include <cmath>

#include "bilevel/common/error.hpp"
#include "bilevel/driver/driver.hpp"

namespace bilevel {

const char* to_string(CoeffMode m) {
    switch (m) {
        case CoeffMode::Exact: return "exact";
        case CoeffMode::Quick: return "quick";
        case CoeffMode::ClosedForm: return "closed_form";
    }
    return "?";
}

const char* to_string(BilevelStatus s) {
    switch (s) {
        case BilevelStatus::Optimal: return "optimal";
        case BilevelStatus::Infeasible: return "infeasible";
        case BilevelStatus::Limit: return "limit";
    }
    return "?";
}

bool Strategy::uses_coefficients() const {
    return family == CutFamily::Penalty || family == CutFamily::Lagrangian || family == CutFamily::Augmented;
}

void Strategy::validate(const BilevelInstance& inst) const {
    if (family == CutFamily::Ldr) throw MalformedProblem("ldr is an extra, not a cut family");
    if (learned_replace && (ldr || learned_augment))
        throw MalformedProblem("learned_replace takes no extras");
    if (uses_coefficients() && coeffs == CoeffMode::ClosedForm && !kind)
        throw MalformedProblem("closed_form coefficients need a modularity kind (sub or super)");
    const bool quasi = family == CutFamily::QuasiLagrangian || family == CutFamily::QuasiSubmodular ||
                       family == CutFamily::QuasiSupermodular;
    if (!learned_replace && quasi && inst.n_b() == 0)
        throw AssumptionViolation(std::string(bilevel::to_string(family)) + " needs binary follower variables");
}

std::string Strategy::name() const {
    if (learned_replace) return "learned_replace";
    std::string s = bilevel::to_string(family);
    if (uses_coefficients()) {
        if (coeffs == CoeffMode::ClosedForm)
            s += kind == ModularityKind::Super ? "/closed-super" : "/closed-sub";
        else
            s += std::string("/") + to_string(coeffs);
    } else if (family == CutFamily::QuasiLagrangian) {
        s += kind == ModularityKind::Super ? "/super" : "/sub";
    }
    if (ldr) s += "+ldr";
    if (learned_augment) s += "+learned";
    return s;
}

Strategy Strategy::parse(const std::string& text) {
    Strategy st;
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto p = text.find('+', start);
        parts.push_back(text.substr(start, p == std::string::npos ? std::string::npos : p - start));
        if (p == std::string::npos) break;
        start = p + 1;
    }
    std::string base = parts[0], mode;
    if (auto slash = base.find('/'); slash != std::string::npos) {
        mode = base.substr(slash + 1);
        base = base.substr(0, slash);
    }
    for (auto& c : base)
        if (c == '-') c = '_';
    if (base == "learned_replace") {
        st.learned_replace = true;
        if (!mode.empty()) throw MalformedProblem("learned_replace takes no coefficient mode");
    } else {
        try {
            st.family = cut_family_from_string(base);
        } catch (const Error&) {
            throw MalformedProblem("unknown strategy '" + text + "'");
        }
        if (st.family == CutFamily::QuasiLagrangian) {
            if (mode == "super") st.kind = ModularityKind::Super;
            else if (mode.empty() || mode == "sub") st.kind = ModularityKind::Sub;
            else throw MalformedProblem("quasi_lagrangian mode must be sub or super, got '" + mode + "'");
        } else if (st.uses_coefficients()) {
            if (mode.empty() || mode == "exact") st.coeffs = CoeffMode::Exact;
            else if (mode == "quick") st.coeffs = CoeffMode::Quick;
            else if (mode == "closed-sub" || mode == "closed_sub") {
                st.coeffs = CoeffMode::ClosedForm;
                st.kind = ModularityKind::Sub;
            } else if (mode == "closed-super" || mode == "closed_super") {
                st.coeffs = CoeffMode::ClosedForm;
                st.kind = ModularityKind::Super;
            } else {
                throw MalformedProblem("unknown coefficient mode '" + mode + "'");
            }
        } else if (!mode.empty()) {
            throw MalformedProblem(base + " takes no coefficient mode");
        }
    }
    for (std::size_t i = 1; i < parts.size(); ++i) {
        if (parts[i] == "ldr") st.ldr = true;
        else if (parts[i] == "learned") st.learned_augment = true;
        else throw MalformedProblem("unknown extra '" + parts[i] + "'");
    }
    if (st.learned_replace && (st.ldr || st.learned_augment)) throw MalformedProblem("learned_replace takes no extras");
    return st;
}

double relative_gap(double objective, double bound) {
    return (objective - bound) / std::max(1.0, std::abs(objective));
}

Cut CutRecord::as_cut() const {
    Cut c;
    c.alpha = alpha;
    c.beta = beta;
    c.family = family;
    c.z = z;
    c.provenance = provenance;
    return c;
}

}  // namespace bilevel
