#include "bilevel/cuts/cut.hpp"

#include "bilevel/common/error.hpp"
#include "bilevel/common/matrix.hpp"

namespace bilevel {

const char* to_string(CutFamily f) {
    switch (f) {
        case CutFamily::Penalty: return "penalty";
        case CutFamily::Lagrangian: return "lagrangian";
        case CutFamily::Augmented: return "augmented";
        case CutFamily::Submodular: return "submodular";
        case CutFamily::Supermodular: return "supermodular";
        case CutFamily::QuasiLagrangian: return "quasi_lagrangian";
        case CutFamily::QuasiSubmodular: return "quasi_submodular";
        case CutFamily::QuasiSupermodular: return "quasi_supermodular";
        case CutFamily::Ldr: return "ldr";
    }
    return "?";
}

CutFamily cut_family_from_string(const std::string& s) {
    for (auto f : {CutFamily::Penalty, CutFamily::Lagrangian, CutFamily::Augmented, CutFamily::Submodular,
                   CutFamily::Supermodular, CutFamily::QuasiLagrangian, CutFamily::QuasiSubmodular,
                   CutFamily::QuasiSupermodular, CutFamily::Ldr})
        if (s == to_string(f)) return f;
    throw Error("unknown cut family '" + s + "'");
}

double Cut::rhs(std::span<const double> x) const {
    if (x.size() != alpha.size()) throw MalformedProblem("cut evaluated at a point of wrong length");
    return dot(alpha, x) + beta;
}

double Cut::rhs(std::span<const std::uint8_t> x) const {
    if (x.size() != alpha.size()) throw MalformedProblem("cut evaluated at a point of wrong length");
    double s = beta;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i]) s += alpha[i];
    return s;
}

}  // namespace bilevel
