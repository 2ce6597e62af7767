#pragma once

#include <span>
#include <string>
#include <vector>

#include "bilevel/common/binary.hpp"

namespace bilevel {

enum class CutFamily {
    Penalty,
    Lagrangian,
    Augmented,
    Submodular,
    Supermodular,
    QuasiLagrangian,
    QuasiSubmodular,
    QuasiSupermodular,
    Ldr,
};

const char* to_string(CutFamily f);
CutFamily cut_family_from_string(const std::string& s);

/// d_l'y >= alpha'x + beta
struct Cut {
    std::vector<double> alpha;
    double beta = 0.0;
    CutFamily family = CutFamily::Penalty;
    BinaryVector z;          // anchor tender
    std::string provenance;  // where the coefficients came from

    double rhs(std::span<const double> x) const;
    double rhs(std::span<const std::uint8_t> x) const;
};

}  // namespace bilevel
