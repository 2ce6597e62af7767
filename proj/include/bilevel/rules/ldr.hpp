#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bilevel/common/binary.hpp"
#include "bilevel/common/matrix.hpp"
#include "bilevel/cuts/cut.hpp"
#include "bilevel/milp/milp.hpp"
#include "bilevel/model/instance.hpp"

namespace bilevel {

/// n_c x n_x, entry 1 fixes the matching entry of U to zero.
using LdrMask = std::vector<BinaryVector>;

/// Zeroes the columns of U for tenders that appear in no lower row.
LdrMask default_ldr_mask(const BilevelInstance& inst);
/// Nothing fixed.
LdrMask free_ldr_mask(const BilevelInstance& inst);

/// Affine follower rule y2 = U x + v (with y1 = y1_anchor) proving the cut.
struct LdrCertificate {
    std::vector<double> alpha;
    double beta = 0.0;
    Matrix U;
    std::vector<double> y2_anchor;  // v
    BinaryVector y1_anchor;
    LdrMask mask;
};

enum class Y1Mode { Fixed, Free };

struct LdrOptions {
    Y1Mode mode = Y1Mode::Fixed;
    /// Required in Fixed mode: usually the follower's binary block at x_hat.
    BinaryVector y1_hat;
    /// Empty selects default_ldr_mask.
    LdrMask mask;
    MilpLimits limits{20000, 0.0};
};

struct LdrResult {
    std::optional<Cut> cut;
    /// No affine rule with this mask (and y1) is feasible for every tender.
    bool omega_empty = false;
    double gamma = 0.0;  // best alpha'x_hat + beta
    double incumbent_value = 0.0;
    std::optional<LdrCertificate> certificate;
};

/// Maximizes alpha'x_hat + beta over affine-rule certificates; emits the cut
/// d_l'y >= alpha'x + beta when it beats d_l'y_hat by more than 1e-6.
LdrResult ldr_separate(const BilevelInstance& inst, std::span<const std::uint8_t> x_hat,
                       std::span<const double> y_hat, const LdrOptions& opts);

/// Largest violation of the certificate's defining rows (0 when it is a proof).
double ldr_certificate_violation(const BilevelInstance& inst, const LdrCertificate& cert);

}  // namespace bilevel
