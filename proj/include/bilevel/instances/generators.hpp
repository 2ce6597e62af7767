#pragma once

#include <cstdint>
#include <vector>

#include "bilevel/model/instance.hpp"

namespace bilevel {

struct GeneralGenConfig {
    std::size_t n_x = 10;
    double ny_ratio = 1.0;
    double constraint_ratio = 0.4;
    double bin_ratio = 0.5;
    double sparsity = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Random bilevel MILP: c_u, d_u, d_l ~ U[-50,50]; A, B ~ U[0,10];
/// h_u ~ U[30,130]; h_l ~ U[10,110]; continuous y in [0,1].
/// Each lower-level coefficient is zeroed with probability `sparsity`.
BilevelInstance gen_general(const GeneralGenConfig& cfg);

struct FacilityGenConfig {
    std::size_t n = 3;
    std::uint64_t seed = 0;
    std::size_t max_draws = 1000;

    std::size_t customers() const { return 10 * n; }
    std::size_t budget() const;  // round(n/3), halves away from zero
};

/// Raw data behind a facility interdiction instance.
struct FacilityData {
    std::size_t n = 0, m = 0, budget = 0;
    std::vector<double> demand;        // m
    std::vector<double> capacity;      // n, C
    std::vector<double> repair_cap;    // n, C' = C * B / n
    std::vector<std::vector<double>> transport;  // n x m, c_t
    std::vector<double> repair_cost;   // n, c_r
    double unmet_penalty = 10.0;
    std::size_t draws = 0;             // capacity draws used
};

/// Draws data and resamples capacities until the three nontriviality
/// conditions hold. Throws Error naming the condition still failing after
/// `max_draws` draws.
FacilityData gen_facility_data(const FacilityGenConfig& cfg);

/// Interdiction model: x_i = 0 means facility i is attacked; at most B
/// attacks. y = [repair (n), flow (n*m, index n + i*m + j)].
BilevelInstance facility_instance(const FacilityData& data);

BilevelInstance gen_facility(const FacilityGenConfig& cfg);

/// Which of the three conditions hold for `data` (index 0..2).
std::vector<bool> facility_conditions(const FacilityData& data);

}  // namespace bilevel
