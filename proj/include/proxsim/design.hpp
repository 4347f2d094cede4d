#pragma once

#include "proxsim/domain.hpp"

#include <cstdint>

namespace proxsim {

/// Latin hypercube sample of n encoded points (rows, raw units). Every numeric
/// input is stratified into n equal bins with one point per bin; integer
/// inputs are then rounded; categorical inputs draw a level uniformly.
Eigen::MatrixXd latin_hypercube(const Domain& domain, std::size_t n, std::uint64_t seed);

/// Initial design for a campaign seeded from `seed` on the design stream.
Eigen::MatrixXd initial_design(const Domain& domain, std::size_t n, std::uint64_t seed);

/// Fresh candidate pool for `iteration`, drawn on the pool stream. Exact
/// duplicates of each other and of the rows in `exclude` are removed, so the
/// pool can come out slightly smaller than n.
PredictionSet candidate_pool(DomainPtr domain, std::size_t n, std::uint64_t seed,
                             std::uint64_t iteration,
                             const Eigen::MatrixXd* exclude = nullptr);

}  // namespace proxsim
