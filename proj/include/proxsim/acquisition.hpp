#pragma once

#include "proxsim/gp.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace proxsim {

enum class Acquisition { max_variance, random };

const char* to_string(Acquisition a) noexcept;

struct Selection {
  std::vector<std::size_t> indices;  // pool rows, in pick order
  std::vector<double> scores;        // summed posterior variance of each pick
};

/// Picks `k` pool points.
///
/// max_variance: greedy argmax of the posterior variance summed over outputs,
/// ties to the lowest pool index. After each pick, pool points within
/// 1 / |pool|^(1/D) (Euclidean, scaled space) of any pick are skipped; if
/// that leaves nothing, the best unpicked point is taken.
///
/// random: uniform without replacement from `seed`.
Selection acquire(const GPModel& model, const PredictionSet& pool, Acquisition criterion,
                  std::size_t k, std::uint64_t seed = 0);

}  // namespace proxsim
