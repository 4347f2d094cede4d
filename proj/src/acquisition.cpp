#include "proxsim/acquisition.hpp"

#include "proxsim/error.hpp"
#include "proxsim/rng.hpp"

#include <cmath>
#include <numeric>
#include <optional>

namespace proxsim {

const char* to_string(Acquisition a) noexcept {
  return a == Acquisition::random ? "random" : "max_variance";
}

Selection acquire(const GPModel& model, const PredictionSet& pool, Acquisition criterion,
                  std::size_t k, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(pool.X.rows());
  if (n == 0) throw Error(Errc::empty_pool, "candidate pool is empty");
  if (k > n) {
    throw Error(Errc::batch_too_large, "batch of " + std::to_string(k) +
                                           " exceeds pool of " + std::to_string(n));
  }
  const PredictionBatch p = model.predict(pool.X);
  const Eigen::VectorXd score = p.variance.rowwise().sum();
  Selection sel;

  if (criterion == Acquisition::random) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(idx[i], idx[i + rng.below(n - i)]);
      sel.indices.push_back(idx[i]);
      sel.scores.push_back(score[static_cast<Eigen::Index>(idx[i])]);
    }
    return sel;
  }

  const Eigen::MatrixXd S = pool.domain->scale_rows(pool.X);
  const double radius =
      1.0 / std::pow(static_cast<double>(n), 1.0 / static_cast<double>(S.cols()));
  std::vector<bool> picked(n, false);
  std::vector<bool> excluded(n, false);
  for (std::size_t round = 0; round < k; ++round) {
    std::optional<std::size_t> best;
    std::optional<std::size_t> fallback;
    for (std::size_t i = 0; i < n; ++i) {
      if (picked[i]) continue;
      const double s = score[static_cast<Eigen::Index>(i)];
      if (!fallback || s > score[static_cast<Eigen::Index>(*fallback)]) fallback = i;
      if (excluded[i]) continue;
      if (!best || s > score[static_cast<Eigen::Index>(*best)]) best = i;
    }
    const std::size_t pick = best ? *best : *fallback;
    picked[pick] = true;
    sel.indices.push_back(pick);
    sel.scores.push_back(score[static_cast<Eigen::Index>(pick)]);
    const auto row = S.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i) {
      if (!excluded[i] && (S.row(static_cast<Eigen::Index>(i)) - row).norm() <= radius) {
        excluded[i] = true;
      }
    }
  }
  return sel;
}

}  // namespace proxsim
