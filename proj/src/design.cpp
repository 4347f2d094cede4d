#include "proxsim/design.hpp"

#include "proxsim/error.hpp"
#include "proxsim/rng.hpp"

#include <numeric>
#include <set>
#include <vector>

namespace proxsim {

Eigen::MatrixXd latin_hypercube(const Domain& domain, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(Errc::invalid_config, "design size must be at least 1");
  Rng rng(seed);
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(domain.encoded_dim()));
  std::vector<std::size_t> perm(n);
  for (std::size_t v = 0; v < domain.inputs().size(); ++v) {
    const auto& spec = domain.inputs()[v];
    const auto off = static_cast<Eigen::Index>(domain.slot_offset(v));
    if (spec.kind == VariableKind::categorical) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        X(i, off + static_cast<Eigen::Index>(rng.below(spec.levels.size()))) = 1.0;
      }
      continue;
    }
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    const double width = *spec.upper - *spec.lower;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double s = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + rng.uniform()) /
                       static_cast<double>(n);
      X(i, off) = *spec.lower + s * width;
    }
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    EncodedPoint x = X.row(i).transpose();
    domain.round_integers(x);
    X.row(i) = x.transpose();
  }
  return X;
}

Eigen::MatrixXd initial_design(const Domain& domain, std::size_t n, std::uint64_t seed) {
  return latin_hypercube(domain, n, derive_seed(seed, Stream::design));
}

PredictionSet candidate_pool(DomainPtr domain, std::size_t n, std::uint64_t seed,
                             std::uint64_t iteration, const Eigen::MatrixXd* exclude) {
  const Eigen::MatrixXd raw =
      latin_hypercube(*domain, n, derive_seed(seed, Stream::pool, iteration));
  auto key = [](const Eigen::MatrixXd& M, Eigen::Index r) {
    std::vector<double> k(static_cast<std::size_t>(M.cols()));
    for (Eigen::Index c = 0; c < M.cols(); ++c) k[static_cast<std::size_t>(c)] = M(r, c);
    return k;
  };
  std::set<std::vector<double>> seen;
  if (exclude != nullptr) {
    for (Eigen::Index r = 0; r < exclude->rows(); ++r) seen.insert(key(*exclude, r));
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    if (seen.insert(key(raw, r)).second) keep.push_back(r);
  }
  PredictionSet pool{std::move(domain), Eigen::MatrixXd(static_cast<Eigen::Index>(keep.size()),
                                                        raw.cols())};
  for (std::size_t i = 0; i < keep.size(); ++i) {
    pool.X.row(static_cast<Eigen::Index>(i)) = raw.row(keep[i]);
  }
  return pool;
}

}  // namespace proxsim
