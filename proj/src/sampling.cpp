#include "pmto/sampling.hpp"

#include <numeric>
#include <vector>

#include <boost/random/sobol.hpp>

namespace pmto {

Eigen::MatrixXd latin_hypercube(Eigen::Index n, const Box& box, Rng& rng) {
  const Eigen::Index d = box.dim();
  Eigen::MatrixXd out(n, d);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    // Fisher-Yates with the portable generator.
    for (std::size_t i = perm.size(); i > 1; --i) {
      std::swap(perm[i - 1], perm[rng.index(i)]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + rng.uniform()) /
                       static_cast<double>(n);
      out(i, j) = box.lower[j] + u * (box.upper[j] - box.lower[j]);
    }
  }
  return out;
}

Eigen::MatrixXd sobol_points(Eigen::Index n, const Box& box, std::uint64_t seed) {
  const Eigen::Index d = box.dim();
  Eigen::MatrixXd out(n, d);
  if (n == 0 || d == 0) return out;

  Rng rng(seed);
  Eigen::VectorXd shift(d);
  for (Eigen::Index j = 0; j < d; ++j) shift[j] = rng.uniform();

  boost::random::sobol gen(static_cast<std::size_t>(d));
  // The first Sobol point is the origin; start from the second.
  gen.discard(static_cast<boost::uintmax_t>(d));
  const double scale = 1.0 / (static_cast<double>(gen.max()) + 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      double u = static_cast<double>(gen()) * scale + shift[j];
      if (u >= 1.0) u -= 1.0;
      out(i, j) = box.lower[j] + u * (box.upper[j] - box.lower[j]);
    }
  }
  return out;
}

}  // namespace pmto
