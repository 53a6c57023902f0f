#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "pmto/box.hpp"
#include "pmto/random.hpp"

namespace pmto {

/// Latin hypercube sample of n points in the box (one row per point).
Eigen::MatrixXd latin_hypercube(Eigen::Index n, const Box& box, Rng& rng);

/// n Sobol points in the box, randomly shifted (Cranley-Patterson) by seed.
/// Rows are returned in generator order.
Eigen::MatrixXd sobol_points(Eigen::Index n, const Box& box, std::uint64_t seed);

}  // namespace pmto
