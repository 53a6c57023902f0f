#pragma once

#include <Eigen/Core>

#include "pmto/errors.hpp"

namespace pmto {

/// Axis-aligned box [lower, upper] in R^d.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Box() = default;
  Box(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size()) throw InvalidArgument("Box: bound dimensions differ");
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      if (!(upper[i] >= lower[i])) throw InvalidArgument("Box: upper < lower");
    }
  }

  static Box unit(Eigen::Index dim) {
    return Box(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
  }

  Eigen::Index dim() const { return lower.size(); }
  Eigen::VectorXd width() const { return upper - lower; }

  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const {
    if (x.size() != dim()) return false;
    return ((x.array() >= lower.array() - tol) && (x.array() <= upper.array() + tol)).all();
  }

  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
  }

  /// Maps a point of [0,1]^d into the box.
  Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const {
    return lower + u.cwiseProduct(width());
  }

  /// Affine map to [0,1]^d; degenerate dimensions map to 0.
  Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) {
      const double w = upper[i] - lower[i];
      out[i] = w > 0.0 ? (x[i] - lower[i]) / w : 0.0;
    }
    return out;
  }

  /// Concatenation of two boxes (solution block followed by task block).
  static Box concat(const Box& a, const Box& b) {
    Eigen::VectorXd lo(a.dim() + b.dim()), hi(a.dim() + b.dim());
    lo << a.lower, b.lower;
    hi << a.upper, b.upper;
    return Box(lo, hi);
  }
};

}  // namespace pmto
