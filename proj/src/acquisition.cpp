#include "pmto/acquisition.hpp"

#include <cmath>
#include <string>

#include "pmto/sampling.hpp"

namespace pmto {
namespace {

constexpr int kGoldenEvaluations = 8;
constexpr double kInitialRadius = 0.1;  // fraction of the box width
constexpr double kRadiusDecay = 0.75;

Eigen::VectorXd model_input(const Eigen::VectorXd& x, const std::optional<Eigen::VectorXd>& theta) {
  if (!theta) return x;
  Eigen::VectorXd z(x.size() + theta->size());
  z << x, *theta;
  return z;
}

void check_input_dim(const GpModel& model, Eigen::Index xdim,
                     const std::optional<Eigen::VectorXd>& theta) {
  const Eigen::Index want = xdim + (theta ? theta->size() : 0);
  if (want != model.dim()) {
    throw InvalidArgument("ucb: input dimension " + std::to_string(want) + " != model dimension " +
                          std::to_string(model.dim()));
  }
}

}  // namespace

void AcquisitionConfig::validate() const {
  if (!(beta >= 0.0)) throw InvalidArgument("AcquisitionConfig: beta must be >= 0");
  if (candidate_count < 1) throw InvalidArgument("AcquisitionConfig: candidate_count must be >= 1");
  if (refine_steps < 0) throw InvalidArgument("AcquisitionConfig: refine_steps must be >= 0");
}

double ucb_score(const GpModel& model, const Eigen::VectorXd& x,
                 const std::optional<Eigen::VectorXd>& theta, double beta) {
  check_input_dim(model, x.size(), theta);
  const Posterior p = model.predict(model_input(x, theta));
  return -p.mean + beta * std::sqrt(p.variance);
}

Eigen::VectorXd maximize_ucb(const GpModel& model, const std::optional<Eigen::VectorXd>& theta,
                             const Box& bounds, const AcquisitionConfig& cfg) {
  cfg.validate();
  check_input_dim(model, bounds.dim(), theta);
  const Eigen::Index dx = bounds.dim();

  const Eigen::MatrixXd cand = sobol_points(cfg.candidate_count, bounds, cfg.seed);
  Eigen::MatrixXd inputs(cand.rows(), model.dim());
  inputs.leftCols(dx) = cand;
  if (theta) inputs.rightCols(theta->size()) = theta->transpose().replicate(cand.rows(), 1);

  Eigen::VectorXd mean, var;
  model.predict_batch(inputs, mean, var);
  const Eigen::VectorXd score = -mean.array() + cfg.beta * var.array().sqrt();
  Eigen::Index best_idx = 0;
  for (Eigen::Index i = 1; i < score.size(); ++i) {
    if (score[i] > score[best_idx]) best_idx = i;  // strict: earliest candidate wins ties
  }
  Eigen::VectorXd best = cand.row(best_idx).transpose();
  double best_score = score[best_idx];

  auto eval = [&](const Eigen::VectorXd& x) { return ucb_score(model, x, theta, cfg.beta); };

  const Eigen::VectorXd width = bounds.width();
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double radius = kInitialRadius;
  for (int step = 0; step < cfg.refine_steps; ++step, radius *= kRadiusDecay) {
    for (Eigen::Index j = 0; j < dx; ++j) {
      if (width[j] <= 0.0) continue;
      double a = std::max(bounds.lower[j], best[j] - radius * width[j]);
      double b = std::min(bounds.upper[j], best[j] + radius * width[j]);
      Eigen::VectorXd probe = best;
      auto f = [&](double t) {
        probe[j] = t;
        return eval(probe);
      };
      double c = b - inv_phi * (b - a);
      double d = a + inv_phi * (b - a);
      double fc = f(c), fd = f(d);
      double arg = fc >= fd ? c : d, val = std::max(fc, fd);
      for (int k = 2; k < kGoldenEvaluations; ++k) {
        if (fc >= fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - inv_phi * (b - a);
          fc = f(c);
          if (fc > val) val = fc, arg = c;
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + inv_phi * (b - a);
          fd = f(d);
          if (fd > val) val = fd, arg = d;
        }
      }
      if (val > best_score) {
        best[j] = arg;
        best_score = val;
      }
    }
  }
  return bounds.clamp(best);
}

}  // namespace pmto
