#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "pmto/box.hpp"

namespace pmto {

using Objective = std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& theta)>;

struct KnownOptimum {
  Eigen::VectorXd x;
  double value = 0.0;
};

/// A parameterized minimization problem f(x, θ) over a solution box and a task box.
struct ProblemSpec {
  std::string name;
  Box solution_bounds;
  Box task_bounds;
  Objective evaluate;
  /// Empty unless the per-task optimum is known in closed form.
  std::function<KnownOptimum(const Eigen::VectorXd&)> optimum;

  Eigen::Index solution_dim() const { return solution_bounds.dim(); }
  Eigen::Index task_dim() const { return task_bounds.dim(); }
  bool has_known_optimum() const { return static_cast<bool>(optimum); }
};

/// Throws Unsupported for problems without a closed-form optimum.
KnownOptimum known_optimum(const ProblemSpec& problem, const Eigen::VectorXd& theta);

// ------------------------------------------------------------------ synthetic

enum class BaseFunction { Sphere, Ackley, Rastrigin, Griewank };
enum class Nonlinearity { Sigma1, Sigma2 };

double sigma1(double v);
double sigma2(double v);
double base_function(BaseFunction base, const Eigen::VectorXd& z);

/// f(x, θ) = g(λ (x - σ(Lθ))) with x ∈ [0,1]^4, θ ∈ [0,1]^5.
struct SyntheticSpec {
  BaseFunction base = BaseFunction::Sphere;
  double lambda = 4.0;
  Eigen::MatrixXd L;
  Nonlinearity sigma = Nonlinearity::Sigma1;

  /// The 4×5 mixing matrix used by the whole suite.
  static Eigen::MatrixXd default_mixing();
  static SyntheticSpec standard(BaseFunction base, Nonlinearity sigma);

  /// σ(Lθ): the location of the per-task optimum.
  Eigen::VectorXd shift(const Eigen::VectorXd& theta) const;
};

double synthetic_evaluate(const SyntheticSpec& spec, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& theta);

// ------------------------------------------------------------------ robot arm

inline constexpr int kArmJoints = 3;

/// Planar 3-link arm, θ = (link length L, max joint angle α_max). Controls
/// x_i ∈ [0,1] map to α_i = α_max (2 x_i - 1); angles accumulate along the
/// chain. Returns the end-effector distance to (0.5, 0.5).
double robot_arm_evaluate(const Eigen::VectorXd& x, const Eigen::VectorXd& theta);

// ------------------------------------------------------------------ crane

struct CraneParams {
  double m1 = 4.2e4;
  double m2 = 1.0e4;
  double v = 0.7;
  double l = 6.5;
  double W = 0.0;  // resistance force; see table_one()
  double w = 1.0e6;
  double delta = 0.01;
  double f_min = 0.0;
  double f_max = 2.41e4;
  double g = 9.81;

  double omega() const;   // √(g(m1+m2)/(m1 l))
  double omega0() const;  // √(g/l)

  /// Nominal constants of the time-delay variant (W = 0.01 g (m1+m2)).
  static CraneParams table_one();
};

enum class CraneVariant { TimeDelay, OperatingConditions };

double crane_terminal_energy(const Eigen::Vector3d& t, const CraneParams& p);

/// 2E/(m2 v²) + (Σt) Ω/(2π), E = w·TE when TE ≥ Δ else 0.
double crane_objective(const Eigen::Vector3d& t, const CraneParams& p);

/// Time-delay variant: θ = (Δt1, Δt2, Δt3), switching times t + Δt.
/// Operating-conditions variant: θ = (l, m2, W).
double crane_evaluate(const Eigen::VectorXd& t, const Eigen::VectorXd& theta, CraneVariant variant,
                      const CraneParams& base = CraneParams::table_one());

// ------------------------------------------------------------------ truss

struct TrussSpec {
  double alpha1 = 10.0;
  double alpha2 = 1e-5;
  Box design = Box((Eigen::VectorXd(3) << 2.0, 2.0, 1.0).finished(),
                   (Eigen::VectorXd(3) << 100.0, 100.0, 3.0).finished());
  double error_fraction = 0.05;

  Box error_box() const;
  /// θ + x_frac · (θ_max - θ_min).
  Eigen::VectorXd operating(const Eigen::VectorXd& x_frac, const Eigen::VectorXd& theta) const;
};

/// α1 f1(p) + α2 f2(p) on operating parameters p. Throws InvalidArgument when
/// p1·p3 <= 0.
double truss_evaluate(const Eigen::VectorXd& x_frac, const Eigen::VectorXd& theta,
                      const TrussSpec& spec = {});

/// Version used inside optimization loops: operating bar area and height are
/// floored at kTrussMinOperating in the displacement term, so designs whose
/// perturbed bars collapse score as near-singular instead of throwing.
inline constexpr double kTrussMinOperating = 1e-6;
double truss_evaluate_guarded(const Eigen::VectorXd& x_frac, const Eigen::VectorXd& theta,
                              const TrussSpec& spec = {});

// ------------------------------------------------------------------ registry

/// Names: sphere-i, sphere-ii, ackley-i, ackley-ii, rastrigin-i, rastrigin-ii,
/// griewank-i, griewank-ii, robot-arm, crane-load-i, crane-load-ii, truss.
/// `overrides` may replace constants (e.g. {"lambda": 8} or {"m1": 4e4}).
ProblemSpec make_problem(const std::string& name, const nlohmann::json& overrides = {});

std::vector<std::string> problem_names();

}  // namespace pmto
