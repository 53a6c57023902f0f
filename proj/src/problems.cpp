#include "pmto/problems.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <initializer_list>
#include <sstream>
#include <stdexcept>

#include "pmto/errors.hpp"

namespace pmto {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

void require_dim(const Eigen::VectorXd& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw InvalidArgument(std::string(what) + ": expected dimension " + std::to_string(n) +
                          ", got " + std::to_string(v.size()));
  }
}

double get_or(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) {
    throw InvalidConfig(std::string("problem override '") + key + "' must be a number");
  }
  return j.at(key).get<double>();
}

void check_override_keys(const nlohmann::json& o, std::initializer_list<const char*> allowed,
                         const std::string& problem) {
  if (!o.is_object()) throw InvalidConfig("problem overrides must be an object");
  for (auto it = o.begin(); it != o.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) {
      throw InvalidConfig("unknown override '" + it.key() + "' for problem '" + problem + "'");
    }
  }
}

}  // namespace

KnownOptimum known_optimum(const ProblemSpec& problem, const Eigen::VectorXd& theta) {
  if (!problem.has_known_optimum()) {
    throw Unsupported("known_optimum: problem '" + problem.name + "' has no closed-form optimum");
  }
  return problem.optimum(theta);
}

// ------------------------------------------------------------------ synthetic

double sigma1(double v) { return (std::sin(5.0 * (v + 0.5)) + 1.0) / 2.0; }

double sigma2(double v) {
  return 0.3 * (1.0 + std::sin(5.0 * M_PI * v - M_PI / 2.0)) + 0.3 * (v - 0.2) * (v - 0.2);
}

double base_function(BaseFunction base, const Eigen::VectorXd& z) {
  const double n = static_cast<double>(z.size());
  switch (base) {
    case BaseFunction::Sphere:
      return z.squaredNorm();
    case BaseFunction::Ackley: {
      const double a = std::sqrt(z.squaredNorm() / n);
      const double c = (2.0 * M_PI * z.array()).cos().sum() / n;
      return 20.0 + M_E - 20.0 * std::exp(-0.2 * a) - std::exp(c);
    }
    case BaseFunction::Rastrigin:
      return (z.array().square() - 10.0 * (2.0 * M_PI * z.array()).cos() + 10.0).sum();
    case BaseFunction::Griewank: {
      double prod = 1.0;
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        prod *= std::cos(z[i] / std::sqrt(static_cast<double>(i + 1)));
      }
      return z.squaredNorm() / 4000.0 - prod + 1.0;
    }
  }
  throw InvalidArgument("base_function: unknown base");
}

Eigen::MatrixXd SyntheticSpec::default_mixing() {
  Eigen::MatrixXd l(4, 5);
  l << 1.0, 0.0, 0.0, 0.0, 0.0,
       0.0, 2.0 / 3.0, 1.0 / 3.0, 0.0, 0.0,
       0.0, 0.0, 1.0 / 3.0, 2.0 / 3.0, 0.0,
       0.0, 0.0, 0.0, 0.0, 1.0;
  return l;
}

SyntheticSpec SyntheticSpec::standard(BaseFunction base, Nonlinearity sigma) {
  SyntheticSpec s;
  s.base = base;
  s.sigma = sigma;
  s.L = default_mixing();
  switch (base) {
    case BaseFunction::Sphere:
    case BaseFunction::Ackley:
      s.lambda = 4.0;
      break;
    case BaseFunction::Rastrigin:
      s.lambda = 20.0;
      break;
    case BaseFunction::Griewank:
      s.lambda = 600.0;
      break;
  }
  return s;
}

Eigen::VectorXd SyntheticSpec::shift(const Eigen::VectorXd& theta) const {
  require_dim(theta, L.cols(), "synthetic theta");
  Eigen::VectorXd u = L * theta;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    u[i] = sigma == Nonlinearity::Sigma1 ? sigma1(u[i]) : sigma2(u[i]);
  }
  return u;
}

double synthetic_evaluate(const SyntheticSpec& spec, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& theta) {
  require_dim(x, spec.L.rows(), "synthetic x");
  return base_function(spec.base, spec.lambda * (x - spec.shift(theta)));
}

// ------------------------------------------------------------------ robot arm

double robot_arm_evaluate(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) {
  require_dim(x, kArmJoints, "robot arm x");
  require_dim(theta, 2, "robot arm theta");
  const double link = theta[0];
  const double alpha_max = theta[1];
  double angle = 0.0, px = 0.0, py = 0.0;
  for (int i = 0; i < kArmJoints; ++i) {
    angle += alpha_max * (2.0 * x[i] - 1.0);
    px += link * std::cos(angle);
    py += link * std::sin(angle);
  }
  return std::hypot(px - 0.5, py - 0.5);
}

// ------------------------------------------------------------------ crane

double CraneParams::omega() const { return std::sqrt(g * (m1 + m2) / (m1 * l)); }
double CraneParams::omega0() const { return std::sqrt(g / l); }

CraneParams CraneParams::table_one() {
  CraneParams p;
  p.W = 0.01 * p.g * (p.m1 + p.m2);
  return p;
}

double crane_terminal_energy(const Eigen::Vector3d& t, const CraneParams& p) {
  const double om = p.omega();
  const double om0 = p.omega0();
  const double om0_2 = om0 * om0;
  const double total = t.sum();
  const double df = p.f_max - p.f_min;

  // Displacement-like (cosine) and velocity-like (sine) residual terms.
  const double cos_term = p.f_max - p.W - df * (std::cos(t[2] * om) - std::cos((t[1] + t[2]) * om)) +
                          (p.W - p.f_max) * std::cos(total * om);
  const double sin_term = df * (std::sin(t[2] * om) - std::sin((t[1] + t[2]) * om)) +
                          (p.f_max - p.W) * std::sin(total * om);
  const double te2 = p.m1 * p.v * om * om * om -
                     om * om0_2 * (p.f_min * t[1] + p.f_max * (t[0] + t[2]) - total * p.W) +
                     om0_2 * sin_term;

  const double om6 = std::pow(om, 6);
  return p.m2 / (2.0 * p.m1 * p.m1 * om6) *
         (om * om * om0_2 * om0_2 * cos_term * cos_term + om0_2 * om0_2 * sin_term * sin_term +
          te2 * te2);
}

double crane_objective(const Eigen::Vector3d& t, const CraneParams& p) {
  const double te = crane_terminal_energy(t, p);
  const double energy = te >= p.delta ? p.w * te : 0.0;
  const double value = 2.0 * energy / (p.m2 * p.v * p.v) + t.sum() * p.omega() / (2.0 * M_PI);
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "crane objective not finite for t=(" << t[0] << ", " << t[1] << ", " << t[2]
        << "), m1=" << p.m1 << ", m2=" << p.m2 << ", l=" << p.l << ", W=" << p.W;
    throw NumericalError(msg.str());
  }
  return value;
}

double crane_evaluate(const Eigen::VectorXd& t, const Eigen::VectorXd& theta, CraneVariant variant,
                      const CraneParams& base) {
  require_dim(t, 3, "crane t");
  require_dim(theta, 3, "crane theta");
  if (variant == CraneVariant::TimeDelay) {
    return crane_objective(Eigen::Vector3d(t + theta), base);
  }
  CraneParams p = base;
  p.l = theta[0];
  p.m2 = theta[1];
  p.W = theta[2];
  return crane_objective(Eigen::Vector3d(t), p);
}

// ------------------------------------------------------------------ truss

Box TrussSpec::error_box() const {
  return Box(Eigen::VectorXd::Constant(3, -error_fraction),
             Eigen::VectorXd::Constant(3, error_fraction));
}

Eigen::VectorXd TrussSpec::operating(const Eigen::VectorXd& x_frac,
                                     const Eigen::VectorXd& theta) const {
  require_dim(x_frac, 3, "truss x");
  require_dim(theta, 3, "truss theta");
  return theta + x_frac.cwiseProduct(design.width());
}

namespace {

double truss_terms(const Eigen::VectorXd& p, double p1_den, double p3_den, const TrussSpec& s) {
  const double r16 = std::sqrt(16.0 + p[2] * p[2]);
  const double f1 = p[0] * r16 + p[1] * std::sqrt(1.0 + p[2] * p[2]);
  const double f2 = 20.0 * r16 / (p1_den * p3_den);
  return s.alpha1 * f1 + s.alpha2 * f2;
}

}  // namespace

double truss_evaluate(const Eigen::VectorXd& x_frac, const Eigen::VectorXd& theta,
                      const TrussSpec& spec) {
  const Eigen::VectorXd p = spec.operating(x_frac, theta);
  if (!(p[0] * p[2] > 0.0)) {
    throw InvalidArgument("truss_evaluate: operating p1*p3 must be positive");
  }
  return truss_terms(p, p[0], p[2], spec);
}

double truss_evaluate_guarded(const Eigen::VectorXd& x_frac, const Eigen::VectorXd& theta,
                              const TrussSpec& spec) {
  const Eigen::VectorXd p = spec.operating(x_frac, theta);
  return truss_terms(p, std::max(p[0], kTrussMinOperating), std::max(p[2], kTrussMinOperating),
                     spec);
}

// ------------------------------------------------------------------ registry

namespace {

ProblemSpec synthetic_problem(const std::string& name, BaseFunction base, Nonlinearity sigma,
                              const nlohmann::json& overrides) {
  SyntheticSpec spec = SyntheticSpec::standard(base, sigma);
  spec.lambda = get_or(overrides, "lambda", spec.lambda);
  if (overrides.contains("L")) {
    const auto rows = overrides.at("L").get<std::vector<std::vector<double>>>();
    if (rows.size() != 4 || rows[0].size() != 5) throw InvalidConfig("override L must be 4x5");
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 5; ++j) spec.L(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  ProblemSpec p;
  p.name = name;
  p.solution_bounds = Box::unit(spec.L.rows());
  p.task_bounds = Box::unit(spec.L.cols());
  p.evaluate = [spec](const Eigen::VectorXd& x, const Eigen::VectorXd& theta) {
    return synthetic_evaluate(spec, x, theta);
  };
  p.optimum = [spec](const Eigen::VectorXd& theta) {
    return KnownOptimum{spec.shift(theta), 0.0};
  };
  return p;
}

CraneParams crane_overrides(CraneParams p, const nlohmann::json& o) {
  p.m1 = get_or(o, "m1", p.m1);
  p.m2 = get_or(o, "m2", p.m2);
  p.v = get_or(o, "v", p.v);
  p.l = get_or(o, "l", p.l);
  p.w = get_or(o, "w", p.w);
  p.delta = get_or(o, "delta", p.delta);
  p.f_min = get_or(o, "f_min", p.f_min);
  p.f_max = get_or(o, "f_max", p.f_max);
  p.g = get_or(o, "g", p.g);
  p.W = get_or(o, "W", 0.01 * p.g * (p.m1 + p.m2));
  return p;
}

}  // namespace

std::vector<std::string> problem_names() {
  return {"sphere-i",     "sphere-ii",   "ackley-i",  "ackley-ii",    "rastrigin-i",
          "rastrigin-ii", "griewank-i",  "griewank-ii", "robot-arm", "crane-load-i",
          "crane-load-ii", "truss"};
}

ProblemSpec make_problem(const std::string& raw_name, const nlohmann::json& overrides) {
  const std::string name = lower(raw_name);
  const nlohmann::json o = overrides.is_null() ? nlohmann::json::object() : overrides;

  struct SynthEntry {
    const char* name;
    BaseFunction base;
    Nonlinearity sigma;
  };
  static const SynthEntry kSynthetic[] = {
      {"sphere-i", BaseFunction::Sphere, Nonlinearity::Sigma1},
      {"sphere-ii", BaseFunction::Sphere, Nonlinearity::Sigma2},
      {"ackley-i", BaseFunction::Ackley, Nonlinearity::Sigma1},
      {"ackley-ii", BaseFunction::Ackley, Nonlinearity::Sigma2},
      {"rastrigin-i", BaseFunction::Rastrigin, Nonlinearity::Sigma1},
      {"rastrigin-ii", BaseFunction::Rastrigin, Nonlinearity::Sigma2},
      {"griewank-i", BaseFunction::Griewank, Nonlinearity::Sigma1},
      {"griewank-ii", BaseFunction::Griewank, Nonlinearity::Sigma2},
  };
  for (const auto& e : kSynthetic) {
    if (name == e.name) {
      check_override_keys(o, {"lambda", "L"}, name);
      return synthetic_problem(name, e.base, e.sigma, o);
    }
  }

  ProblemSpec p;
  p.name = name;
  if (name == "robot-arm") {
    check_override_keys(o, {}, name);
    constexpr double n = kArmJoints;
    p.solution_bounds = Box::unit(kArmJoints);
    p.task_bounds = Box(Eigen::Vector2d(0.5 / n, 0.5 * M_PI / n), Eigen::Vector2d(1.0 / n, M_PI / n));
    p.evaluate = robot_arm_evaluate;
    return p;
  }
  if (name == "crane-load-i") {
    check_override_keys(o, {"m1", "m2", "v", "l", "w", "delta", "f_min", "f_max", "g", "W"}, name);
    const CraneParams params = crane_overrides(CraneParams::table_one(), o);
    p.solution_bounds = Box(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Constant(3, 2.0));
    p.task_bounds = Box(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3));
    p.evaluate = [params](const Eigen::VectorXd& x, const Eigen::VectorXd& theta) {
      return crane_evaluate(x, theta, CraneVariant::TimeDelay, params);
    };
    return p;
  }
  if (name == "crane-load-ii") {
    check_override_keys(o, {"m1", "v", "w", "delta", "f_min", "f_max", "g", "m2_min", "m2_max",
                            "l_min", "l_max"},
                        name);
    const CraneParams params = crane_overrides(CraneParams::table_one(), o);
    const double m2_min = get_or(o, "m2_min", 0.8e3), m2_max = get_or(o, "m2_max", 1.2e4);
    const double l_min = get_or(o, "l_min", 5.0), l_max = get_or(o, "l_max", 8.0);
    const double w_min = 0.005 * params.g * (params.m1 + m2_min);
    const double w_max = 0.015 * params.g * (params.m1 + m2_max);
    p.solution_bounds = Box(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Constant(3, 3.0));
    p.task_bounds = Box(Eigen::Vector3d(l_min, m2_min, w_min), Eigen::Vector3d(l_max, m2_max, w_max));
    p.evaluate = [params](const Eigen::VectorXd& x, const Eigen::VectorXd& theta) {
      return crane_evaluate(x, theta, CraneVariant::OperatingConditions, params);
    };
    return p;
  }
  if (name == "truss") {
    check_override_keys(o, {"alpha1", "alpha2", "error_fraction"}, name);
    TrussSpec spec;
    spec.alpha1 = get_or(o, "alpha1", spec.alpha1);
    spec.alpha2 = get_or(o, "alpha2", spec.alpha2);
    spec.error_fraction = get_or(o, "error_fraction", spec.error_fraction);
    p.solution_bounds = spec.error_box();
    p.task_bounds = spec.design;
    p.evaluate = [spec](const Eigen::VectorXd& x, const Eigen::VectorXd& theta) {
      return truss_evaluate_guarded(x, theta, spec);
    };
    return p;
  }
  throw InvalidConfig("unknown problem '" + raw_name + "'");
}

}  // namespace pmto
