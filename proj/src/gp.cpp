#include "pmto/gp.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

namespace pmto {
namespace {

constexpr double kJitterStart = 1e-6;  // relative to signal variance
constexpr double kJitterMax = 1e-2;
constexpr double kVarianceTolerance = 1e-9;

// Log-space box for the optimizer.
constexpr double kMinLengthscale = 1e-2, kMaxLengthscale = 1e2;
constexpr double kMinSignal = 1e-4, kMaxSignal = 1e4;
constexpr double kMaxNoise = 1e1;

void check_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw InvalidArgument(std::string(what) + ": dimension " + std::to_string(got) +
                          ", expected " + std::to_string(want));
  }
}

struct Factor {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

// Cholesky of Kf + (noise + jitter) I. Plain factorization first, then
// jitter from kJitterStart·sv escalating ×10 up to kJitterMax·sv.
std::optional<Factor> try_factorize(const Eigen::MatrixXd& kf, double noise, double sv) {
  const double max_jitter = kJitterMax * sv * (1.0 + 1e-12);
  for (double jitter = 0.0; jitter <= max_jitter;
       jitter = jitter == 0.0 ? kJitterStart * sv : jitter * 10.0) {
    Eigen::MatrixXd a = kf;
    a.diagonal().array() += noise + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd l = llt.matrixL();
      const auto diag = l.diagonal().array();
      if ((diag > 0.0).all() && diag.allFinite()) return Factor{std::move(l), jitter};
    }
  }
  return std::nullopt;
}

Factor factorize(const Eigen::MatrixXd& kf, double noise, double sv) {
  if (auto f = try_factorize(kf, noise, sv)) return std::move(*f);
  throw NumericalFailure("GP Cholesky failed after jitter escalation", kJitterMax * sv);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const GpHyperparams& h) {
  const Eigen::ArrayXd inv = h.lengthscales.array().inverse();
  Eigen::MatrixXd as = a.array().rowwise() * inv.transpose();
  Eigen::MatrixXd bs = b.array().rowwise() * inv.transpose();
  Eigen::MatrixXd sq = (-2.0 * as * bs.transpose()).colwise() + as.rowwise().squaredNorm();
  sq.rowwise() += bs.rowwise().squaredNorm().transpose();
  return h.signal_variance * (-0.5 * sq.array().max(0.0)).exp().matrix();
}

Eigen::MatrixXd symmetric_kernel_matrix(const Eigen::MatrixXd& x, const GpHyperparams& h) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = h.signal_variance;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double s = ((x.row(i) - x.row(j)).array() / h.lengthscales.transpose().array())
                           .square()
                           .sum();
      k(i, j) = k(j, i) = h.signal_variance * std::exp(-0.5 * s);
    }
  }
  return k;
}

// Caches per-dimension squared differences so repeated LML evaluations during
// fitting only pay for the exponentials and the factorization.
class LmlWorkspace {
 public:
  LmlWorkspace(const Eigen::MatrixXd& unit_inputs, Eigen::VectorXd y) : y_(std::move(y)) {
    const Eigen::Index n = unit_inputs.rows();
    sqd_.reserve(static_cast<std::size_t>(unit_inputs.cols()));
    for (Eigen::Index k = 0; k < unit_inputs.cols(); ++k) {
      const Eigen::VectorXd c = unit_inputs.col(k);
      Eigen::MatrixXd d = c.replicate(1, n) - c.transpose().replicate(n, 1);
      sqd_.push_back(d.array().square().matrix());
    }
  }

  std::optional<LmlResult> evaluate(const GpHyperparams& h) const {
    const Eigen::Index n = y_.size();
    const double log2pi = std::log(2.0 * M_PI);
    Eigen::ArrayXXd s = Eigen::ArrayXXd::Zero(n, n);
    for (std::size_t k = 0; k < sqd_.size(); ++k) {
      const double l = h.lengthscales[static_cast<Eigen::Index>(k)];
      s += sqd_[k].array() / (l * l);
    }
    const Eigen::MatrixXd kf = (h.signal_variance * (-0.5 * s).exp()).matrix();
    auto factor = try_factorize(kf, h.noise_variance, h.signal_variance);
    if (!factor) return std::nullopt;

    const Eigen::MatrixXd& lm = factor->lower;
    const auto l = lm.triangularView<Eigen::Lower>();
    const auto lt = lm.transpose().triangularView<Eigen::Upper>();
    Eigen::VectorXd alpha = l.solve(y_);
    lt.solveInPlace(alpha);

    LmlResult out;
    out.value = -0.5 * y_.dot(alpha) - factor->lower.diagonal().array().log().sum() -
                0.5 * static_cast<double>(n) * log2pi;
    if (!std::isfinite(out.value)) return std::nullopt;

    Eigen::MatrixXd kinv = Eigen::MatrixXd::Identity(n, n);
    l.solveInPlace(kinv);
    lt.solveInPlace(kinv);
    const Eigen::MatrixXd w = alpha * alpha.transpose() - kinv;
    const Eigen::ArrayXXd wk = w.array() * kf.array();
    const double trace_w = w.trace();

    const Eigen::Index d = static_cast<Eigen::Index>(sqd_.size());
    out.gradient.resize(d + 2);
    for (Eigen::Index k = 0; k < d; ++k) {
      const double l2 = h.lengthscales[k] * h.lengthscales[k];
      out.gradient[k] = 0.5 * (wk * sqd_[static_cast<std::size_t>(k)].array()).sum() / l2;
    }
    // Jitter scales with the signal variance, so it contributes to that derivative.
    out.gradient[d] = 0.5 * (wk.sum() + factor->jitter * trace_w);
    out.gradient[d + 1] = 0.5 * h.noise_variance * trace_w;
    if (!out.gradient.allFinite()) return std::nullopt;
    return out;
  }

 private:
  std::vector<Eigen::MatrixXd> sqd_;
  Eigen::VectorXd y_;
};

Eigen::VectorXd clamp_log_params(Eigen::VectorXd eta) {
  const Eigen::Index d = eta.size() - 2;
  for (Eigen::Index k = 0; k < d; ++k) {
    eta[k] = std::clamp(eta[k], std::log(kMinLengthscale), std::log(kMaxLengthscale));
  }
  eta[d] = std::clamp(eta[d], std::log(kMinSignal), std::log(kMaxSignal));
  eta[d + 1] = std::clamp(eta[d + 1], std::log(kNoiseFloor), std::log(kMaxNoise));
  return eta;
}

}  // namespace

// ---------------------------------------------------------------- hyperparams

GpHyperparams GpHyperparams::defaults(Eigen::Index dim) {
  GpHyperparams h;
  h.lengthscales = Eigen::VectorXd::Constant(dim, 0.5);
  h.signal_variance = 1.0;
  h.noise_variance = 1e-2;
  return h;
}

void GpHyperparams::validate(Eigen::Index dim) const {
  check_dim(lengthscales.size(), dim, "GpHyperparams lengthscales");
  if (!(lengthscales.array() > 0.0).all()) throw InvalidArgument("lengthscales must be > 0");
  if (!(signal_variance > 0.0)) throw InvalidArgument("signal_variance must be > 0");
  if (!(noise_variance >= 0.0)) throw InvalidArgument("noise_variance must be >= 0");
}

Eigen::VectorXd GpHyperparams::to_log() const {
  const Eigen::Index d = lengthscales.size();
  Eigen::VectorXd eta(d + 2);
  eta.head(d) = lengthscales.array().log();
  eta[d] = std::log(signal_variance);
  eta[d + 1] = std::log(std::max(noise_variance, kNoiseFloor));
  return eta;
}

GpHyperparams GpHyperparams::from_log(const Eigen::VectorXd& eta) {
  const Eigen::Index d = eta.size() - 2;
  GpHyperparams h;
  h.lengthscales = eta.head(d).array().exp();
  h.signal_variance = std::exp(eta[d]);
  h.noise_variance = std::exp(eta[d + 1]);
  return h;
}

double rbf_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const GpHyperparams& h) {
  check_dim(a.size(), h.lengthscales.size(), "rbf_kernel(a)");
  check_dim(b.size(), h.lengthscales.size(), "rbf_kernel(b)");
  const double s = ((a - b).array() / h.lengthscales.array()).square().sum();
  return h.signal_variance * std::exp(-0.5 * s);
}

// ---------------------------------------------------------------- training set

TrainingSet::TrainingSet(Box input_bounds)
    : bounds_(std::move(input_bounds)), inputs_(0, bounds_.dim()), targets_(0) {}

void TrainingSet::add(const Eigen::VectorXd& x, double y) {
  check_dim(x.size(), dim(), "TrainingSet::add");
  if (!std::isfinite(y)) throw InvalidArgument("TrainingSet::add: non-finite target");
  const Eigen::Index n = size();
  inputs_.conservativeResize(n + 1, Eigen::NoChange);
  inputs_.row(n) = x.transpose();
  targets_.conservativeResize(n + 1);
  targets_[n] = y;
}

Eigen::MatrixXd TrainingSet::normalized_inputs() const {
  const Eigen::Index n = size();
  Eigen::MatrixXd out(n, dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.row(i) = bounds_.to_unit(inputs_.row(i).transpose()).transpose();
  }
  return out;
}

TargetScaling TrainingSet::target_scaling() const {
  if (fixed_scaling_) return *fixed_scaling_;
  TargetScaling s;
  const Eigen::Index n = size();
  if (n == 0) return s;
  s.mean = targets_.mean();
  const double var =
      n > 1 ? (targets_.array() - s.mean).square().sum() / static_cast<double>(n - 1) : 0.0;
  s.scale = std::max(std::sqrt(var), kTargetStdFloor);
  return s;
}

Eigen::VectorXd TrainingSet::standardized_targets() const {
  const TargetScaling s = target_scaling();
  return (targets_.array() - s.mean) / s.scale;
}

// ---------------------------------------------------------------- model

GpModel GpModel::fit(TrainingSet training, const GpHyperparams& h) {
  if (training.empty()) throw InvalidArgument("fit_posterior: empty training set");
  h.validate(training.dim());

  GpModel m;
  m.hyper_ = h;
  m.scaling_ = training.target_scaling();
  m.unit_inputs_ = training.normalized_inputs();
  m.y_std_ = training.standardized_targets();
  m.training_ = std::move(training);

  const Eigen::MatrixXd kf = symmetric_kernel_matrix(m.unit_inputs_, h);
  Factor f = factorize(kf, h.noise_variance, h.signal_variance);
  m.chol_ = std::move(f.lower);
  m.jitter_ = f.jitter;
  m.alpha_ = m.chol_.triangularView<Eigen::Lower>().solve(m.y_std_);
  m.chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(m.alpha_);
  return m;
}

GpModel GpModel::prior(Box bounds, const GpHyperparams& h, TargetScaling scaling) {
  h.validate(bounds.dim());
  GpModel m;
  m.hyper_ = h;
  m.scaling_ = scaling;
  m.training_ = TrainingSet(std::move(bounds));
  m.unit_inputs_ = Eigen::MatrixXd(0, h.lengthscales.size());
  m.y_std_ = Eigen::VectorXd(0);
  m.chol_ = Eigen::MatrixXd(0, 0);
  m.alpha_ = Eigen::VectorXd(0);
  return m;
}

double GpModel::kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  return rbf_kernel(training_.normalize(a), training_.normalize(b), hyper_);
}

Posterior GpModel::predict(const Eigen::VectorXd& query) const {
  check_dim(query.size(), dim(), "predict");
  Eigen::VectorXd mean, var;
  predict_batch(query.transpose(), mean, var);
  return Posterior{mean[0], var[0]};
}

void GpModel::predict_batch(const Eigen::MatrixXd& queries, Eigen::VectorXd& mean,
                            Eigen::VectorXd& variance) const {
  check_dim(queries.cols(), dim(), "predict_batch");
  const Eigen::Index q = queries.rows();
  const double sv = hyper_.signal_variance;
  const double scale2 = scaling_.scale * scaling_.scale;
  if (y_std_.size() == 0) {
    mean = Eigen::VectorXd::Constant(q, scaling_.mean);
    variance = Eigen::VectorXd::Constant(q, sv * scale2);
    return;
  }

  Eigen::MatrixXd unit(q, dim());
  for (Eigen::Index i = 0; i < q; ++i) {
    unit.row(i) = training_.normalize(queries.row(i).transpose()).transpose();
  }
  const Eigen::MatrixXd kq = kernel_matrix(unit_inputs_, unit, hyper_);  // n × q
  mean = (kq.transpose() * alpha_).array() * scaling_.scale + scaling_.mean;

  const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(kq);
  Eigen::VectorXd var_std = sv - v.colwise().squaredNorm().transpose().array();
  for (Eigen::Index i = 0; i < q; ++i) {
    if (var_std[i] < 0.0) {
      if (var_std[i] < -kVarianceTolerance * std::max(1.0, sv)) {
        throw NumericalFailure("posterior variance is negative beyond tolerance", jitter_);
      }
      var_std[i] = 0.0;
    }
  }
  variance = var_std * scale2;
}

LmlResult GpModel::log_marginal_likelihood() const {
  if (y_std_.size() == 0) throw InvalidState("log_marginal_likelihood: model has no data");
  LmlWorkspace ws(unit_inputs_, y_std_);
  auto r = ws.evaluate(hyper_);
  if (!r) throw NumericalFailure("log marginal likelihood is not finite", jitter_);
  return *r;
}

// ---------------------------------------------------------------- fitting

GpHyperparams fit_hyperparams(const TrainingSet& training, const GpHyperparams& init, int epochs,
                              double lr) {
  if (epochs < 1) throw InvalidArgument("fit_hyperparams: epochs must be >= 1");
  if (!(lr > 0.0)) throw InvalidArgument("fit_hyperparams: lr must be > 0");
  if (training.empty()) throw InvalidArgument("fit_hyperparams: empty training set");
  init.validate(training.dim());

  const LmlWorkspace ws(training.normalized_inputs(), training.standardized_targets());

  Eigen::VectorXd eta = clamp_log_params(init.to_log());
  auto current = ws.evaluate(GpHyperparams::from_log(eta));
  if (!current) {
    throw NumericalFailure("fit_hyperparams: LML not finite at the initial point",
                           kJitterMax * init.signal_variance);
  }

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(eta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(eta.size());
  Eigen::VectorXd best_eta = eta;
  double best_value = current->value;
  Eigen::VectorXd grad = current->gradient;
  double step = lr;
  int failures = 0;

  for (int t = 1; t <= epochs; ++t) {
    m = kBeta1 * m + (1.0 - kBeta1) * grad;
    v = kBeta2 * v + (1.0 - kBeta2) * grad.cwiseAbs2();
    const Eigen::VectorXd mhat = m / (1.0 - std::pow(kBeta1, t));
    const Eigen::VectorXd vhat = v / (1.0 - std::pow(kBeta2, t));
    const Eigen::VectorXd proposal =
        clamp_log_params(eta + step * (mhat.array() / (vhat.array().sqrt() + kEps)).matrix());

    auto next = ws.evaluate(GpHyperparams::from_log(proposal));
    if (!next) {
      // Stay at the last finite iterate and retry with a smaller step.
      if (++failures >= 2) break;
      step *= 0.5;
      continue;
    }
    failures = 0;
    eta = proposal;
    grad = next->gradient;
    if (next->value > best_value) {
      best_value = next->value;
      best_eta = eta;
    }
  }
  GpHyperparams out = GpHyperparams::from_log(best_eta);
  out.noise_variance = std::max(out.noise_variance, kNoiseFloor);
  return out;
}

// ---------------------------------------------------------------- information gain

namespace {

struct TaskPartition {
  std::vector<Eigen::Index> target;
  std::vector<Eigen::Index> rest;
};

TaskPartition partition_by_task(const TrainingSet& full, const Eigen::VectorXd& task) {
  const Eigen::Index dtask = task.size();
  if (dtask < 1 || dtask >= full.dim()) {
    throw InvalidArgument("information gain: task dimension must be in [1, input dim)");
  }
  TaskPartition p;
  for (Eigen::Index i = 0; i < full.size(); ++i) {
    const bool match =
        (full.inputs().row(i).tail(dtask).transpose().array() == task.array()).all();
    (match ? p.target : p.rest).push_back(i);
  }
  if (p.target.empty()) throw InvalidArgument("information gain: no samples for target task");
  return p;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
  return out;
}

double half_logdet_gain(const Eigen::MatrixXd& kcond, double noise) {
  Eigen::MatrixXd a = kcond / noise;
  a.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericalFailure("information gain: I + K/σ² not positive definite", 0.0);
  }
  return Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

}  // namespace

double conditional_information_gain(const TrainingSet& full, const Eigen::VectorXd& target_task,
                                    const GpHyperparams& h) {
  h.validate(full.dim());
  if (!(h.noise_variance > 0.0)) {
    throw InvalidArgument("conditional_information_gain requires positive noise variance");
  }
  const TaskPartition p = partition_by_task(full, target_task);
  const Eigen::MatrixXd unit = full.normalized_inputs();
  const Eigen::MatrixXd xm = rows_of(unit, p.target);
  Eigen::MatrixXd kcond = symmetric_kernel_matrix(xm, h);
  if (!p.rest.empty()) {
    const Eigen::MatrixXd xr = rows_of(unit, p.rest);
    Eigen::MatrixXd krest = symmetric_kernel_matrix(xr, h);
    krest.diagonal().array() += h.noise_variance;
    const Eigen::MatrixXd b = kernel_matrix(xr, xm, h);  // rest × target
    Eigen::LLT<Eigen::MatrixXd> llt(krest);
    if (llt.info() != Eigen::Success) {
      throw NumericalFailure("information gain: K_rest + σ²I not positive definite", 0.0);
    }
    const Eigen::MatrixXd lb = llt.matrixL().solve(b);
    kcond -= lb.transpose() * lb;
  }
  return half_logdet_gain(kcond, h.noise_variance);
}

double independent_information_gain(const TrainingSet& full, const Eigen::VectorXd& target_task,
                                    const GpHyperparams& h) {
  h.validate(full.dim());
  if (!(h.noise_variance > 0.0)) {
    throw InvalidArgument("independent_information_gain requires positive noise variance");
  }
  const TaskPartition p = partition_by_task(full, target_task);
  const Eigen::MatrixXd xm = rows_of(full.normalized_inputs(), p.target);
  return half_logdet_gain(symmetric_kernel_matrix(xm, h), h.noise_variance);
}

}  // namespace pmto
