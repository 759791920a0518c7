// linear_mode.hpp
//
// Practical approximation of the active learner for linear classifiers:
// squared-hinge surrogate, online gradient descent, a second-moment
// regularizer gradient from running accumulators, and a margin-based
// disagreement test in place of explicit candidate sets.
#pragma once

#include "cfal/active_learner.hpp"
#include "cfal/sim_worlds.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfal {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Linear classifier sign(w.x + b). The bias is stored as the last weight.
template <typename Scalar>
struct LinearModel {
  VectorX<Scalar> weights;
  Scalar eta = Scalar(1);       // step schedule: sqrt(eta / (eta + t))
  Scalar capacity = Scalar(1);  // C

  static LinearModel zero(Index dim, Scalar eta, Scalar capacity) {
    return {VectorX<Scalar>::Zero(dim + 1), eta, capacity};
  }
  Index dim() const { return weights.size() - 1; }

  template <typename Derived>
  Scalar score(const Eigen::MatrixBase<Derived>& x) const {
    return weights.head(dim()).dot(x) + weights[dim()];
  }
  template <typename Derived>
  int predict(const Eigen::MatrixBase<Derived>& x) const {
    return score(x) >= Scalar(0) ? 1 : -1;
  }
};

/// max(0, 1 - y s)^2.
template <typename Scalar>
Scalar squared_hinge(Scalar score, int y) {
  const Scalar slack = std::max(Scalar(0), Scalar(1) - Scalar(y) * score);
  return slack * slack;
}

/// Gradient of the squared hinge w.r.t. the augmented weights [w; b].
template <typename Scalar, typename Derived>
VectorX<Scalar> squared_hinge_gradient(const LinearModel<Scalar>& model,
                                       const Eigen::MatrixBase<Derived>& x, int y) {
  const Scalar slack = std::max(Scalar(0), Scalar(1) - Scalar(y) * model.score(x));
  VectorX<Scalar> g(model.weights.size());
  g.head(model.dim()) = (Scalar(-2) * slack * Scalar(y)) * x;
  g[model.dim()] = Scalar(-2) * slack * Scalar(y);
  return g;
}

template <typename Scalar>
Scalar step_size(Scalar eta, Index t) {
  return std::sqrt(eta / (eta + static_cast<Scalar>(t)));
}

/// One weighted gradient step at step count t.
template <typename Scalar, typename Derived>
LinearModel<Scalar> ogd_step(LinearModel<Scalar> model, const Eigen::MatrixBase<Derived>& x, int y,
                             Scalar weight, Index t) {
  if (weight == Scalar(0)) return model;
  const VectorX<Scalar> g = squared_hinge_gradient(model, x, y);
  if (!g.allFinite() || !std::isfinite(static_cast<double>(weight))) {
    throw std::runtime_error("non-finite gradient in online step");
  }
  model.weights -= (step_size(model.eta, t) * weight) * g;
  return model;
}

/// Importance-invariant form of `ogd_step`: the limit of splitting `weight`
/// into infinitesimal gradient steps. While the margin is below one the
/// score moves to y + (s - y) exp(-2 a weight |x|^2) along x, so large
/// weights never overshoot. Agrees with `ogd_step` to first order in weight.
template <typename Scalar, typename Derived>
LinearModel<Scalar> invariant_step(LinearModel<Scalar> model, const Eigen::MatrixBase<Derived>& x,
                                   int y, Scalar weight, Index t) {
  if (weight == Scalar(0)) return model;
  const Scalar s = model.score(x);
  if (Scalar(y) * s >= Scalar(1)) return model;
  const Scalar norm2 = x.squaredNorm() + Scalar(1);
  const Scalar target =
      Scalar(y) + (s - Scalar(y)) * std::exp(Scalar(-2) * step_size(model.eta, t) * weight * norm2);
  const Scalar scale = (target - s) / norm2;
  if (!std::isfinite(static_cast<double>(scale))) {
    throw std::runtime_error("non-finite invariant update");
  }
  model.weights.head(model.dim()) += scale * x;
  model.weights[model.dim()] += scale;
  return model;
}

/// Weighted examples, one per row of `features`.
template <typename Scalar>
struct LinearBatch {
  MatrixX<Scalar> features;
  Eigen::VectorXi labels;
  VectorX<Scalar> weights;

  Index size() const { return features.rows(); }
};

/// (1/N) sum w k l + sqrt(lambda / N * (1/N) sum w^2 k l) with k = 1{w <= M}.
template <typename Scalar>
Scalar regularized_objective(const LinearModel<Scalar>& model, const LinearBatch<Scalar>& batch,
                             Scalar clip, Scalar lambda) {
  if (batch.size() == 0) throw std::invalid_argument("empty batch");
  const Scalar n = static_cast<Scalar>(batch.size());
  Scalar loss = 0, moment = 0;
  for (Index i = 0; i < batch.size(); ++i) {
    const Scalar w = batch.weights[i];
    if (w > clip) continue;
    const Scalar l = squared_hinge(model.score(batch.features.row(i).transpose()), batch.labels[i]);
    loss += w * l;
    moment += w * w * l;
  }
  return loss / n + std::sqrt(lambda / n * (moment / n));
}

/// Gradient of `regularized_objective`. The square-root term has zero
/// (sub)gradient where the second moment vanishes.
template <typename Scalar>
VectorX<Scalar> regularized_objective_gradient(const LinearModel<Scalar>& model,
                                               const LinearBatch<Scalar>& batch, Scalar clip,
                                               Scalar lambda) {
  if (batch.size() == 0) throw std::invalid_argument("empty batch");
  const Scalar n = static_cast<Scalar>(batch.size());
  VectorX<Scalar> g_loss = VectorX<Scalar>::Zero(model.weights.size());
  VectorX<Scalar> g_moment = VectorX<Scalar>::Zero(model.weights.size());
  Scalar moment = 0;
  for (Index i = 0; i < batch.size(); ++i) {
    const Scalar w = batch.weights[i];
    if (w > clip) continue;
    const auto x = batch.features.row(i).transpose();
    const int y = batch.labels[i];
    const VectorX<Scalar> g = squared_hinge_gradient(model, x, y);
    g_loss += w * g;
    g_moment += w * w * g;
    moment += w * w * squared_hinge(model.score(x), y);
  }
  g_loss /= n;
  if (moment <= Scalar(0) || lambda == Scalar(0)) return g_loss;
  moment /= n;
  g_moment /= n;
  // d/dw sqrt(lambda V / n) = sqrt(lambda / n) / (2 sqrt(V)) * dV/dw
  return g_loss + (std::sqrt(lambda / n) / (Scalar(2) * std::sqrt(moment))) * g_moment;
}

/// x is in the approximate disagreement region when
/// |2 w.x| / (a x.x) <= sqrt(C V / count) + C M / count, with x augmented by
/// the bias coordinate. A zero vector is always inside. `weight_scale`
/// divides the left side; 1 gives the inequality as written, `count` compares
/// the flipping weight per sample.
template <typename Scalar, typename Derived>
bool approx_in_disagreement(const LinearModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x,
                            Scalar step, Scalar capacity, Scalar second_moment, Scalar count,
                            Scalar clip, Scalar weight_scale = Scalar(1)) {
  if (x.squaredNorm() == Scalar(0) || step == Scalar(0)) return true;
  const Scalar norm2 = x.squaredNorm() + Scalar(1);
  const Scalar lhs = std::abs(Scalar(2) * model.score(x)) / (step * norm2 * weight_scale);
  const Scalar rhs =
      std::sqrt(capacity * second_moment / count) + capacity * clip / count;
  return lhs <= rhs;
}

// Linear-mode experiment runner.

enum class Algorithm { passive, active_iw, vc_active };
Algorithm algorithm_from_string(const std::string& name);
std::string to_string(Algorithm a);

struct CurvePoint {
  Index labels_used = 0;
  double test_error = 0.0;
};

struct LinearRunConfig {
  Algorithm algorithm = Algorithm::vc_active;
  Ablations ablations;  // applied on top of the algorithm's own settings
  double capacity = 1.0;
  double eta = 1.0;
  Index curve_every = 50;
  bool per_sample_test = true;  // divide the flipping weight by m + n_k
  bool invariant_updates = true;  // invariant_step instead of ogd_step
  bool center_features = true;    // learner sees x - 0.5
};

struct LinearRunResult {
  std::vector<CurvePoint> curve;
  Eigen::VectorXd weights;  // on raw (uncentered) features
  Index queries = 0;
  std::vector<double> clips;  // M_k per epoch
};

/// Components an algorithm runs with: passive uses none of the active
/// machinery; active_iw drops clipping and the regularizer.
Ablations effective_ablations(Algorithm algorithm, const Ablations& extra);

/// Epoch sizes 2, 4, 8, ... covering `online` examples; the last epoch takes
/// the remainder so sizes stay nondecreasing.
std::vector<Index> covering_schedule(Index online);

/// Test error of sign(w.x + b) on the world's test split.
double linear_test_error(const LinearWorld& world, const Eigen::VectorXd& weights);

/// One trial: logged reveals drawn with `propensity` from `seed`, then the
/// online stream in the world's order.
LinearRunResult run_linear(const LinearWorld& world, const PropensityMap& propensity,
                           const LinearRunConfig& config, std::uint64_t seed);

}  // namespace cfal
