#include "cfal/passive_learners.hpp"

#include <cmath>
#include <stdexcept>

namespace cfal {

Index erm(const HypothesisClass& cls, std::span<const Sample> samples, const FiniteWorld& world,
          const ClipConfig& clip) {
  const auto data = logged_weights(world, samples);
  Index best = 0;
  double best_loss = clipped_loss(cls[0], data, clip);
  for (Index h = 1; h < cls.size(); ++h) {
    const double loss = clipped_loss(cls[h], data, clip);
    if (loss < best_loss) {
      best = h;
      best_loss = loss;
    }
  }
  return best;
}

double regularized_objective(const LabelsRef& h, const WeightedSamples& data, double lambda,
                             const ClipConfig& clip) {
  const double n = static_cast<double>(data.samples.size());
  return clipped_loss(h, data, clip) +
         std::sqrt(lambda / n * clipped_second_moment(h, data, clip));
}

Index regularized_erm(const HypothesisClass& cls, std::span<const Sample> samples,
                      const FiniteWorld& world, double log_term, const ClipConfig& clip,
                      double lambda_factor) {
  if (!(log_term > 0.0)) throw std::invalid_argument("log term must be positive");
  const auto data = logged_weights(world, samples);
  const double lambda = lambda_factor * log_term;
  Index best = 0;
  double best_obj = regularized_objective(cls[0], data, lambda, clip);
  for (Index h = 1; h < cls.size(); ++h) {
    const double obj = regularized_objective(cls[h], data, lambda, clip);
    if (obj < best_obj) {
      best = h;
      best_obj = obj;
    }
  }
  return best;
}

double passive_clip_threshold(const FiniteWorld& world, Index logged, double log_term) {
  const auto dist = passive_weight_distribution(world);
  return choose_clip_threshold(dist, static_cast<double>(logged), log_term, TailVariant::passive);
}

double regularized_erm_bound(const FiniteWorld& world, const HypothesisClass& cls, Index logged,
                             double log_term) {
  const double m = static_cast<double>(logged);
  const double q0 = world.min_propensity();
  const auto star = cls[best_hypothesis(world, cls).index];
  double weighted_error = 0.0;
  for (Index x = 0; x < world.size(); ++x) {
    const double p_wrong = star[x] == 1 ? 1.0 - world.label_prob()[x] : world.label_prob()[x];
    weighted_error += world.mass()[x] * p_wrong / world.q0()[x];
  }
  return 28.0 * log_term / (3.0 * m * q0) + std::sqrt(4.0 * log_term / m * weighted_error) +
         std::sqrt(4.0 * log_term) / (std::pow(m, 1.5) * q0 * q0);
}

std::pair<FiniteWorld, HypothesisClass> theorem2_world(double nu, Index logged) {
  if (!(nu > 0.0 && nu < 1.0 / 3.0)) throw std::invalid_argument("nu must lie in (0, 1/3)");
  const double m = static_cast<double>(logged);
  if (m < 49.0 / (nu * nu)) throw std::invalid_argument("sample size must be >= 49 / nu^2");
  const double q0 = nu / 40.0;
  const double c = 1.0 / 3.0;
  const double c2 = c * c;
  const double eps = (c2 + std::sqrt(c2 * c2 + 4.0 * c2 * q0 * nu * m)) / (2.0 * q0 * m);

  Eigen::VectorXd mass(3), label_prob(3), prop(3);
  mass << nu, nu + eps, 1.0 - 2.0 * nu - eps;
  label_prob << 1.0, 1.0, 1.0;
  prop << 1.0, q0, 1.0;
  LabelTable table(2, 3);
  table << -1, 1, 1,
            1, -1, 1;
  return {FiniteWorld(mass, label_prob, prop), HypothesisClass(table)};
}

}  // namespace cfal
