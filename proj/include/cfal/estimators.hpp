// estimators.hpp
//
// Importance-weighted loss and second-moment estimators over logged and
// actively collected samples, the clipping-threshold selector and the
// debias query policy.
#pragma once

#include "cfal/hypothesis_space.hpp"

#include <limits>
#include <span>
#include <vector>

namespace cfal {

/// One record (x, y, z). `y` is +-1 when z = 1 and 0 otherwise; epoch 0 is
/// the logged phase.
struct Sample {
  Index x = 0;
  bool z = false;
  int y = 0;
  int epoch = 0;
};

/// Clip threshold M >= 1, or no clipping.
class ClipConfig {
 public:
  ClipConfig() = default;
  static ClipConfig none() { return {}; }
  static ClipConfig at(double threshold);

  bool active() const { return threshold_ < std::numeric_limits<double>::infinity(); }
  double threshold() const { return threshold_; }
  bool keeps(double weight) const { return weight <= threshold_; }

 private:
  explicit ClipConfig(double m) : threshold_(m) {}
  double threshold_ = std::numeric_limits<double>::infinity();
};

enum class QueryRule { debias, query_all };
enum class WeightScheme { mis, per_epoch_iw };

/// Epoch schedule tau_1..tau_K on top of m logged samples, together with the
/// query rule that derives Q_1, Q_2, ... from Q0. The derived policies depend
/// on an instance only through its propensity, so they are evaluated on
/// propensity values.
class PolicyStack {
 public:
  PolicyStack(Index logged, std::vector<Index> schedule, QueryRule rule = QueryRule::debias,
              WeightScheme scheme = WeightScheme::mis);

  Index logged_size() const { return logged_; }
  Index epochs() const { return static_cast<Index>(schedule_.size()); }
  /// tau_k for k >= 1; tau_0 = m.
  Index tau(Index k) const;
  /// n_k = tau_1 + ... + tau_k, n_0 = 0.
  Index online_before(Index k) const { return prefix_.at(static_cast<std::size_t>(k)); }
  /// m + n_k.
  Index sample_count(Index k) const { return logged_ + online_before(k); }
  QueryRule rule() const { return rule_; }
  WeightScheme scheme() const { return scheme_; }
  const std::vector<Index>& schedule() const { return schedule_; }

  /// Q_k(x) in {0, 1} for k >= 1.
  int query(double q0, Index k) const;
  /// Weight of a sample collected in `epoch`, used by the estimator of epoch k.
  double sample_weight(double q0, int epoch, Index k) const;

 private:
  Index logged_;
  std::vector<Index> schedule_;
  std::vector<Index> prefix_;
  QueryRule rule_;
  WeightScheme scheme_;
};

/// Samples paired with the importance weight each one carries in a given
/// estimator. All estimators normalize by the number of samples.
struct WeightedSamples {
  std::span<const Sample> samples;
  Eigen::VectorXd weight;
};

/// Weights 1 / Q0(x) of the passive estimators.
WeightedSamples logged_weights(const FiniteWorld& world, std::span<const Sample> samples);
/// Weights w_k of the epoch-k estimator; rejects samples from epochs after k.
WeightedSamples stack_weights(const FiniteWorld& world, const PolicyStack& stack, Index k,
                              std::span<const Sample> samples);

// Generic clipped estimators: (1/N) sum w^p z 1{...} 1{w <= M}.
double clipped_loss(const LabelsRef& h, const WeightedSamples& data, const ClipConfig& clip);
double clipped_second_moment(const LabelsRef& h, const WeightedSamples& data,
                             const ClipConfig& clip);
double clipped_pair_second_moment(const LabelsRef& h1, const LabelsRef& h2,
                                  const WeightedSamples& data, const ClipConfig& clip);
/// l(h1) - l(h2) accumulated term by term; samples where h1 and h2 agree
/// contribute exactly zero, independent of their label.
double clipped_loss_difference(const LabelsRef& h1, const LabelsRef& h2,
                               const WeightedSamples& data, const ClipConfig& clip);

// Passive (logged-only) estimators.
double iw_loss(const LabelsRef& h, std::span<const Sample> samples, const FiniteWorld& world);
double second_moment(const LabelsRef& h, std::span<const Sample> samples, const FiniteWorld& world,
                     const ClipConfig& clip = {});
double clipped_iw_loss(const LabelsRef& h, std::span<const Sample> samples,
                       const FiniteWorld& world, double threshold);

// Multiple importance sampling estimators at epoch k.
double mis_weight(double q0, Index k, const PolicyStack& stack);
double mis_loss(const LabelsRef& h, std::span<const Sample> samples, const FiniteWorld& world,
                const PolicyStack& stack, Index k, const ClipConfig& clip = {});
double mis_second_moment(const LabelsRef& h, std::span<const Sample> samples,
                         const FiniteWorld& world, const PolicyStack& stack, Index k,
                         const ClipConfig& clip = {});
double mis_second_moment_pair(const LabelsRef& h1, const LabelsRef& h2,
                              std::span<const Sample> samples, const FiniteWorld& world,
                              const PolicyStack& stack, Index k, const ClipConfig& clip = {});

// Clipping threshold selection.

struct WeightAtom {
  double value = 0.0;
  double prob = 0.0;
};

enum class TailVariant {
  passive,  ///< tail Pr(W > M)
  active    ///< tail Pr(W > M / 2)
};

/// inf{ M >= 1 : (2 M / count) log_term >= tail(M) }, found exactly by
/// scanning the jump points of the right-continuous tail.
double choose_clip_threshold(std::span<const WeightAtom> dist, double count, double log_term,
                             TailVariant variant);

/// Distribution of 1 / Q0(X).
std::vector<WeightAtom> passive_weight_distribution(const FiniteWorld& world);
/// Distribution of (m + n_k) / (m Q0(X) + n_k).
std::vector<WeightAtom> active_weight_distribution(const FiniteWorld& world, Index logged,
                                                   Index online);
/// Empirical distribution, mass 1/N on every value.
std::vector<WeightAtom> empirical_weight_distribution(std::span<const double> values);

/// Tail probability used by `choose_clip_threshold`.
double weight_tail(std::span<const WeightAtom> dist, double threshold, TailVariant variant);

// Debias query policy.

/// Q_{k+1}(x) = 1{ m Q0 + sum_{i<=k} tau_i Q_i(x) < (m/2) Q0 + n_{k+1} },
/// evaluated through the recursion over earlier policies.
int debias_policy(double q0, Index next_epoch, const PolicyStack& stack);
/// Q_k(x) = 1{ 2 n_k - m Q0(x) > 0 }.
int debias_closed_form(double q0, Index k, const PolicyStack& stack);

}  // namespace cfal
