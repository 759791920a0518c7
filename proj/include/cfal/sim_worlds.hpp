// sim_worlds.hpp
//
// Seeded data-generating environments: the logged-then-online process over a
// finite world, the fixture worlds used by the tests, and the synthetic
// linear dataset with its certainty/uncertainty logging policies.
#pragma once

#include "cfal/estimators.hpp"
#include "cfal/hypothesis_space.hpp"
#include "cfal/rng.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cfal {

/// Logged phase plus a label-gated online stream over a FiniteWorld.
/// Logged labels are free; every online label goes through `query`.
class Environment {
 public:
  Environment(FiniteWorld world, std::uint64_t seed);

  const FiniteWorld& world() const { return world_; }

  /// m i.i.d. draws with z ~ Bernoulli(Q0(x)); y is exposed iff z = 1.
  std::vector<Sample> generate_logged(Index m);
  /// True labels of every logged draw, in draw order (simulator side).
  const std::vector<int>& logged_truth() const { return logged_truth_; }

  /// Starts an online stream of `count` draws.
  void open_stream(Index count);
  /// Next online instance; throws std::runtime_error once the stream is spent.
  Index draw();
  /// Label of the most recent online draw. Counted.
  int query();
  /// Label of the most recent online draw without touching the counter.
  /// Reserved for simulator-side bookkeeping (S_k replay, diagnostics).
  int hidden_label() const;

  Index oracle_calls() const { return oracle_calls_; }
  Index logged_reveals() const { return logged_reveals_; }
  Index remaining() const { return stream_size_ - drawn_; }

 private:
  std::pair<Index, int> draw_pair();

  FiniteWorld world_;
  Rng rng_;
  std::vector<double> cdf_;
  std::vector<int> logged_truth_;
  Index logged_reveals_ = 0;
  Index stream_size_ = 0;
  Index drawn_ = 0;
  Index oracle_calls_ = 0;
  Index current_x_ = -1;
  int current_y_ = 0;
};

struct FixtureWorld {
  FiniteWorld world;
  HypothesisClass hypotheses;
};

/// All 2^d labelings of d instances, in binary counting order with -1 for 0.
HypothesisClass all_labelings(Index instances);

/// Five-instance clipping example with its four hypotheses. Labels are
/// deterministic Y = -1, which reproduces the tabulated error rates.
FixtureWorld fixture_table1(double nu, double alpha);

/// Two-instance debias example: Q0 = (1, alpha), masses (1 - mu, mu). The
/// example's preconditions mu <= 1/(4 lambda), alpha <= mu^2/(2 lambda) and
/// m > 2n are checked. Labels default to fair coins on both instances.
FixtureWorld fixture_example2(double mu, double alpha, Index logged, Index online,
                              double lambda = 2.0, double label_prob_x1 = 0.5,
                              double label_prob_x2 = 0.5);

/// 20-instance, 32-hypothesis world with symmetric label noise nu = 0.05
/// around the best hypothesis; competitors differ from it on
/// low-propensity instances.
FixtureWorld fixture_consistency();

/// Random world with `instances` instances: Dirichlet-like masses, label
/// probabilities in [0, 1] and propensities in [min_q0, 1].
FiniteWorld random_world(Rng& rng, Index instances, double min_q0 = 0.05);
/// `size` random +-1 labelings.
HypothesisClass random_class(Rng& rng, Index size, Index instances);

/// Fixture by name: "theorem2", "table1", "example2", "consistency".
FixtureWorld named_fixture(const std::string& name);

// Linear-mode synthetic data.

struct LinearWorldConfig {
  int dim = 30;
  int points = 6000;
  double noise = 0.05;
  double heldout_fraction = 0.1;
  double test_fraction = 0.2;
  double logged_fraction = 0.5;
};

/// Points uniform in [0,1]^dim labeled by a random hyperplane through the
/// cube center, each label flipped with probability `noise`. Index lists
/// partition the points into a held-out slice (used only to fit the logging
/// hyperplane), logged and online training data, and a test set.
struct LinearWorld {
  Eigen::MatrixXd features;  // one point per row
  Eigen::VectorXi labels;
  Eigen::VectorXd separator;
  double offset = 0.0;
  std::vector<Index> heldout;
  std::vector<Index> logged;
  std::vector<Index> online;
  std::vector<Index> test;

  int dim() const { return static_cast<int>(features.cols()); }
};

LinearWorld make_linear_world(const LinearWorldConfig& config, Rng& rng);

/// Propensity as a linear ramp in |margin| of an approximate separator.
struct PropensityMap {
  Eigen::VectorXd normal;  // hyperplane normal; last entry is the offset
  double max_margin = 1.0;
  double q_min = 0.05;
  bool increasing = true;  // certainty: larger margin, larger propensity

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// One perceptron pass over the held-out slice.
Eigen::VectorXd fit_logging_hyperplane(const LinearWorld& world);

PropensityMap certainty_policy(const LinearWorld& world, double q_min = 0.05);
PropensityMap uncertainty_policy(const LinearWorld& world, double q_min = 0.05);

}  // namespace cfal
