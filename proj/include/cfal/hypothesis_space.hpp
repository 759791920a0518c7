// hypothesis_space.hpp
//
// Finite instance spaces, enumerated hypothesis classes and the exact
// population quantities defined over them: error rates, hypothesis
// distances, balls and disagreement regions.
#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace cfal {

using Index = Eigen::Index;

/// One +-1 prediction per instance.
using Labels = Eigen::Matrix<int, 1, Eigen::Dynamic>;
using LabelsRef = Eigen::Ref<const Labels>;
/// Row h holds the predictions of hypothesis h.
using LabelTable = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Membership flag per instance.
using InstanceMask = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Exact joint distribution over a finite instance space together with the
/// logging propensity Q0 of every instance.
class FiniteWorld {
 public:
  FiniteWorld(Eigen::VectorXd mass, Eigen::VectorXd label_prob, Eigen::VectorXd q0);

  Index size() const { return mass_.size(); }
  const Eigen::VectorXd& mass() const { return mass_; }
  /// Pr(Y = +1 | X = x).
  const Eigen::VectorXd& label_prob() const { return label_prob_; }
  const Eigen::VectorXd& q0() const { return q0_; }

  /// q0 = min_x Q0(x).
  double min_propensity() const { return q0_.minCoeff(); }
  /// f(t) = Pr(Q0(X) <= t).
  double propensity_cdf(double t) const;
  /// Probability mass of the instances flagged in `region`.
  double mass_of(const InstanceMask& region) const;

 private:
  Eigen::VectorXd mass_;
  Eigen::VectorXd label_prob_;
  Eigen::VectorXd q0_;
};

class HypothesisClass {
 public:
  explicit HypothesisClass(LabelTable table);

  Index size() const { return table_.rows(); }
  Index instances() const { return table_.cols(); }
  auto operator[](Index h) const { return table_.row(h); }
  int predict(Index h, Index x) const { return table_(h, x); }
  const LabelTable& table() const { return table_; }

  /// Pairs (i, j), i < j, of identical hypotheses.
  std::vector<std::pair<Index, Index>> duplicates() const;

 private:
  LabelTable table_;
};

/// Subset of hypothesis indices, kept sorted.
struct CandidateSet {
  std::vector<Index> members;

  static CandidateSet all(const HypothesisClass& cls);
  Index size() const { return static_cast<Index>(members.size()); }
  bool empty() const { return members.empty(); }
  bool contains(Index h) const;
  bool subset_of(const CandidateSet& other) const;
};

struct BestHypothesis {
  Index index = 0;
  double nu = 0.0;
};

double population_error(const FiniteWorld& world, const LabelsRef& h);
BestHypothesis best_hypothesis(const FiniteWorld& world, const HypothesisClass& cls);
double hypothesis_distance(const FiniteWorld& world, const LabelsRef& h1, const LabelsRef& h2);

/// B(center, r): every hypothesis within distance r of `center`.
CandidateSet ball(const FiniteWorld& world, const HypothesisClass& cls, Index center, double r);

/// Instances on which two members of `set` disagree.
InstanceMask disagreement_region(const HypothesisClass& cls, const CandidateSet& set);

/// theta~(r, t) = Pr(DIS(B(h*, r)) and Q0 <= 1/t) / r.
double modified_dis_coefficient(const FiniteWorld& world, const HypothesisClass& cls, double r,
                                double t);

/// Standard disagreement coefficient theta(r) = theta~(r, 1).
inline double dis_coefficient(const FiniteWorld& world, const HypothesisClass& cls, double r) {
  return modified_dis_coefficient(world, cls, r, 1.0);
}

struct CoefficientSup {
  double value = 0.0;
  double argmax_r = 0.0;
  std::size_t grid_points = 0;
};

/// sup of theta~(r, t) over the radii of `grid` that exceed 2 nu.
CoefficientSup sup_modified_dis_coefficient(const FiniteWorld& world, const HypothesisClass& cls,
                                            const std::vector<double>& grid, double t);

/// Default radius grid {2 nu + k * step : k = 1..count}.
std::vector<double> default_radius_grid(double nu, double step = 0.01, int count = 100);

}  // namespace cfal
