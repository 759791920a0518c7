#include "cfal/hypothesis_space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cfal {

namespace {

void check_width(const FiniteWorld& world, const LabelsRef& h) {
  if (h.size() != world.size()) {
    throw std::invalid_argument("hypothesis has " + std::to_string(h.size()) +
                                " entries, world has " + std::to_string(world.size()) +
                                " instances");
  }
}

}  // namespace

FiniteWorld::FiniteWorld(Eigen::VectorXd mass, Eigen::VectorXd label_prob, Eigen::VectorXd q0)
    : mass_(std::move(mass)), label_prob_(std::move(label_prob)), q0_(std::move(q0)) {
  if (mass_.size() == 0) throw std::invalid_argument("world has no instances");
  if (label_prob_.size() != mass_.size() || q0_.size() != mass_.size()) {
    throw std::invalid_argument("mass, label_prob and q0 must have equal length");
  }
  if ((mass_.array() < 0.0).any()) throw std::invalid_argument("negative instance mass");
  if (std::abs(mass_.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("instance masses must sum to 1");
  }
  if ((label_prob_.array() < 0.0).any() || (label_prob_.array() > 1.0).any()) {
    throw std::invalid_argument("label_prob outside [0, 1]");
  }
  if (!(q0_.array() > 0.0).all() || (q0_.array() > 1.0).any()) {
    throw std::invalid_argument("logging propensity must lie in (0, 1]");
  }
}

double FiniteWorld::propensity_cdf(double t) const {
  return (q0_.array() <= t).select(mass_.array(), 0.0).sum();
}

double FiniteWorld::mass_of(const InstanceMask& region) const {
  if (region.size() != size()) throw std::invalid_argument("region size mismatch");
  return region.select(mass_.array(), 0.0).sum();
}

HypothesisClass::HypothesisClass(LabelTable table) : table_(std::move(table)) {
  if (table_.rows() == 0) throw std::invalid_argument("hypothesis class is empty");
  if (table_.cols() == 0) throw std::invalid_argument("hypotheses have no entries");
  if (!(table_.array().abs() == 1).all()) {
    throw std::invalid_argument("hypothesis entries must be -1 or +1");
  }
}

std::vector<std::pair<Index, Index>> HypothesisClass::duplicates() const {
  std::vector<std::pair<Index, Index>> out;
  for (Index i = 0; i < size(); ++i)
    for (Index j = i + 1; j < size(); ++j)
      if (table_.row(i) == table_.row(j)) out.emplace_back(i, j);
  return out;
}

CandidateSet CandidateSet::all(const HypothesisClass& cls) {
  CandidateSet s;
  s.members.resize(static_cast<std::size_t>(cls.size()));
  for (Index h = 0; h < cls.size(); ++h) s.members[static_cast<std::size_t>(h)] = h;
  return s;
}

bool CandidateSet::contains(Index h) const {
  return std::binary_search(members.begin(), members.end(), h);
}

bool CandidateSet::subset_of(const CandidateSet& other) const {
  return std::includes(other.members.begin(), other.members.end(), members.begin(),
                       members.end());
}

double population_error(const FiniteWorld& world, const LabelsRef& h) {
  check_width(world, h);
  const auto positive = h.transpose().array() == 1;
  const Eigen::ArrayXd wrong =
      positive.select(1.0 - world.label_prob().array(), world.label_prob().array());
  return (world.mass().array() * wrong).sum();
}

BestHypothesis best_hypothesis(const FiniteWorld& world, const HypothesisClass& cls) {
  BestHypothesis best{0, population_error(world, cls[0])};
  for (Index h = 1; h < cls.size(); ++h) {
    const double err = population_error(world, cls[h]);
    if (err < best.nu) best = {h, err};
  }
  return best;
}

double hypothesis_distance(const FiniteWorld& world, const LabelsRef& h1, const LabelsRef& h2) {
  check_width(world, h1);
  check_width(world, h2);
  return (h1.array() != h2.array()).transpose().select(world.mass().array(), 0.0).sum();
}

CandidateSet ball(const FiniteWorld& world, const HypothesisClass& cls, Index center, double r) {
  if (r < 0.0) throw std::invalid_argument("ball radius must be nonnegative");
  if (center < 0 || center >= cls.size()) throw std::invalid_argument("center out of range");
  CandidateSet out;
  for (Index h = 0; h < cls.size(); ++h)
    if (hypothesis_distance(world, cls[center], cls[h]) <= r) out.members.push_back(h);
  return out;
}

InstanceMask disagreement_region(const HypothesisClass& cls, const CandidateSet& set) {
  InstanceMask region = InstanceMask::Constant(cls.instances(), false);
  if (set.members.size() < 2) return region;
  const auto first = cls[set.members.front()];
  for (auto h : set.members) region = region || (cls[h].array() != first.array()).transpose();
  return region;
}

double modified_dis_coefficient(const FiniteWorld& world, const HypothesisClass& cls, double r,
                                double t) {
  if (!(r > 0.0)) throw std::invalid_argument("radius must be positive");
  if (!(t >= 1.0)) throw std::invalid_argument("t must be at least 1");
  const auto star = best_hypothesis(world, cls).index;
  const InstanceMask dis = disagreement_region(cls, ball(world, cls, star, r));
  const InstanceMask low = world.q0().array() <= 1.0 / t;
  return world.mass_of(dis && low) / r;
}

CoefficientSup sup_modified_dis_coefficient(const FiniteWorld& world, const HypothesisClass& cls,
                                            const std::vector<double>& grid, double t) {
  const double nu = best_hypothesis(world, cls).nu;
  CoefficientSup out;
  for (double r : grid) {
    if (!(r > 2.0 * nu) || !(r > 0.0)) continue;
    ++out.grid_points;
    const double v = modified_dis_coefficient(world, cls, r, t);
    if (v > out.value || out.grid_points == 1) {
      out.value = v;
      out.argmax_r = r;
    }
  }
  return out;
}

std::vector<double> default_radius_grid(double nu, double step, int count) {
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count));
  for (int k = 1; k <= count; ++k) grid.push_back(2.0 * nu + k * step);
  return grid;
}

}  // namespace cfal
