#include "cfal/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cfal {

ClipConfig ClipConfig::at(double threshold) {
  if (!(threshold >= 1.0)) throw std::invalid_argument("clip threshold must be >= 1");
  return ClipConfig(threshold);
}

PolicyStack::PolicyStack(Index logged, std::vector<Index> schedule, QueryRule rule,
                         WeightScheme scheme)
    : logged_(logged), schedule_(std::move(schedule)), rule_(rule), scheme_(scheme) {
  if (logged_ < 1) throw std::invalid_argument("policy stack needs at least one logged sample");
  prefix_.assign(1, 0);
  for (std::size_t i = 0; i < schedule_.size(); ++i) {
    if (schedule_[i] < 1) throw std::invalid_argument("epoch sizes must be positive");
    if (i > 0 && schedule_[i] < schedule_[i - 1]) {
      throw std::invalid_argument("epoch schedule must be nondecreasing");
    }
    prefix_.push_back(prefix_.back() + schedule_[i]);
  }
}

Index PolicyStack::tau(Index k) const {
  if (k == 0) return logged_;
  if (k < 0 || k > epochs()) throw std::out_of_range("epoch index out of range");
  return schedule_[static_cast<std::size_t>(k - 1)];
}

int PolicyStack::query(double q0, Index k) const {
  if (k < 1 || k > epochs()) throw std::out_of_range("query policy index out of range");
  if (rule_ == QueryRule::query_all) return 1;
  return debias_policy(q0, k, *this);
}

double PolicyStack::sample_weight(double q0, int epoch, Index k) const {
  if (scheme_ == WeightScheme::per_epoch_iw) {
    if (epoch == 0) return 1.0 / q0;
    return query(q0, epoch) == 1 ? 1.0 : 0.0;
  }
  return mis_weight(q0, k, *this);
}

WeightedSamples logged_weights(const FiniteWorld& world, std::span<const Sample> samples) {
  WeightedSamples out{samples, Eigen::VectorXd(static_cast<Index>(samples.size()))};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.epoch != 0) throw std::invalid_argument("passive estimators take logged samples only");
    if (s.x < 0 || s.x >= world.size()) throw std::invalid_argument("instance out of range");
    out.weight[static_cast<Index>(i)] = 1.0 / world.q0()[s.x];
  }
  return out;
}

WeightedSamples stack_weights(const FiniteWorld& world, const PolicyStack& stack, Index k,
                              std::span<const Sample> samples) {
  if (k < 0 || k > stack.epochs()) throw std::out_of_range("epoch index out of range");
  // Weights depend on (instance, epoch) only; cache them per instance.
  const Index n_inst = world.size();
  Eigen::MatrixXd cache = Eigen::MatrixXd::Constant(n_inst, k + 1, -1.0);
  WeightedSamples out{samples, Eigen::VectorXd(static_cast<Index>(samples.size()))};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.epoch > k) {
      throw std::invalid_argument("sample from epoch " + std::to_string(s.epoch) +
                                  " given to the epoch-" + std::to_string(k) + " estimator");
    }
    if (s.x < 0 || s.x >= n_inst) throw std::invalid_argument("instance out of range");
    double& w = cache(s.x, s.epoch);
    if (w < 0.0) w = stack.sample_weight(world.q0()[s.x], s.epoch, k);
    out.weight[static_cast<Index>(i)] = w;
  }
  return out;
}

namespace {

void require_nonempty(const WeightedSamples& data) {
  if (data.samples.empty()) throw std::invalid_argument("estimator needs at least one sample");
}

template <typename Term>
double accumulate(const WeightedSamples& data, const ClipConfig& clip, Term term) {
  require_nonempty(data);
  double sum = 0.0;
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const auto& s = data.samples[i];
    const double w = data.weight[static_cast<Index>(i)];
    if (!s.z || !clip.keeps(w)) continue;
    sum += term(s, w);
  }
  return sum / static_cast<double>(data.samples.size());
}

}  // namespace

double clipped_loss(const LabelsRef& h, const WeightedSamples& data, const ClipConfig& clip) {
  return accumulate(data, clip, [&](const Sample& s, double w) {
    return h[s.x] != s.y ? w : 0.0;
  });
}

double clipped_second_moment(const LabelsRef& h, const WeightedSamples& data,
                             const ClipConfig& clip) {
  return accumulate(data, clip, [&](const Sample& s, double w) {
    return h[s.x] != s.y ? w * w : 0.0;
  });
}

double clipped_pair_second_moment(const LabelsRef& h1, const LabelsRef& h2,
                                  const WeightedSamples& data, const ClipConfig& clip) {
  return accumulate(data, clip, [&](const Sample& s, double w) {
    return h1[s.x] != h2[s.x] ? w * w : 0.0;
  });
}

double clipped_loss_difference(const LabelsRef& h1, const LabelsRef& h2,
                               const WeightedSamples& data, const ClipConfig& clip) {
  return accumulate(data, clip, [&](const Sample& s, double w) {
    if (h1[s.x] == h2[s.x]) return 0.0;
    return h1[s.x] != s.y ? w : -w;
  });
}

double iw_loss(const LabelsRef& h, std::span<const Sample> samples, const FiniteWorld& world) {
  return clipped_loss(h, logged_weights(world, samples), ClipConfig::none());
}

double second_moment(const LabelsRef& h, std::span<const Sample> samples, const FiniteWorld& world,
                     const ClipConfig& clip) {
  return clipped_second_moment(h, logged_weights(world, samples), clip);
}

double clipped_iw_loss(const LabelsRef& h, std::span<const Sample> samples,
                       const FiniteWorld& world, double threshold) {
  return clipped_loss(h, logged_weights(world, samples), ClipConfig::at(threshold));
}

double mis_weight(double q0, Index k, const PolicyStack& stack) {
  const double m = static_cast<double>(stack.logged_size());
  double denom = m * q0;
  for (Index i = 1; i <= k; ++i) {
    denom += static_cast<double>(stack.tau(i)) * stack.query(q0, i);
  }
  if (!(denom > 0.0)) throw std::logic_error("MIS weight denominator is zero");
  return static_cast<double>(stack.sample_count(k)) / denom;
}

double mis_loss(const LabelsRef& h, std::span<const Sample> samples, const FiniteWorld& world,
                const PolicyStack& stack, Index k, const ClipConfig& clip) {
  return clipped_loss(h, stack_weights(world, stack, k, samples), clip);
}

double mis_second_moment(const LabelsRef& h, std::span<const Sample> samples,
                         const FiniteWorld& world, const PolicyStack& stack, Index k,
                         const ClipConfig& clip) {
  return clipped_second_moment(h, stack_weights(world, stack, k, samples), clip);
}

double mis_second_moment_pair(const LabelsRef& h1, const LabelsRef& h2,
                              std::span<const Sample> samples, const FiniteWorld& world,
                              const PolicyStack& stack, Index k, const ClipConfig& clip) {
  return clipped_pair_second_moment(h1, h2, stack_weights(world, stack, k, samples), clip);
}

double weight_tail(std::span<const WeightAtom> dist, double threshold, TailVariant variant) {
  const double scale = variant == TailVariant::active ? 2.0 : 1.0;
  double tail = 0.0;
  for (const auto& a : dist)
    if (scale * a.value > threshold) tail += a.prob;
  return tail;
}

double choose_clip_threshold(std::span<const WeightAtom> dist, double count, double log_term,
                             TailVariant variant) {
  if (!(log_term > 0.0)) throw std::invalid_argument("log term must be positive");
  if (!(count > 0.0)) throw std::invalid_argument("sample count must be positive");
  const double slope = 2.0 * log_term / count;
  const double scale = variant == TailVariant::active ? 2.0 : 1.0;

  // Jump points of the tail: it drops by p once M reaches scale * value.
  std::vector<WeightAtom> jumps;
  jumps.reserve(dist.size());
  for (const auto& a : dist)
    if (a.prob > 0.0 && scale * a.value > 1.0) jumps.push_back({scale * a.value, a.prob});
  std::sort(jumps.begin(), jumps.end(),
            [](const WeightAtom& a, const WeightAtom& b) { return a.value < b.value; });
  std::vector<double> suffix(jumps.size() + 1, 0.0);
  for (std::size_t i = jumps.size(); i-- > 0;) suffix[i] = suffix[i + 1] + jumps[i].prob;

  double lo = 1.0;
  std::size_t idx = 0;
  while (true) {
    const double tail = suffix[idx];
    const double hi =
        idx < jumps.size() ? jumps[idx].value : std::numeric_limits<double>::infinity();
    const double candidate = std::max(lo, tail / slope);
    if (candidate < hi) return candidate;
    lo = hi;
    while (idx < jumps.size() && jumps[idx].value == hi) ++idx;
  }
}

std::vector<WeightAtom> passive_weight_distribution(const FiniteWorld& world) {
  std::vector<WeightAtom> out;
  out.reserve(static_cast<std::size_t>(world.size()));
  for (Index x = 0; x < world.size(); ++x) out.push_back({1.0 / world.q0()[x], world.mass()[x]});
  return out;
}

std::vector<WeightAtom> active_weight_distribution(const FiniteWorld& world, Index logged,
                                                   Index online) {
  const double m = static_cast<double>(logged);
  const double n = static_cast<double>(online);
  std::vector<WeightAtom> out;
  out.reserve(static_cast<std::size_t>(world.size()));
  for (Index x = 0; x < world.size(); ++x)
    out.push_back({(m + n) / (m * world.q0()[x] + n), world.mass()[x]});
  return out;
}

std::vector<WeightAtom> empirical_weight_distribution(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("empirical distribution needs values");
  const double p = 1.0 / static_cast<double>(values.size());
  std::vector<WeightAtom> out;
  out.reserve(values.size());
  for (double v : values) out.push_back({v, p});
  return out;
}

int debias_policy(double q0, Index next_epoch, const PolicyStack& stack) {
  if (next_epoch < 1 || next_epoch > stack.epochs()) {
    throw std::out_of_range("debias policy index out of range");
  }
  const double m = static_cast<double>(stack.logged_size());
  double accumulated = m * q0;
  int q = 0;
  for (Index i = 1; i <= next_epoch; ++i) {
    q = accumulated < 0.5 * m * q0 + static_cast<double>(stack.online_before(i)) ? 1 : 0;
    accumulated += static_cast<double>(stack.tau(i)) * q;
  }
  return q;
}

int debias_closed_form(double q0, Index k, const PolicyStack& stack) {
  if (k < 1 || k > stack.epochs()) throw std::out_of_range("debias policy index out of range");
  const double m = static_cast<double>(stack.logged_size());
  return 2.0 * static_cast<double>(stack.online_before(k)) - m * q0 > 0.0 ? 1 : 0;
}

}  // namespace cfal
