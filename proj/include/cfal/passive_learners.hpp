// passive_learners.hpp
#pragma once

#include "cfal/estimators.hpp"
#include "cfal/hypothesis_space.hpp"

#include <span>
#include <utility>

namespace cfal {

/// Exhaustive argmin of the (optionally clipped) IW loss; lowest index wins ties.
Index erm(const HypothesisClass& cls, std::span<const Sample> samples, const FiniteWorld& world,
          const ClipConfig& clip = {});

/// Exhaustive argmin of l(h; S, M) + sqrt(lambda / m * V(h; S, M)) with
/// lambda = lambda_factor * log_term.
Index regularized_erm(const HypothesisClass& cls, std::span<const Sample> samples,
                      const FiniteWorld& world, double log_term, const ClipConfig& clip = {},
                      double lambda_factor = 4.0);

/// Objective minimized by `regularized_erm` for one hypothesis.
double regularized_objective(const LabelsRef& h, const WeightedSamples& data, double lambda,
                             const ClipConfig& clip);

/// M0 = inf{M >= 1 : 2 M log_term / m >= Pr(1/Q0 > M)}.
double passive_clip_threshold(const FiniteWorld& world, Index logged, double log_term);

/// Right side of the excess-error bound for second-moment regularized ERM
/// holding with probability 1 - delta.
double regularized_erm_bound(const FiniteWorld& world, const HypothesisClass& cls, Index logged,
                             double log_term);

/// Three-instance world on which unregularized IW minimization picks the
/// worse of two hypotheses with constant probability. `logged` is the sample
/// size the construction is tuned to.
std::pair<FiniteWorld, HypothesisClass> theorem2_world(double nu, Index logged);

}  // namespace cfal
