// active_learner.hpp
//
// Disagreement-based active learning with logged observational data: the
// epoch loop that clips, shrinks the candidate set, derives the debias query
// policy, queries or infers labels, and returns a second-moment regularized
// minimizer of the clipped MIS loss.
#pragma once

#include "cfal/estimators.hpp"
#include "cfal/hypothesis_space.hpp"
#include "cfal/sim_worlds.hpp"

#include <string>
#include <vector>

namespace cfal {

/// Components that can be switched off for ablation studies.
struct Ablations {
  bool clipping = true;     ///< off: M_k is the largest weight, nothing is clipped
  bool regularizer = true;  ///< off: no second-moment terms in shrink or final output
  bool debias = true;       ///< off: Q_k = 1
  bool mis = true;          ///< off: per-epoch importance weights (l_IS)
  bool dbal = true;         ///< off: V_k = H and D_k = X

  /// Parses a comma separated list of component names to switch off.
  static Ablations without(const std::string& names);
  std::string disabled() const;
};

struct AlgoConfig {
  double delta = 0.1;
  double gamma1 = 4.0;
  std::vector<Index> schedule;
  Ablations ablations;

  Index online_total() const;
};

/// tau_k = 2^k for k = 1..epochs.
std::vector<Index> doubling_schedule(Index epochs);

double sigma1(double count, double clip, double log_term);
double sigma2(double count, double log_term);
/// delta_k = delta / (2 (k + 1) (k + 2)).
double confidence_at(Index k, double delta);

struct EpochState {
  Index k = 0;
  CandidateSet candidates;         // V_k
  InstanceMask dis_region;         // D_k
  std::vector<Sample> data;        // S~_k, queried or inferred labels
  std::vector<Sample> truth;       // S_k, true labels; simulator side only
  PolicyStack stack;
  double clip = 0.0;               // M_k
  Index erm = 0;                   // h^_k
  std::vector<Index> queries;      // U_0 .. U_{k-1}
};

struct EpochRecord {
  Index k = 0;
  double clip = 0.0;
  Index candidates = 0;
  double dis_mass = 0.0;
  Index queries = 0;
  Index cumulative_queries = 0;
  double erm_error = 0.0;
};

struct RunRecord {
  std::vector<EpochRecord> epochs;
  EpochRecord final_row;  // k = K, M_K, |V_K|, Pr(D_K), total queries, l(h^)
  Index output = 0;
  double output_error = 0.0;
  Index logged = 0;
  Index online = 0;
  double xi = 0.0;        // min_k M_k / max MIS weight
  double max_clip = 0.0;  // M-bar
  double alpha = 0.0;     // m / n
};

struct ActiveResult {
  Index hypothesis = 0;
  RunRecord record;
};

/// State before the first epoch: S~_0 = T_0, V_0 = H, D_0 = X.
EpochState initial_state(const HypothesisClass& cls, const AlgoConfig& config,
                         std::vector<Sample> logged, const std::vector<int>& logged_truth);

/// M_k from the exact weight distribution of the world.
double epoch_clip_threshold(const FiniteWorld& world, const HypothesisClass& cls,
                            const EpochState& state, const AlgoConfig& config);

/// Weights of S~_k under the configured estimator.
WeightedSamples epoch_weights(const FiniteWorld& world, const EpochState& state);

/// argmin over V_k of the clipped loss; lowest index wins ties.
Index epoch_erm(const HypothesisClass& cls, const FiniteWorld& world, const EpochState& state);

/// V_{k+1}; requires state.clip and state.erm for epoch k.
CandidateSet shrink_candidates(const HypothesisClass& cls, const FiniteWorld& world,
                               const EpochState& state, const AlgoConfig& config);

/// One full iteration of the epoch loop. Returns the state for k + 1 and
/// fills `record` with the diagnostics of epoch k.
EpochState run_epoch(const HypothesisClass& cls, EpochState state, const AlgoConfig& config,
                     Environment& env, EpochRecord* record = nullptr);

/// Final regularized output over V_K; computes M_K into state.clip.
Index final_output(const HypothesisClass& cls, const FiniteWorld& world, EpochState& state,
                   const AlgoConfig& config);

/// Draws m logged samples from `env` and runs all epochs.
ActiveResult run(const HypothesisClass& cls, const AlgoConfig& config, Environment& env,
                 Index logged);

/// Per-epoch CSV rows followed by a `final` footer row.
std::string run_record_csv(const RunRecord& record);

}  // namespace cfal
