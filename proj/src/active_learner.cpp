#include "cfal/active_learner.hpp"

#include "cfal/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cfal {

Ablations Ablations::without(const std::string& names) {
  Ablations a;
  std::stringstream ss(names);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item == "clipping") a.clipping = false;
    else if (item == "regularizer") a.regularizer = false;
    else if (item == "debias") a.debias = false;
    else if (item == "mis") a.mis = false;
    else if (item == "dbal") a.dbal = false;
    else throw std::invalid_argument("unknown ablation '" + item + "'");
  }
  return a;
}

std::string Ablations::disabled() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(clipping, "clipping");
  add(regularizer, "regularizer");
  add(debias, "debias");
  add(mis, "mis");
  add(dbal, "dbal");
  return out;
}

Index AlgoConfig::online_total() const {
  Index n = 0;
  for (auto t : schedule) n += t;
  return n;
}

std::vector<Index> doubling_schedule(Index epochs) {
  std::vector<Index> out;
  for (Index k = 1; k <= epochs; ++k) out.push_back(Index{1} << k);
  return out;
}

double sigma1(double count, double clip, double log_term) {
  return (clip / count + clip * clip / std::pow(count, 1.5)) * log_term;
}

double sigma2(double count, double log_term) { return log_term / count; }

double confidence_at(Index k, double delta) {
  const double kk = static_cast<double>(k);
  return delta / (2.0 * (kk + 1.0) * (kk + 2.0));
}

EpochState initial_state(const HypothesisClass& cls, const AlgoConfig& config,
                         std::vector<Sample> logged, const std::vector<int>& logged_truth) {
  if (!(config.delta > 0.0 && config.delta < 1.0)) throw std::invalid_argument("delta in (0,1)");
  if (!(config.gamma1 > 0.0)) throw std::invalid_argument("gamma1 must be positive");
  if (logged.size() != logged_truth.size()) throw std::invalid_argument("truth size mismatch");
  const auto& ab = config.ablations;
  PolicyStack stack(static_cast<Index>(logged.size()), config.schedule,
                    ab.debias ? QueryRule::debias : QueryRule::query_all,
                    ab.mis ? WeightScheme::mis : WeightScheme::per_epoch_iw);
  std::vector<Sample> truth = logged;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i].z) truth[i].y = logged_truth[i];
  return EpochState{.k = 0,
                    .candidates = CandidateSet::all(cls),
                    .dis_region = InstanceMask::Constant(cls.instances(), true),
                    .data = std::move(logged),
                    .truth = std::move(truth),
                    .stack = std::move(stack),
                    .clip = std::numeric_limits<double>::infinity(),
                    .erm = 0,
                    .queries = {}};
}

namespace {

double largest_weight(const FiniteWorld& world, const PolicyStack& stack, Index k) {
  double out = 1.0;
  for (Index x = 0; x < world.size(); ++x)
    for (Index e = 0; e <= k; ++e) {
      if (e > 0 && stack.query(world.q0()[x], e) == 0) continue;
      out = std::max(out, stack.sample_weight(world.q0()[x], static_cast<int>(e), k));
    }
  return out;
}

double log_class_term(const HypothesisClass& cls, Index k, double delta) {
  return std::log(static_cast<double>(cls.size()) / confidence_at(k, delta));
}

}  // namespace

double epoch_clip_threshold(const FiniteWorld& world, const HypothesisClass& cls,
                            const EpochState& state, const AlgoConfig& config) {
  const auto& stack = state.stack;
  if (!config.ablations.clipping) return largest_weight(world, stack, state.k);
  const Index m = stack.logged_size();
  const Index nk = stack.online_before(state.k);
  const auto dist = active_weight_distribution(world, m, nk);
  return choose_clip_threshold(dist, static_cast<double>(m + nk),
                               log_class_term(cls, state.k, config.delta), TailVariant::active);
}

WeightedSamples epoch_weights(const FiniteWorld& world, const EpochState& state) {
  return stack_weights(world, state.stack, state.k, state.data);
}

Index epoch_erm(const HypothesisClass& cls, const FiniteWorld& world, const EpochState& state) {
  const auto data = epoch_weights(world, state);
  const auto clip = ClipConfig::at(state.clip);
  Index best = state.candidates.members.front();
  double best_loss = std::numeric_limits<double>::infinity();
  for (auto h : state.candidates.members) {
    const double loss = clipped_loss(cls[h], data, clip);
    if (loss < best_loss) {
      best = h;
      best_loss = loss;
    }
  }
  return best;
}

CandidateSet shrink_candidates(const HypothesisClass& cls, const FiniteWorld& world,
                               const EpochState& state, const AlgoConfig& config) {
  const auto data = epoch_weights(world, state);
  const auto clip = ClipConfig::at(state.clip);
  const double count = static_cast<double>(state.stack.sample_count(state.k));
  const double log_term = log_class_term(cls, state.k, config.delta);
  const double s1 = sigma1(count, state.clip, log_term);
  const double s2 = sigma2(count, log_term);
  const auto erm = cls[state.erm];

  CandidateSet next;
  for (auto h : state.candidates.members) {
    double threshold = config.gamma1 * s1;
    if (config.ablations.regularizer) {
      threshold += config.gamma1 * std::sqrt(s2 * clipped_pair_second_moment(cls[h], erm, data, clip));
    }
    if (clipped_loss_difference(cls[h], erm, data, clip) <= threshold) next.members.push_back(h);
  }
  return next;
}

EpochState run_epoch(const HypothesisClass& cls, EpochState state, const AlgoConfig& config,
                     Environment& env, EpochRecord* record) {
  const auto& world = env.world();
  const Index k = state.k;
  if (k >= state.stack.epochs()) throw std::logic_error("no epochs left to run");

  state.clip = epoch_clip_threshold(world, cls, state, config);
  state.erm = epoch_erm(cls, world, state);

  EpochRecord rec;
  rec.k = k;
  rec.clip = state.clip;
  rec.candidates = state.candidates.size();
  rec.dis_mass = world.mass_of(state.dis_region);
  rec.erm_error = population_error(world, cls[state.erm]);

  if (config.ablations.dbal) {
    state.candidates = shrink_candidates(cls, world, state, config);
    state.dis_region = disagreement_region(cls, state.candidates);
  }

  const Index next = k + 1;
  const Index tau = state.stack.tau(next);
  Index queries = 0;
  state.data.reserve(state.data.size() + static_cast<std::size_t>(tau));
  state.truth.reserve(state.truth.size() + static_cast<std::size_t>(tau));
  for (Index t = 0; t < tau; ++t) {
    const Index x = env.draw();
    const bool z = state.stack.query(world.q0()[x], next) == 1;
    const int truth = env.hidden_label();
    int label = 0;
    if (z) {
      if (state.dis_region[x]) {
        label = env.query();
        ++queries;
      } else {
        label = cls.predict(state.erm, x);
      }
    }
    state.data.push_back({x, z, label, static_cast<int>(next)});
    state.truth.push_back({x, z, z ? truth : 0, static_cast<int>(next)});
  }
  state.queries.push_back(queries);
  state.k = next;

  rec.queries = queries;
  rec.cumulative_queries = 0;
  for (auto q : state.queries) rec.cumulative_queries += q;
  if (record) *record = rec;
  return state;
}

Index final_output(const HypothesisClass& cls, const FiniteWorld& world, EpochState& state,
                   const AlgoConfig& config) {
  state.clip = epoch_clip_threshold(world, cls, state, config);
  const auto data = epoch_weights(world, state);
  const auto clip = ClipConfig::at(state.clip);
  const double count = static_cast<double>(state.stack.sample_count(state.k));
  const double log_term = log_class_term(cls, state.k, config.delta);

  Index best = state.candidates.members.front();
  double best_obj = std::numeric_limits<double>::infinity();
  for (auto h : state.candidates.members) {
    double obj = clipped_loss(cls[h], data, clip);
    if (config.ablations.regularizer) {
      obj += config.gamma1 * std::sqrt(log_term / count * clipped_second_moment(cls[h], data, clip));
    }
    if (obj < best_obj) {
      best = h;
      best_obj = obj;
    }
  }
  return best;
}

ActiveResult run(const HypothesisClass& cls, const AlgoConfig& config, Environment& env,
                 Index logged) {
  const auto& world = env.world();
  if (cls.instances() != world.size()) throw std::invalid_argument("class/world size mismatch");
  auto samples = env.generate_logged(logged);
  EpochState state = initial_state(cls, config, std::move(samples), env.logged_truth());
  const Index n = config.online_total();
  env.open_stream(n);

  ActiveResult out;
  RunRecord& rec = out.record;
  rec.logged = logged;
  rec.online = n;
  while (state.k < state.stack.epochs()) {
    EpochRecord row;
    state = run_epoch(cls, std::move(state), config, env, &row);
    rec.epochs.push_back(row);
  }
  out.hypothesis = final_output(cls, world, state, config);
  rec.output = out.hypothesis;
  rec.output_error = population_error(world, cls[out.hypothesis]);

  Index total = 0;
  for (auto q : state.queries) total += q;
  rec.final_row = {state.k,           state.clip, state.candidates.size(),
                   world.mass_of(state.dis_region), 0, total, rec.output_error};

  // Diagnostics over k = 1..K, with M_K the final threshold.
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double q0 = world.min_propensity();
  const double m = static_cast<double>(logged);
  rec.xi = nan;
  rec.max_clip = nan;
  for (Index k = 1; k <= state.k; ++k) {
    const double mk = k < state.k ? rec.epochs[static_cast<std::size_t>(k)].clip : state.clip;
    const double nk = static_cast<double>(state.stack.online_before(k));
    const double ratio = mk / ((m + nk) / (m * q0 + nk));
    rec.xi = std::isnan(rec.xi) ? ratio : std::min(rec.xi, ratio);
    rec.max_clip = std::isnan(rec.max_clip) ? mk : std::max(rec.max_clip, mk);
  }
  rec.alpha = n > 0 ? m / static_cast<double>(n) : std::numeric_limits<double>::infinity();
  return out;
}

std::string run_record_csv(const RunRecord& record) {
  std::string out = "k,M_k,cand_size,dis_mass,queries,cum_queries,test_error_of_erm_k\n";
  auto row = [&](const std::string& k, const EpochRecord& r) {
    out += k + ',' + format_double(r.clip) + ',' + std::to_string(r.candidates) + ',' +
           format_double(r.dis_mass) + ',' + std::to_string(r.queries) + ',' +
           std::to_string(r.cumulative_queries) + ',' + format_double(r.erm_error) + '\n';
  };
  for (const auto& r : record.epochs) row(std::to_string(r.k), r);
  row("final", record.final_row);
  return out;
}

}  // namespace cfal
