#include "cfal/verify.hpp"

#include "cfal/active_learner.hpp"
#include "cfal/io.hpp"
#include "cfal/linear_mode.hpp"
#include "cfal/passive_learners.hpp"
#include "cfal/sim_worlds.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <stdexcept>

namespace cfal {

namespace {

VerifyRow row(const std::string& suite, const std::string& check, double value, double bound,
              bool pass) {
  return {suite, check, value, bound, pass};
}

WeightedSamples subset(const WeightedSamples& data, const std::vector<Sample>& samples,
                       const std::vector<Index>& idx) {
  WeightedSamples out{samples, Eigen::VectorXd(static_cast<Index>(idx.size()))};
  for (std::size_t i = 0; i < idx.size(); ++i) out.weight[static_cast<Index>(i)] = data.weight[idx[i]];
  return out;
}

std::vector<VerifyRow> suite_decomposability(std::uint64_t seed) {
  double worst = 0.0;
  Index splits = 0;
  for (int set = 0; set < 50; ++set) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(set)));
    const auto world = random_world(rng, 8, 0.05);
    const auto cls = random_class(rng, 6, 8);
    Environment env(world, rng.bits());
    const auto samples = env.generate_logged(static_cast<Index>(2 + rng.below(300)));
    const auto data = logged_weights(world, samples);
    const ClipConfig clip = set % 2 == 0 ? ClipConfig::none() : ClipConfig::at(1.0 + 20.0 * rng.uniform());
    for (int s = 0; s < 20; ++s, ++splits) {
      std::vector<Index> left, right;
      for (Index i = 0; i < static_cast<Index>(samples.size()); ++i) (rng.bernoulli(0.5) ? left : right).push_back(i);
      if (left.empty()) left.push_back(right.back()), right.pop_back();
      if (right.empty()) right.push_back(left.back()), left.pop_back();
      std::vector<Sample> s1, s2;
      for (auto i : left) s1.push_back(samples[static_cast<std::size_t>(i)]);
      for (auto i : right) s2.push_back(samples[static_cast<std::size_t>(i)]);
      const auto d1 = subset(data, s1, left);
      const auto d2 = subset(data, s2, right);
      const double n1 = static_cast<double>(s1.size()), n2 = static_cast<double>(s2.size());
      for (Index h = 0; h < cls.size(); ++h) {
        const double whole = clipped_second_moment(cls[h], data, clip);
        const double parts = (n1 * clipped_second_moment(cls[h], d1, clip) +
                              n2 * clipped_second_moment(cls[h], d2, clip)) / (n1 + n2);
        worst = std::max(worst, std::abs(whole - parts));
      }
    }
  }
  return {row("decomposability", "max |hvar(S) - split average| over " + std::to_string(splits) + " splits",
              worst, 1e-12, worst <= 1e-12)};
}

struct MisCase {
  std::string name;
  FiniteWorld world;
  HypothesisClass cls;
  Index h;
  Index logged;
  std::vector<Index> schedule;
};

std::vector<VerifyRow> suite_mis_unbiased(std::uint64_t seed, Index draws) {
  std::vector<MisCase> cases;
  {
    auto f = fixture_table1(0.05, 0.005);
    cases.push_back({"table1", f.world, f.hypotheses, 1, 20, {2, 4, 8}});
  }
  {
    auto f = fixture_example2(0.1, 0.0025, 20, 6);
    cases.push_back({"example2", f.world, f.hypotheses, 1, 20, {2, 4}});
  }
  {
    Rng rng(mix_seed(seed, 77));
    auto world = random_world(rng, 6, 0.1);
    auto cls = random_class(rng, 4, 6);
    cases.push_back({"random", world, cls, 0, 20, {2, 4, 8}});
  }
  std::vector<VerifyRow> out;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto& mc = cases[c];
    const PolicyStack stack(mc.logged, mc.schedule);
    const Index k = stack.epochs();
    Environment env(mc.world, mix_seed(seed, 1000 + c));
    const auto h = mc.cls[mc.h];
    double sum = 0.0, sum_sq = 0.0;
    for (Index d = 0; d < draws; ++d) {
      auto samples = env.generate_logged(mc.logged);
      env.open_stream(stack.online_before(k));
      for (Index e = 1; e <= k; ++e)
        for (Index t = 0; t < stack.tau(e); ++t) {
          const Index x = env.draw();
          const bool z = stack.query(mc.world.q0()[x], e) == 1;
          samples.push_back({x, z, z ? env.hidden_label() : 0, static_cast<int>(e)});
        }
      const double v = mis_loss(h, samples, mc.world, stack, k);
      sum += v;
      sum_sq += v * v;
    }
    const double n = static_cast<double>(draws);
    const double mean = sum / n;
    const double se = std::sqrt(std::max(0.0, sum_sq / n - mean * mean) / n);
    const double exact = population_error(mc.world, h);
    const double z = se > 0.0 ? std::abs(mean - exact) / se : (mean == exact ? 0.0 : INFINITY);
    out.push_back(row("mis-unbiased", mc.name + ": |mean - l(h)| / SE", z, 4.0, z <= 4.0));
  }
  return out;
}

struct StackCase {
  FiniteWorld world;
  PolicyStack stack;
};

StackCase random_stack(std::uint64_t seed, int i) {
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
  auto world = random_world(rng, 10, 0.01 + 0.5 * rng.uniform());
  const auto m = static_cast<Index>(1 + rng.below(300));
  const auto epochs = 1 + rng.below(8);
  std::vector<Index> schedule;
  Index t = static_cast<Index>(1 + rng.below(8));
  for (std::size_t e = 0; e < epochs; ++e) {
    schedule.push_back(t);
    t += static_cast<Index>(rng.below(static_cast<std::size_t>(2 * t + 1)));
  }
  return {std::move(world), PolicyStack(m, schedule)};
}

std::vector<VerifyRow> suite_debias_closed_form(std::uint64_t seed) {
  Index mismatches = 0, checks = 0;
  for (int i = 0; i < 100; ++i) {
    const auto c = random_stack(seed, i);
    for (Index k = 1; k <= c.stack.epochs(); ++k)
      for (Index x = 0; x < c.world.size(); ++x, ++checks) {
        const double q = c.world.q0()[x];
        if (debias_policy(q, k, c.stack) != debias_closed_form(q, k, c.stack)) ++mismatches;
      }
  }
  return {row("debias-closed-form", "mismatches over " + std::to_string(checks) + " (instance, epoch)",
              static_cast<double>(mismatches), 0.0, mismatches == 0)};
}

std::vector<VerifyRow> suite_weight_bound(std::uint64_t seed) {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto c = random_stack(seed, i);
    const double m = static_cast<double>(c.stack.logged_size());
    for (Index k = 0; k <= c.stack.epochs(); ++k)
      for (Index x = 0; x < c.world.size(); ++x) {
        const double q = c.world.q0()[x];
        const double nk = static_cast<double>(c.stack.online_before(k));
        worst = std::max(worst, mis_weight(q, k, c.stack) / ((m + nk) / (0.5 * m * q + nk)));
      }
  }
  return {row("weight-bound", "max w_k / bound", worst, 1.0, worst <= 1.0)};
}

/// Calls `visit` on the state at the start of every epoch k >= 1 (with M_k
/// and the epoch ERM filled in) of seeded runs on random worlds.
void visit_epoch_states(std::uint64_t seed, int runs,
                        const std::function<void(const HypothesisClass&, const FiniteWorld&,
                                                 const EpochState&)>& visit) {
  for (int r = 0; r < runs; ++r) {
    Rng rng(mix_seed(seed, 500 + static_cast<std::uint64_t>(r)));
    const auto base = random_world(rng, 8, 0.05);
    // Nearly deterministic labels so that candidate sets actually shrink.
    const Eigen::VectorXd label_prob =
        (base.label_prob().array() > 0.5).select(Eigen::VectorXd::Constant(8, 0.98),
                                                 Eigen::VectorXd::Constant(8, 0.02));
    const FiniteWorld world(base.mass(), label_prob, base.q0());
    const auto cls = random_class(rng, 12, 8);
    AlgoConfig config;
    config.schedule = doubling_schedule(1 + static_cast<Index>(r % 4));
    Environment env(world, rng.bits());
    auto logged = env.generate_logged(3000);
    auto state = initial_state(cls, config, std::move(logged), env.logged_truth());
    env.open_stream(config.online_total());
    while (state.k < state.stack.epochs()) {
      state = run_epoch(cls, std::move(state), config, env);
      state.clip = epoch_clip_threshold(world, cls, state, config);
      state.erm = epoch_erm(cls, world, state);
      visit(cls, world, state);
    }
  }
}

std::vector<VerifyRow> suite_label_flip(std::uint64_t seed) {
  Index differences = 0, flipped = 0, pairs = 0;
  visit_epoch_states(seed, 100, [&](const HypothesisClass& cls, const FiniteWorld& world,
                                    const EpochState& state) {
    const auto data = epoch_weights(world, state);
    const auto dis = disagreement_region(cls, state.candidates);
    std::vector<Sample> mutated = state.data;
    for (auto& s : mutated)
      if (s.z && !dis[s.x]) {
        s.y = -s.y;
        ++flipped;
      }
    const WeightedSamples other{mutated, data.weight};
    const auto clip = ClipConfig::at(state.clip);
    for (auto a : state.candidates.members)
      for (auto b : state.candidates.members) {
        ++pairs;
        if (clipped_loss_difference(cls[a], cls[b], data, clip) !=
                clipped_loss_difference(cls[a], cls[b], other, clip) ||
            clipped_pair_second_moment(cls[a], cls[b], data, clip) !=
                clipped_pair_second_moment(cls[a], cls[b], other, clip)) {
          ++differences;
        }
      }
  });
  return {row("label-flip", "pairs changed by out-of-DIS flips (" + std::to_string(pairs) + " pairs)",
              static_cast<double>(differences), 0.0, differences == 0),
          row("label-flip", "labels flipped", static_cast<double>(flipped), 1.0, flipped >= 1)};
}

std::vector<VerifyRow> suite_favorable_bias(std::uint64_t seed) {
  Index violations = 0, checks = 0;
  visit_epoch_states(seed, 100, [&](const HypothesisClass& cls, const FiniteWorld& world,
                                    const EpochState& state) {
    const auto inferred = epoch_weights(world, state);
    const auto truth = stack_weights(world, state.stack, state.k, state.truth);
    const auto clip = ClipConfig::at(state.clip);
    for (auto h : state.candidates.members) {
      ++checks;
      const double a = clipped_loss(cls[h], inferred, clip);
      const double b = clipped_loss(cls[h], truth, clip);
      const double c = clipped_loss(cls[h], truth, ClipConfig::none());
      if (!(a <= b && b <= c)) ++violations;
    }
  });
  return {row("favorable-bias", "violations of l(h;S~,M) <= l(h;S,M) <= l(h;S) over " +
                                    std::to_string(checks) + " checks",
              static_cast<double>(violations), 0.0, violations == 0)};
}

std::vector<VerifyRow> suite_theorem2(std::uint64_t seed, Index trials) {
  const auto [world, cls] = theorem2_world(0.3, 1000);
  const double log_term = std::log(static_cast<double>(cls.size()) / 0.1);
  Index unreg_h2 = 0, reg_h1 = 0;
  for (Index t = 0; t < trials; ++t) {
    Environment env(world, mix_seed(seed, static_cast<std::uint64_t>(t)));
    const auto samples = env.generate_logged(1000);
    if (erm(cls, samples, world) == 1) ++unreg_h2;
    if (regularized_erm(cls, samples, world, log_term) == 0) ++reg_h1;
  }
  const double n = static_cast<double>(trials);
  const double p2 = static_cast<double>(unreg_h2) / n;
  const double lower = p2 - 1.6448536269514722 * std::sqrt(p2 * (1.0 - p2) / n);
  const double p1 = static_cast<double>(reg_h1) / n;
  return {row("theorem2", "unregularized ERM picks h2 (95% lower bound)", lower, 0.01, lower >= 0.01),
          row("theorem2", "regularized ERM picks h1", p1, 0.95, p1 >= 0.95)};
}

double clip_excess(std::span<const WeightAtom> dist, double m, double log_term, double clip) {
  double mean = 0.0;
  for (const auto& a : dist)
    if (a.value <= clip) mean += a.value * a.prob;
  return std::sqrt(4.0 * log_term / m * mean) + weight_tail(dist, clip, TailVariant::passive);
}

std::vector<VerifyRow> suite_clip_optimality(std::uint64_t seed) {
  double worst = 0.0;
  int found = 0;
  Rng rng(mix_seed(seed, 4242));
  for (int attempt = 0; attempt < 100000 && found < 20; ++attempt) {
    const auto world = random_world(rng, 6, 0.02);
    const double m = static_cast<double>(50 + rng.below(5000));
    const double log_term = 1.0 + 9.0 * rng.uniform();
    const auto dist = passive_weight_distribution(world);
    const double m0 = choose_clip_threshold(dist, m, log_term, TailVariant::passive);
    if (!(m0 > 1.0)) continue;
    if (std::abs(2.0 * m0 * log_term / m - weight_tail(dist, m0, TailVariant::passive)) > 1e-12) continue;
    ++found;
    double largest = 1.0;
    for (const auto& a : dist) largest = std::max(largest, a.value);
    double best = INFINITY;
    for (int i = 0; i < 1000; ++i) {
      const double clip = 1.0 + (1.01 * largest - 1.0) * i / 999.0;
      best = std::min(best, clip_excess(dist, m, log_term, clip));
    }
    worst = std::max(worst, clip_excess(dist, m, log_term, m0) / best);
  }
  return {row("clip-optimality", "worlds admitting the defining equality", found, 20, found == 20),
          row("clip-optimality", "max e(M0) / min_grid e(M)", worst, std::numbers::sqrt2,
              worst <= std::numbers::sqrt2)};
}

std::vector<VerifyRow> suite_binomial_tail(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 99));
  double worst = INFINITY;
  for (int i = 0; i < 1000; ++i) {
    const double p = 0.01 + 0.49 * rng.uniform();
    const double t = p * (0.01 + 0.98 * rng.uniform());
    const long n = 1 + static_cast<long>(rng.below(2000));
    const double exact = binomial_lower_tail(n, p, t);
    const double bound = binomial_tail_lower_bound(n, p, t);
    if (bound > 0.0) worst = std::min(worst, exact / bound);
  }
  return {row("binomial-tail", "min Pr(B < nt) / lower bound", worst, 1.0, worst >= 1.0)};
}

std::vector<VerifyRow> suite_gradient(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 31337));
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const auto dim = static_cast<Index>(1 + rng.below(10));
    const auto n = static_cast<Index>(1 + rng.below(20));
    auto model = LinearModel<double>::zero(dim, 1.0, 1.0);
    for (Index j = 0; j <= dim; ++j) model.weights[j] = 0.5 * rng.normal();
    LinearBatch<double> batch{Eigen::MatrixXd(n, dim), Eigen::VectorXi(n), Eigen::VectorXd(n)};
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < dim; ++j) batch.features(i, j) = rng.normal();
      batch.labels[i] = rng.bernoulli(0.5) ? 1 : -1;
      batch.weights[i] = 0.5 + 19.5 * rng.uniform();
    }
    const double clip = 1.0 + 24.0 * rng.uniform();
    const double lambda = 0.01 + 10.0 * rng.uniform();
    const auto g = regularized_objective_gradient(model, batch, clip, lambda);
    Eigen::VectorXd fd(g.size());
    for (Index j = 0; j < g.size(); ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(model.weights[j]));
      auto up = model, down = model;
      up.weights[j] += h;
      down.weights[j] -= h;
      fd[j] = (regularized_objective(up, batch, clip, lambda) -
               regularized_objective(down, batch, clip, lambda)) / (2.0 * h);
    }
    worst = std::max(worst, (g - fd).lpNorm<Eigen::Infinity>() /
                                std::max(1.0, g.lpNorm<Eigen::Infinity>()));
  }
  return {row("gradient", "max |analytic - central difference| / max(1, |g|)", worst, 1e-4, worst < 1e-4)};
}

}  // namespace

double binomial_lower_tail(long n, double p, double t) {
  if (n < 1 || !(p > 0.0 && p < 1.0) || !(t > 0.0)) throw std::invalid_argument("bad binomial parameters");
  const auto last = static_cast<long>(std::ceil(static_cast<double>(n) * t)) - 1;
  double sum = 0.0;
  for (long k = 0; k <= std::min(last, n); ++k) {
    const double dk = static_cast<double>(k), dn = static_cast<double>(n);
    sum += std::exp(std::lgamma(dn + 1.0) - std::lgamma(dk + 1.0) - std::lgamma(dn - dk + 1.0) +
                    dk * std::log(p) + (dn - dk) * std::log1p(-p));
  }
  return std::min(1.0, sum);
}

double binomial_tail_lower_bound(long n, double p, double t) {
  const double d = std::sqrt(4.0 * static_cast<double>(n) * (t - p) * (t - p) / p);
  return d / (d * d + 1.0) * std::exp(-0.5 * d * d) / std::sqrt(2.0 * std::numbers::pi);
}

const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> names{
      "decomposability", "mis-unbiased",   "debias-closed-form", "weight-bound",
      "label-flip",      "favorable-bias", "theorem2",           "clip-optimality",
      "binomial-tail",   "gradient"};
  return names;
}

std::vector<VerifyRow> verify(const std::string& suite, std::uint64_t seed) {
  if (suite == "all") {
    std::vector<VerifyRow> out;
    for (const auto& name : verify_suites()) {
      auto rows = verify(name, seed);
      out.insert(out.end(), rows.begin(), rows.end());
    }
    return out;
  }
  if (suite == "decomposability") return suite_decomposability(seed);
  if (suite == "mis-unbiased") return suite_mis_unbiased(seed, 100000);
  if (suite == "debias-closed-form") return suite_debias_closed_form(seed);
  if (suite == "weight-bound") return suite_weight_bound(seed);
  if (suite == "label-flip") return suite_label_flip(seed);
  if (suite == "favorable-bias") return suite_favorable_bias(seed);
  if (suite == "theorem2") return suite_theorem2(seed, 10000);
  if (suite == "clip-optimality") return suite_clip_optimality(seed);
  if (suite == "binomial-tail") return suite_binomial_tail(seed);
  if (suite == "gradient") return suite_gradient(seed);
  throw std::invalid_argument("unknown verify suite '" + suite + "'");
}

std::string verify_table(const std::vector<VerifyRow>& rows) {
  std::string out = "suite,check,value,bound,status\n";
  for (const auto& r : rows) {
    out += r.suite + ",\"" + r.check + "\"," + format_double(r.value) + ',' + format_double(r.bound) +
           ',' + (r.pass ? "pass" : "FAIL") + '\n';
  }
  return out;
}

bool all_pass(const std::vector<VerifyRow>& rows) {
  for (const auto& r : rows)
    if (!r.pass) return false;
  return true;
}

}  // namespace cfal
