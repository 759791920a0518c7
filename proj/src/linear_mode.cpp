#include "cfal/linear_mode.hpp"

#include <algorithm>
#include <limits>

namespace cfal {

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "passive") return Algorithm::passive;
  if (name == "active_iw") return Algorithm::active_iw;
  if (name == "vc_active") return Algorithm::vc_active;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::passive: return "passive";
    case Algorithm::active_iw: return "active_iw";
    case Algorithm::vc_active: return "vc_active";
  }
  return "unknown";
}

Ablations effective_ablations(Algorithm algorithm, const Ablations& extra) {
  Ablations a = extra;
  if (algorithm == Algorithm::passive) {
    a = Ablations{false, false, false, false, false};
  } else if (algorithm == Algorithm::active_iw) {
    a.clipping = false;
    a.regularizer = false;
  }
  return a;
}

std::vector<Index> covering_schedule(Index online) {
  if (online < 1) throw std::invalid_argument("online stream must be nonempty");
  std::vector<Index> out;
  Index remaining = online;
  for (Index k = 1; remaining > 0; ++k) {
    const Index full = Index{1} << k;
    const Index t = remaining < full + (full << 1) ? remaining : full;
    out.push_back(t);
    remaining -= t;
  }
  return out;
}

double linear_test_error(const LinearWorld& world, const Eigen::VectorXd& weights) {
  if (world.test.empty()) throw std::invalid_argument("linear world has no test split");
  const Index d = world.dim();
  Index wrong = 0;
  for (Index i : world.test) {
    const double s = world.features.row(i).dot(weights.head(d)) + weights[d];
    if ((s >= 0.0 ? 1 : -1) != world.labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(world.test.size());
}

namespace {

struct Accumulators {
  double count = 0.0;
  double zero_one_moment = 0.0;   // sum w^2 1{prediction wrong} over kept samples
  double surrogate_moment = 0.0;  // sum w^2 l over kept samples

  double zero_one() const { return count > 0.0 ? zero_one_moment / count : 0.0; }
  double surrogate() const { return count > 0.0 ? surrogate_moment / count : 0.0; }
};

}  // namespace

LinearRunResult run_linear(const LinearWorld& world, const PropensityMap& propensity,
                           const LinearRunConfig& config, std::uint64_t seed) {
  if (!(config.capacity > 0.0) || !(config.eta > 0.0)) {
    throw std::invalid_argument("capacity and eta must be positive");
  }
  if (config.curve_every < 1) throw std::invalid_argument("curve granularity must be positive");
  if (world.logged.empty() || world.online.empty()) {
    throw std::invalid_argument("linear world needs logged and online data");
  }
  const Ablations ab = effective_ablations(config.algorithm, config.ablations);
  const bool passive = config.algorithm == Algorithm::passive;
  const Index d = world.dim();
  const Index m = static_cast<Index>(world.logged.size());
  const Index n = static_cast<Index>(world.online.size());
  const double cap = config.capacity;
  Rng rng(seed);

  // The learner sees features relative to the cube center when asked to.
  const Eigen::MatrixXd features =
      config.center_features ? Eigen::MatrixXd(world.features.array() - 0.5) : world.features;
  Eigen::MatrixXd test_features(static_cast<Index>(world.test.size()), d);
  Eigen::VectorXi test_labels(static_cast<Index>(world.test.size()));
  for (std::size_t i = 0; i < world.test.size(); ++i) {
    test_features.row(static_cast<Index>(i)) = features.row(world.test[i]);
    test_labels[static_cast<Index>(i)] = world.labels[world.test[i]];
  }
  auto test_error = [&](const Eigen::VectorXd& w) {
    const Eigen::VectorXd s = (test_features * w.head(d)).array() + w[d];
    Index wrong = 0;
    for (Index i = 0; i < s.size(); ++i) wrong += (s[i] >= 0.0 ? 1 : -1) != test_labels[i];
    return static_cast<double>(wrong) / static_cast<double>(s.size());
  };

  Eigen::VectorXd q_logged(m), q_online(n);
  for (Index i = 0; i < m; ++i) q_logged[i] = propensity(world.features.row(world.logged[i]).transpose());
  for (Index i = 0; i < n; ++i) q_online[i] = propensity(world.features.row(world.online[i]).transpose());
  std::vector<bool> revealed(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) revealed[static_cast<std::size_t>(i)] = rng.bernoulli(q_logged[i]);

  const PolicyStack stack(m, covering_schedule(n),
                          ab.debias ? QueryRule::debias : QueryRule::query_all,
                          ab.mis ? WeightScheme::mis : WeightScheme::per_epoch_iw);

  auto clip_at = [&](Index k) {
    if (passive) return std::numeric_limits<double>::infinity();
    const double nk = static_cast<double>(stack.online_before(k));
    const double md = static_cast<double>(m);
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(m + n));
    for (Index i = 0; i < m; ++i) values.push_back((md + nk) / (md * q_logged[i] + nk));
    for (Index i = 0; i < n; ++i) values.push_back((md + nk) / (md * q_online[i] + nk));
    if (!ab.clipping) return *std::max_element(values.begin(), values.end());
    const auto dist = empirical_weight_distribution(values);
    return choose_clip_threshold(dist, md + nk, cap, TailVariant::active);
  };

  LinearRunResult out;
  auto model = LinearModel<double>::zero(d, config.eta, cap);
  Accumulators acc;
  Index t = 0;

  auto train = [&](const auto& x, int y, double w, double clip) {
    acc.count += 1.0;
    if (w > clip || w == 0.0) return;
    const double s = model.score(x);
    double effective = w;
    if (ab.regularizer) {
      const double v = acc.surrogate();
      if (v > 0.0) effective += std::sqrt(cap / acc.count) / (2.0 * std::sqrt(v)) * w * w;
    }
    acc.zero_one_moment += w * w * ((s >= 0.0 ? 1 : -1) != y ? 1.0 : 0.0);
    acc.surrogate_moment += w * w * squared_hinge(s, y);
    ++t;
    model = config.invariant_updates ? invariant_step(model, x, y, effective, t)
                                     : ogd_step(model, x, y, effective, t);
  };

  // Logged data, weighted for the epoch-0 estimator.
  const double clip0 = clip_at(0);
  out.clips.push_back(clip0);
  for (Index i = 0; i < m; ++i) {
    const Index row = world.logged[i];
    if (!revealed[static_cast<std::size_t>(i)]) {
      acc.count += 1.0;
      continue;
    }
    const double w = passive ? 1.0 / q_logged[i] : stack.sample_weight(q_logged[i], 0, 0);
    train(features.row(row).transpose(), world.labels[row], w, clip0);
  }
  out.curve.push_back({0, test_error(model.weights)});

  Index seen = 0;
  for (Index k = 0; k < stack.epochs(); ++k) {
    const double clip = k == 0 ? clip0 : clip_at(k);
    if (k > 0) out.clips.push_back(clip);
    const Index next = k + 1;
    const double count = static_cast<double>(stack.sample_count(k));
    for (Index j = 0; j < stack.tau(next); ++j, ++seen) {
      const Index row = world.online[seen];
      const auto x = features.row(row).transpose();
      const double q = q_online[seen];
      if (passive) {
        const int y = world.labels[row];
        ++out.queries;
        train(x, y, 1.0, clip);
      } else if (stack.query(q, next) == 0) {
        acc.count += 1.0;
      } else {
        const bool inside =
            !ab.dbal || approx_in_disagreement(model, x, step_size(model.eta, t + 1), cap,
                                               ab.regularizer ? acc.zero_one() : 0.0, count, clip,
                                               config.per_sample_test ? count : 1.0);
        int y;
        if (inside) {
          y = world.labels[row];
          ++out.queries;
        } else {
          y = model.predict(x);
        }
        train(x, y, stack.sample_weight(q, static_cast<int>(next), next), clip);
      }
      if ((seen + 1) % config.curve_every == 0 || seen + 1 == n) {
        out.curve.push_back({out.queries, test_error(model.weights)});
      }
    }
  }
  // Report the classifier on raw features.
  out.weights = model.weights;
  if (config.center_features) out.weights[d] -= 0.5 * out.weights.head(d).sum();
  return out;
}

}  // namespace cfal
