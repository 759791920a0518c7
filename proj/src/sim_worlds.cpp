#include "cfal/sim_worlds.hpp"

#include "cfal/passive_learners.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cfal {

Environment::Environment(FiniteWorld world, std::uint64_t seed)
    : world_(std::move(world)), rng_(seed) {
  cdf_.resize(static_cast<std::size_t>(world_.size()));
  double acc = 0.0;
  for (Index x = 0; x < world_.size(); ++x) {
    acc += world_.mass()[x];
    cdf_[static_cast<std::size_t>(x)] = acc;
  }
}

std::pair<Index, int> Environment::draw_pair() {
  const auto x = static_cast<Index>(rng_.discrete(cdf_));
  const int y = rng_.bernoulli(world_.label_prob()[x]) ? 1 : -1;
  return {x, y};
}

std::vector<Sample> Environment::generate_logged(Index m) {
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(m));
  logged_truth_.clear();
  logged_truth_.reserve(static_cast<std::size_t>(m));
  for (Index t = 0; t < m; ++t) {
    const auto [x, y] = draw_pair();
    const bool z = rng_.bernoulli(world_.q0()[x]);
    logged_truth_.push_back(y);
    if (z) ++logged_reveals_;
    out.push_back({x, z, z ? y : 0, 0});
  }
  return out;
}

void Environment::open_stream(Index count) {
  if (count < 0) throw std::invalid_argument("stream size must be nonnegative");
  stream_size_ = count;
  drawn_ = 0;
  current_x_ = -1;
}

Index Environment::draw() {
  if (drawn_ >= stream_size_) throw std::runtime_error("online stream exhausted");
  std::tie(current_x_, current_y_) = draw_pair();
  ++drawn_;
  return current_x_;
}

int Environment::query() {
  if (current_x_ < 0) throw std::logic_error("query before any online draw");
  ++oracle_calls_;
  return current_y_;
}

int Environment::hidden_label() const {
  if (current_x_ < 0) throw std::logic_error("no online draw yet");
  return current_y_;
}

HypothesisClass all_labelings(Index instances) {
  if (instances < 1 || instances > 20) throw std::invalid_argument("1..20 instances supported");
  const Index count = Index{1} << instances;
  LabelTable table(count, instances);
  for (Index h = 0; h < count; ++h)
    for (Index x = 0; x < instances; ++x) table(h, x) = (h >> x) & 1 ? 1 : -1;
  return HypothesisClass(table);
}

FixtureWorld fixture_table1(double nu, double alpha) {
  if (!(nu > 0.0 && nu < 0.1)) throw std::invalid_argument("table1 needs 0 < nu < 1/10");
  if (!(alpha > 0.0 && alpha < 0.01)) throw std::invalid_argument("table1 needs 0 < alpha < 0.01");
  const double eps = nu / (1.0 + 1.0 / (100.0 * alpha));
  Eigen::VectorXd mass(5), label_prob = Eigen::VectorXd::Zero(5), q0(5);
  mass << nu - eps, eps, 4.0 * eps, 16.0 * eps, 1.0 - nu - 20.0 * eps;
  q0 << 1.0, alpha, alpha, 4.0 * alpha, 4.0 * alpha;
  LabelTable table(4, 5);
  table << 1, 1, -1, -1, -1,
           1, -1, 1, -1, -1,
           1, -1, -1, 1, -1,
          -1, -1, -1, -1, 1;
  FixtureWorld out{FiniteWorld(mass, label_prob, q0), HypothesisClass(table)};

  const double expected[4] = {nu, nu + 3.0 * eps, nu + 15.0 * eps, 1.0 - nu - 20.0 * eps};
  for (Index h = 0; h < 4; ++h) {
    if (std::abs(population_error(out.world, out.hypotheses[h]) - expected[h]) > 1e-12) {
      throw std::logic_error("table1 fixture does not reproduce its error rates");
    }
  }
  return out;
}

FixtureWorld fixture_example2(double mu, double alpha, Index logged, Index online, double lambda,
                              double label_prob_x1, double label_prob_x2) {
  if (!(lambda > 1.0)) throw std::invalid_argument("example2 needs lambda > 1");
  if (!(mu > 0.0 && mu <= 1.0 / (4.0 * lambda))) {
    throw std::invalid_argument("example2 needs 0 < mu <= 1/(4 lambda)");
  }
  if (!(alpha > 0.0 && alpha <= mu * mu / (2.0 * lambda))) {
    throw std::invalid_argument("example2 needs 0 < alpha <= mu^2/(2 lambda)");
  }
  if (logged <= 2 * online) throw std::invalid_argument("example2 needs m > 2n");
  Eigen::VectorXd mass(2), label_prob(2), q0(2);
  mass << 1.0 - mu, mu;
  label_prob << label_prob_x1, label_prob_x2;
  q0 << 1.0, alpha;
  return {FiniteWorld(mass, label_prob, q0), all_labelings(2)};
}

FixtureWorld fixture_consistency() {
  constexpr Index kInstances = 20;
  constexpr Index kHypotheses = 32;
  constexpr double kNoise = 0.05;
  Rng rng(20240611);

  Eigen::VectorXd mass(kInstances), q0(kInstances), label_prob(kInstances);
  for (Index x = 0; x < kInstances; ++x) {
    mass[x] = 0.2 + rng.uniform();
    // Every other instance is rarely logged.
    q0[x] = x % 2 == 0 ? 0.05 + 0.15 * rng.uniform() : 0.5 + 0.5 * rng.uniform();
  }
  mass /= mass.sum();

  Labels star(kInstances);
  for (Index x = 0; x < kInstances; ++x) star[x] = rng.bernoulli(0.5) ? 1 : -1;
  for (Index x = 0; x < kInstances; ++x) label_prob[x] = star[x] == 1 ? 1.0 - kNoise : kNoise;

  // Competitors first: every single-instance flip, then distinct flips of two
  // or three instances. The best hypothesis comes last so that ties on
  // unobserved instances do not favor it.
  LabelTable table(kHypotheses, kInstances);
  Index h = 0;
  for (; h < kInstances; ++h) {
    table.row(h) = star;
    table(h, h) = -star[h];
  }
  while (h < kHypotheses - 1) {
    Labels row = star;
    const Index flips = h % 2 == 0 ? 2 : 3;
    for (Index f = 0; f < flips;) {
      const auto x = static_cast<Index>(rng.below(kInstances));
      if (row[x] == star[x]) {
        row[x] = -star[x];
        ++f;
      }
    }
    bool fresh = true;
    for (Index g = kInstances; g < h; ++g) fresh = fresh && table.row(g) != row;
    if (!fresh) continue;
    table.row(h++) = row;
  }
  table.row(kHypotheses - 1) = star;
  // Normalize so the sum is exactly representable to within the world check.
  mass[kInstances - 1] = 1.0 - (mass.sum() - mass[kInstances - 1]);
  return {FiniteWorld(mass, label_prob, q0), HypothesisClass(table)};
}

FiniteWorld random_world(Rng& rng, Index instances, double min_q0) {
  Eigen::VectorXd mass(instances), label_prob(instances), q0(instances);
  for (Index x = 0; x < instances; ++x) {
    mass[x] = -std::log(1.0 - rng.uniform());
    label_prob[x] = rng.uniform();
    q0[x] = min_q0 + (1.0 - min_q0) * rng.uniform();
  }
  mass /= mass.sum();
  mass[instances - 1] = 1.0 - (mass.sum() - mass[instances - 1]);
  return FiniteWorld(mass, label_prob, q0);
}

HypothesisClass random_class(Rng& rng, Index size, Index instances) {
  LabelTable table(size, instances);
  for (Index h = 0; h < size; ++h)
    for (Index x = 0; x < instances; ++x) table(h, x) = rng.bernoulli(0.5) ? 1 : -1;
  return HypothesisClass(table);
}

FixtureWorld named_fixture(const std::string& name) {
  if (name == "theorem2") {
    auto [world, cls] = theorem2_world(0.3, 1000);
    return {std::move(world), std::move(cls)};
  }
  if (name == "table1") return fixture_table1(0.05, 0.005);
  if (name == "example2") return fixture_example2(0.1, 0.0025, 4000, 126);
  if (name == "consistency") return fixture_consistency();
  throw std::invalid_argument("unknown fixture '" + name + "'");
}

LinearWorld make_linear_world(const LinearWorldConfig& config, Rng& rng) {
  if (config.dim < 1 || config.points < 10) throw std::invalid_argument("linear world too small");
  LinearWorld w;
  const Index n = config.points;
  w.features.resize(n, config.dim);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < config.dim; ++j) w.features(i, j) = rng.uniform();
  w.separator.resize(config.dim);
  for (Index j = 0; j < config.dim; ++j) w.separator[j] = rng.normal();
  w.offset = 0.5 * w.separator.sum();
  w.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    const int clean = w.features.row(i).dot(w.separator) - w.offset >= 0.0 ? 1 : -1;
    w.labels[i] = rng.bernoulli(config.noise) ? -clean : clean;
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  rng.shuffle(order);
  const auto n_heldout = static_cast<std::size_t>(std::lround(config.heldout_fraction * n));
  const auto rest = order.size() - n_heldout;
  const auto n_test = static_cast<std::size_t>(std::lround(config.test_fraction * rest));
  w.heldout.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_heldout));
  w.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_heldout),
                order.begin() + static_cast<std::ptrdiff_t>(n_heldout + n_test));
  for (std::size_t i = n_heldout + n_test; i < order.size(); ++i) {
    (rng.bernoulli(config.logged_fraction) ? w.logged : w.online).push_back(order[i]);
  }
  return w;
}

double PropensityMap::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Index d = normal.size() - 1;
  const double margin = std::abs(normal.head(d).dot(x) + normal[d]);
  const double u = std::min(1.0, margin / max_margin);
  return increasing ? q_min + (1.0 - q_min) * u : 1.0 - (1.0 - q_min) * u;
}

Eigen::VectorXd fit_logging_hyperplane(const LinearWorld& world) {
  const Index d = world.dim();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  for (Index i : world.heldout) {
    const double score = world.features.row(i).dot(w.head(d)) + w[d];
    const int y = world.labels[i];
    if (y * score <= 0.0) {
      w.head(d) += y * world.features.row(i).transpose();
      w[d] += y;
    }
  }
  return w;
}

namespace {

PropensityMap ramp_policy(const LinearWorld& world, double q_min, bool increasing) {
  if (!(q_min > 0.0 && q_min <= 1.0)) throw std::invalid_argument("q_min must lie in (0, 1]");
  PropensityMap map;
  map.normal = fit_logging_hyperplane(world);
  map.q_min = q_min;
  map.increasing = increasing;
  const Index d = world.dim();
  double max_margin = 0.0;
  for (const auto* part : {&world.logged, &world.online, &world.test})
    for (Index i : *part)
      max_margin = std::max(max_margin,
                            std::abs(world.features.row(i).dot(map.normal.head(d)) + map.normal[d]));
  if (!(max_margin > 0.0)) throw std::invalid_argument("logging hyperplane has zero margins");
  map.max_margin = max_margin;
  return map;
}

}  // namespace

PropensityMap certainty_policy(const LinearWorld& world, double q_min) {
  return ramp_policy(world, q_min, true);
}

PropensityMap uncertainty_policy(const LinearWorld& world, double q_min) {
  return ramp_policy(world, q_min, false);
}

}  // namespace cfal
