#include "cfal/linear_mode.hpp"

#include <doctest.h>

#include <numeric>

using namespace cfal;

TEST_CASE("squared hinge and its gradient") {
  CHECK(squared_hinge(0.0, 1) == 1.0);
  CHECK(squared_hinge(2.0, 1) == 0.0);
  CHECK(squared_hinge(0.5, -1) == doctest::Approx(2.25));
  auto m = LinearModel<double>::zero(2, 1.0, 1.0);
  m.weights << 0.5, -0.5, 0.25;
  const Eigen::Vector2d x(1.0, 2.0);
  const double h = 1e-6;
  const auto g = squared_hinge_gradient(m, x, -1);
  for (Index j = 0; j < 3; ++j) {
    auto p = m, q = m;
    p.weights[j] += h;
    q.weights[j] -= h;
    CHECK(g[j] == doctest::Approx((squared_hinge(p.score(x), -1) - squared_hinge(q.score(x), -1)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("online gradient step") {
  const auto zero = LinearModel<double>::zero(2, 1.0, 1.0);
  const Eigen::Vector2d x(1.0, 2.0);
  CHECK(ogd_step(zero, x, 1, 0.0, 0).weights == zero.weights);
  const auto one = ogd_step(zero, x, 1, 1.0, 0);
  CHECK(one.weights[0] == doctest::Approx(2.0));
  CHECK(one.weights[1] == doctest::Approx(4.0));
  CHECK(one.weights[2] == doctest::Approx(2.0));
  const auto late = ogd_step(zero, x, 1, 1.0, 100000000);
  CHECK((late.weights - zero.weights).norm() < 1e-3);
  CHECK(step_size(1.0, 3) == doctest::Approx(0.5));
  CHECK_THROWS(ogd_step(zero, x, 1, std::numeric_limits<double>::infinity(), 0));
}

TEST_CASE("invariant step") {
  const auto zero = LinearModel<double>::zero(2, 1.0, 1.0);
  const Eigen::Vector2d x(0.3, -0.2);
  const double w = 1e-5;
  const auto a = ogd_step(zero, x, 1, w, 0), b = invariant_step(zero, x, 1, w, 0);
  CHECK((a.weights - b.weights).norm() < 1e-3 * a.weights.norm());
  const auto big = invariant_step(zero, x, 1, 1e6, 0);
  CHECK(big.score(x) == doctest::Approx(1.0));
  CHECK(invariant_step(big, x, 1, 5.0, 0).weights == big.weights);
  CHECK(invariant_step(zero, x, 1, 0.0, 0).weights == zero.weights);
}

TEST_CASE("float instantiation") {
  auto m = LinearModel<float>::zero(3, 1.0f, 1.0f);
  const Eigen::Vector3f x(1.0f, 0.0f, 0.5f);
  m = ogd_step(m, x, -1, 0.5f, 2);
  CHECK(m.predict(x) == -1);
}

TEST_CASE("regularized objective and gradient") {
  auto m = LinearModel<double>::zero(2, 1.0, 1.0);
  m.weights << 0.2, -0.1, 0.05;
  LinearBatch<double> b;
  b.features.resize(3, 2);
  b.features << 1, 0, 0, 1, 1, 1;
  b.labels.resize(3);
  b.labels << 1, -1, 1;
  b.weights.resize(3);
  b.weights << 1.0, 2.0, 5.0;
  SUBCASE("zero coefficient gives the plain weighted gradient") {
    Eigen::VectorXd plain = Eigen::VectorXd::Zero(3);
    for (Index i = 0; i < 3; ++i)
      plain += b.weights[i] * squared_hinge_gradient(m, Eigen::Vector2d(b.features.row(i)), b.labels[i]);
    CHECK((regularized_objective_gradient(m, b, 10.0, 0.0) - plain / 3.0).norm() < 1e-12);
  }
  SUBCASE("clipped samples drop out") {
    LinearBatch<double> kept = b;
    kept.weights[2] = 0.0;
    CHECK(regularized_objective(m, b, 3.0, 0.0) == doctest::Approx(regularized_objective(m, kept, 3.0, 0.0)));
  }
  SUBCASE("zero loss batch has zero gradient") {
    auto big = m;
    big.weights << 10, -10, 0;
    LinearBatch<double> easy = b;
    easy.features.resize(2, 2);
    easy.features << 1, 0, 0, 1;
    easy.labels.resize(2);
    easy.labels << 1, -1;
    easy.weights.resize(2);
    easy.weights << 1, 1;
    CHECK(regularized_objective_gradient(big, easy, 10.0, 2.0).norm() == 0.0);
  }
  SUBCASE("central differences") {
    const double h = 1e-6;
    const auto g = regularized_objective_gradient(m, b, 10.0, 2.0);
    for (Index j = 0; j < 3; ++j) {
      auto p = m, q = m;
      p.weights[j] += h;
      q.weights[j] -= h;
      const double fd = (regularized_objective(p, b, 10.0, 2.0) - regularized_objective(q, b, 10.0, 2.0)) / (2 * h);
      CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
  CHECK_THROWS(regularized_objective(m, LinearBatch<double>{}, 1.0, 1.0));
}

TEST_CASE("approximate disagreement test") {
  auto m = LinearModel<double>::zero(1, 1.0, 1.0);
  m.weights << 1.0, 0.5;
  Eigen::VectorXd x(1);
  x << 2.0;
  // lhs = |2 * 2.5| / (0.5 * 5) = 2.
  CHECK_FALSE(approx_in_disagreement(m, x, 0.5, 1.0, 4.0, 4.0, 2.0));
  CHECK(approx_in_disagreement(m, x, 0.5, 1.0, 4.0, 4.0, 6.0));
  CHECK(approx_in_disagreement(m, x, 0.5, 1.0, 4.0, 4.0, 2.0, 4.0));
  x << -0.5;
  CHECK(approx_in_disagreement(m, x, 0.5, 1.0, 0.0, 4.0, 1.0));
  x << 1e6;
  CHECK_FALSE(approx_in_disagreement(m, x, 0.5, 1.0, 0.0, 1e6, 1.0));
}

TEST_CASE("covering schedule") {
  CHECK(covering_schedule(14) == std::vector<Index>{2, 4, 8});
  for (Index n = 1; n < 300; ++n) {
    const auto s = covering_schedule(n);
    CHECK(std::accumulate(s.begin(), s.end(), Index{0}) == n);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] >= s[i - 1]);
  }
}

TEST_CASE("algorithm names and ablations") {
  for (auto a : {Algorithm::passive, Algorithm::active_iw, Algorithm::vc_active})
    CHECK(algorithm_from_string(to_string(a)) == a);
  CHECK_THROWS(algorithm_from_string("other"));
  const auto p = effective_ablations(Algorithm::passive, {});
  CHECK_FALSE(p.clipping);
  CHECK_FALSE(p.debias);
  CHECK_FALSE(p.dbal);
  const auto iw = effective_ablations(Algorithm::active_iw, {});
  CHECK_FALSE(iw.clipping);
  CHECK_FALSE(iw.regularizer);
  CHECK(iw.debias);
}

TEST_CASE("linear runs are seeded and monotone in labels") {
  Rng rng(3);
  LinearWorldConfig wc;
  wc.points = 800;
  wc.dim = 5;
  const auto world = make_linear_world(wc, rng);
  const auto policy = certainty_policy(world);
  for (auto alg : {Algorithm::passive, Algorithm::active_iw, Algorithm::vc_active}) {
    LinearRunConfig config;
    config.algorithm = alg;
    config.eta = 0.1;
    config.capacity = 0.16;
    const auto a = run_linear(world, policy, config, 5), b = run_linear(world, policy, config, 5);
    REQUIRE(a.curve.size() == b.curve.size());
    CHECK(a.weights == b.weights);
    CHECK(a.curve.front().labels_used == 0);
    for (std::size_t i = 1; i < a.curve.size(); ++i) CHECK(a.curve[i].labels_used >= a.curve[i - 1].labels_used);
    CHECK(a.curve.back().labels_used == a.queries);
    CHECK(a.curve.back().test_error == doctest::Approx(linear_test_error(world, a.weights)));
    if (alg == Algorithm::passive) CHECK(a.queries == static_cast<Index>(world.online.size()));
    else CHECK(a.queries <= static_cast<Index>(world.online.size()));
  }
}
