#include "cfal/estimators.hpp"
#include "cfal/sim_worlds.hpp"

#include <doctest.h>

#include <cmath>

using namespace cfal;

namespace {

FiniteWorld single(double q0) {
  return FiniteWorld(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), Eigen::VectorXd::Constant(1, q0));
}

Labels constant(Index n, int y) { return Labels::Constant(n, y); }

}  // namespace

TEST_CASE("importance weighted loss") {
  const auto world = single(0.5);
  const std::vector<Sample> s{{0, true, 1, 0}};
  CHECK(iw_loss(constant(1, 1), s, world) == 0.0);
  CHECK(iw_loss(constant(1, -1), s, world) == doctest::Approx(2.0));
  const std::vector<Sample> hidden{{0, false, 0, 0}, {0, false, 0, 0}};
  CHECK(iw_loss(constant(1, -1), hidden, world) == 0.0);
}

TEST_CASE("second moment and clipping") {
  const auto world = single(0.5);
  const std::vector<Sample> s{{0, true, 1, 0}};
  CHECK(second_moment(constant(1, 1), s, world) == 0.0);
  CHECK(second_moment(constant(1, -1), s, world) == doctest::Approx(4.0));
  CHECK(second_moment(constant(1, -1), s, world, ClipConfig::at(1.5)) == 0.0);
  CHECK(clipped_iw_loss(constant(1, -1), s, world, 1.5) == 0.0);
  CHECK(clipped_iw_loss(constant(1, -1), s, world, 2.0) == iw_loss(constant(1, -1), s, world));
}

TEST_CASE("clipped loss keeps only surviving terms") {
  const FiniteWorld world(Eigen::Vector3d(0.4, 0.3, 0.3), Eigen::Vector3d::Ones(), Eigen::Vector3d(1.0, 0.5, 0.1));
  const std::vector<Sample> s{{0, true, 1, 0}, {1, true, 1, 0}, {2, true, 1, 0}, {2, false, 0, 0}};
  const Labels wrong = constant(3, -1);
  // Weights 1, 2, 10; the weight-10 term is clipped at M = 5.
  CHECK(clipped_iw_loss(wrong, s, world, 5.0) == doctest::Approx((1.0 + 2.0) / 4.0));
  CHECK(iw_loss(wrong, s, world) == doctest::Approx((1.0 + 2.0 + 10.0) / 4.0));
}

TEST_CASE("clip config") {
  CHECK_FALSE(ClipConfig::none().active());
  CHECK(ClipConfig::at(3.0).keeps(3.0));
  CHECK_FALSE(ClipConfig::at(3.0).keeps(3.5));
  CHECK_THROWS(ClipConfig::at(0.5));
}

TEST_CASE("clip threshold selection") {
  const std::vector<WeightAtom> dist{{1.0, 0.9}, {10.0, 0.1}};
  const double m0 = choose_clip_threshold(dist, 100.0, std::log(20.0), TailVariant::passive);
  CHECK(m0 == doctest::Approx(1.6690).epsilon(1e-4));
  const std::vector<WeightAtom> ones{{1.0, 1.0}};
  CHECK(choose_clip_threshold(ones, 50.0, 3.0, TailVariant::passive) == 1.0);
  // The active tail counts W > M / 2, so unit weights are kept only from M = 2.
  CHECK(choose_clip_threshold(ones, 50.0, 3.0, TailVariant::active) == 2.0);
  SUBCASE("defining inequality holds at M0 and fails just below") {
    const double log_term = std::log(20.0);
    const auto lhs = [&](double M) { return 2.0 * M * log_term / 100.0; };
    CHECK(lhs(m0) >= weight_tail(dist, m0, TailVariant::passive) - 1e-12);
    CHECK(lhs(m0 * 0.999) < weight_tail(dist, m0 * 0.999, TailVariant::passive));
  }
}

TEST_CASE("weight distributions") {
  const FiniteWorld world(Eigen::Vector2d(0.7, 0.3), Eigen::Vector2d::Ones(), Eigen::Vector2d(1.0, 0.25));
  const auto p = passive_weight_distribution(world);
  double total = 0.0;
  for (const auto& a : p) total += a.prob;
  CHECK(total == doctest::Approx(1.0));
  CHECK(weight_tail(p, 2.0, TailVariant::passive) == doctest::Approx(0.3));
  CHECK(weight_tail(p, 2.0, TailVariant::active) == doctest::Approx(0.3));
  CHECK(weight_tail(p, 10.0, TailVariant::active) == doctest::Approx(0.0));
  const auto a = active_weight_distribution(world, 10, 10);
  double biggest = 0.0;
  for (const auto& atom : a) biggest = std::max(biggest, atom.value);
  CHECK(biggest == doctest::Approx(20.0 / 12.5));
  const std::vector<double> values{1.0, 1.0, 3.0, 5.0};
  CHECK(weight_tail(empirical_weight_distribution(values), 2.0, TailVariant::passive) == doctest::Approx(0.5));
}

TEST_CASE("multiple importance sampling weights") {
  const PolicyStack stack(4, {2});
  CHECK(mis_weight(0.25, 0, stack) == doctest::Approx(4.0));
  CHECK(stack.query(0.5, 1) == 1);
  CHECK(mis_weight(0.5, 1, stack) == doctest::Approx(1.5));
  const PolicyStack all(10, {3, 5}, QueryRule::query_all);
  for (double q : {0.1, 0.5, 1.0})
    CHECK(mis_weight(q, 2, all) == doctest::Approx(18.0 / (10.0 * q + 8.0)));
}

TEST_CASE("mis loss and second moments") {
  // m = 4, tau_1 = 2: Q1 = 1 at Q0 = 0.5 and Q1 = 0 at Q0 = 1, both weights 1.5.
  const FiniteWorld world(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d::Ones(), Eigen::Vector2d(0.5, 1.0));
  const PolicyStack stack(4, {2});
  CHECK(mis_weight(1.0, 1, stack) == doctest::Approx(1.5));
  const std::vector<Sample> s{{0, true, 1, 1}, {1, true, 1, 1}};
  Labels h(2);
  h << -1, 1;
  CHECK(mis_loss(Labels::Ones(2), s, world, stack, 1) == 0.0);
  CHECK(mis_loss(h, s, world, stack, 1) == doctest::Approx(0.75));
  CHECK(mis_loss(h, s, world, stack, 1, ClipConfig::at(1.0)) == 0.0);
  const std::vector<Sample> one{{0, true, 1, 1}};
  CHECK(mis_second_moment(h, one, world, stack, 1) == doctest::Approx(2.25));
  CHECK(mis_second_moment_pair(h, h, s, world, stack, 1) == 0.0);
  CHECK(mis_second_moment_pair(h, Labels::Ones(2), one, world, stack, 1) == doctest::Approx(2.25));
  const std::vector<Sample> hidden{{0, false, 0, 0}, {1, false, 0, 1}};
  CHECK(mis_second_moment_pair(h, Labels::Ones(2), hidden, world, stack, 1) == 0.0);
}

TEST_CASE("debias policy") {
  const PolicyStack two(10, {2});
  CHECK(debias_policy(0.3, 1, two) == 1);
  CHECK(debias_closed_form(0.3, 1, two) == 1);
  const PolicyStack one(10, {1});
  CHECK(debias_policy(0.3, 1, one) == 0);
  CHECK(debias_closed_form(0.3, 1, one) == 0);
  CHECK(debias_policy(1e-9, 1, one) == 1);
  SUBCASE("recursion matches closed form") {
    const PolicyStack s(50, {2, 4, 8, 16, 32});
    for (Index k = 1; k <= s.epochs(); ++k)
      for (double q = 0.01; q <= 1.0; q += 0.01) CHECK(debias_policy(q, k, s) == debias_closed_form(q, k, s));
  }
}

TEST_CASE("policy stack bookkeeping") {
  const PolicyStack s(10, {2, 4});
  CHECK(s.tau(0) == 10);
  CHECK(s.tau(2) == 4);
  CHECK(s.online_before(2) == 6);
  CHECK(s.sample_count(1) == 12);
  CHECK(PolicyStack(10, {3}, QueryRule::query_all).query(1.0, 1) == 1);
}

TEST_CASE("loss difference ignores labels where hypotheses agree") {
  const FiniteWorld world(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d::Ones(), Eigen::Vector2d(0.5, 0.5));
  std::vector<Sample> s{{0, true, 1, 0}, {1, true, 1, 0}};
  Labels h1(2), h2(2);
  h1 << 1, 1;
  h2 << 1, -1;
  const auto before = clipped_loss_difference(h1, h2, logged_weights(world, s), ClipConfig::none());
  s[0].y = -1;
  const auto after = clipped_loss_difference(h1, h2, logged_weights(world, s), ClipConfig::none());
  CHECK(before == after);
  CHECK(before == doctest::Approx(-1.0));
}

TEST_CASE("stack weights reject later epochs") {
  const FiniteWorld world(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
  const PolicyStack stack(4, {2, 4});
  const std::vector<Sample> s{{0, true, 1, 2}};
  CHECK_THROWS(stack_weights(world, stack, 1, s));
}
