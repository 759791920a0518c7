// Acceptance checks. One line per criterion: status, id, name, measured
// values against pinned bounds, and wall time against its limit.
#include "cfal/active_learner.hpp"
#include "cfal/estimators.hpp"
#include "cfal/harness.hpp"
#include "cfal/io.hpp"
#include "cfal/passive_learners.hpp"
#include "cfal/sim_worlds.hpp"
#include "cfal/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace cfal;

constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<Outcome()> check;
};

std::string num(double v) { return format_double(v); }

Outcome from_suite(const std::string& suite) {
  const auto rows = verify(suite, kSeed);
  Outcome out{all_pass(rows), ""};
  for (const auto& r : rows) {
    if (!out.detail.empty()) out.detail += "; ";
    out.detail += r.check + " = " + num(r.value) + " (bound " + num(r.bound) + (r.pass ? ")" : ", FAIL)");
  }
  return out;
}

Outcome table1_clipping() {
  constexpr double nu = 0.05, alpha = 0.005, delta = 0.01;
  const auto f = fixture_table1(nu, alpha);
  const double eps = nu / (1.0 + 1.0 / (100.0 * alpha));
  const double log_term = std::log(static_cast<double>(f.hypotheses.size()) / delta);
  const double boundary = 24.0 / (5.0 * alpha * eps);
  Outcome out{true, "boundary " + num(boundary)};
  for (double factor : {0.5, 0.9, 1.1, 2.0}) {
    const auto m = static_cast<Index>(std::floor(factor * boundary));
    const double clip = passive_clip_threshold(f.world, m, log_term);
    const bool clips = clip < 1.0 / alpha;
    const bool expected = static_cast<double>(m) <= boundary;
    out.pass = out.pass && clips == expected;
    out.detail += "; m=" + std::to_string(m) + " M=" + num(clip) + (clips ? " clips" : " keeps") +
                  (clips == expected ? "" : " (expected " + std::string(expected ? "clips" : "keeps") + ")");
  }
  // Largest m at which the alpha instances are still clipped, by bisection.
  Index lo = 1, hi = static_cast<Index>(4 * boundary);
  while (hi - lo > 1) {
    const Index mid = (lo + hi) / 2;
    (passive_clip_threshold(f.world, mid, log_term) < 1.0 / alpha ? lo : hi) = mid;
  }
  out.detail += "; observed boundary m=" + std::to_string(lo);
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome consistency() {
  const auto f = fixture_consistency();
  const auto best = best_hypothesis(f.world, f.hypotheses);
  struct Size {
    Index total, epochs;
  };
  const Size sizes[] = {{200, 5}, {800, 7}, {3200, 9}};
  std::vector<double> medians;
  Outcome out;
  for (const auto& s : sizes) {
    AlgoConfig config;
    config.schedule = doubling_schedule(s.epochs);
    const Index logged = s.total - config.online_total();
    std::vector<double> excess;
    for (std::uint64_t r = 0; r < 50; ++r) {
      Environment env(f.world, mix_seed(mix_seed(kSeed, s.total), r));
      excess.push_back(run(f.hypotheses, config, env, logged).record.output_error - best.nu);
    }
    medians.push_back(median(excess));
    out.detail += (out.detail.empty() ? "" : "; ") + std::string("m+n=") + std::to_string(s.total) +
                  " median excess " + num(medians.back());
  }
  const bool nonincreasing = medians[0] >= medians[1] && medians[1] >= medians[2];
  const bool decreased = medians[2] < medians[0];
  out.pass = nonincreasing && decreased && medians[2] < 0.02;
  out.detail += "; bound 0.02 at 3200";
  return out;
}

Outcome example2_queries() {
  constexpr double mu = 0.1;
  constexpr Index logged = 4000, epochs = 6;
  const auto online = doubling_schedule(epochs);
  Index n = 0;
  for (auto t : online) n += t;
  const auto f = fixture_example2(mu, 0.0025, logged, n);
  const double upper = mu * n + 3.0 * std::sqrt(mu * n);
  const double lower = 0.9 * n;
  Index worst_debias = 0, fewest_plain = n;
  for (std::uint64_t r = 0; r < 20; ++r) {
    for (bool debias : {true, false}) {
      AlgoConfig config;
      config.schedule = online;
      if (!debias) config.ablations = Ablations::without("debias");
      Environment env(f.world, mix_seed(mix_seed(kSeed, debias), r));
      const Index q = run(f.hypotheses, config, env, logged).record.final_row.cumulative_queries;
      if (debias) worst_debias = std::max(worst_debias, q);
      else fewest_plain = std::min(fewest_plain, q);
    }
  }
  return {static_cast<double>(worst_debias) <= upper && static_cast<double>(fewest_plain) >= lower,
          "max queries with debias " + std::to_string(worst_debias) + " (bound " + num(upper) +
              "); min queries without " + std::to_string(fewest_plain) + " (bound " + num(lower) + ")"};
}

Outcome figure1() {
  const auto config = load_config(std::string(CFAL_SOURCE_DIR) + "/configs/figure1.json");
  const auto result = run_experiment(config);
  Outcome out{true, ""};
  for (const std::string policy : {"certainty", "uncertainty"}) {
    double vc = INFINITY, passive = INFINITY;
    for (const auto& g : result.best) {
      if (g.policy != policy) continue;
      if (g.algorithm == Algorithm::vc_active) vc = g.auc;
      if (g.algorithm == Algorithm::passive) passive = g.auc;
    }
    out.pass = out.pass && vc < passive;
    out.detail += (out.detail.empty() ? "" : "; ") + policy + ": vc_active " + num(vc) + " vs passive " + num(passive);
  }
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string capture(const std::string& command) {
  std::string out;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) throw std::runtime_error("cannot run " + command);
  char buf[4096];
  while (auto n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  pclose(pipe);
  return out;
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const std::string cli = CFAL_CLI_PATH;
  const fs::path dir = fs::temp_directory_path() / "cfal_determinism";
  fs::create_directories(dir);
  Outcome out{true, ""};
  for (const std::string name : {"linear_smoke", "example2", "consistency"}) {
    std::string runs[2];
    for (int rep = 0; rep < 2; ++rep) {
      const auto csv = (dir / (name + std::to_string(rep) + ".csv")).string();
      const auto stdout_text = capture(cli + " run " + CFAL_SOURCE_DIR + "/configs/" + name + ".json --out " + csv);
      runs[rep] = stdout_text + slurp(csv) + slurp(csv + ".meta.json");
    }
    const bool same = runs[0] == runs[1] && runs[0].size() > 0;
    out.pass = out.pass && same;
    out.detail += name + (same ? " identical; " : " DIFFERS; ");
  }
  const auto v1 = capture(cli + " verify --seed 3");
  const auto v2 = capture(cli + " verify --seed 3");
  const bool same = v1 == v2 && !v1.empty();
  out.pass = out.pass && same;
  out.detail += std::string("verify ") + (same ? "identical" : "DIFFERS");
  fs::remove_all(dir);
  return out;
}

std::vector<Criterion> criteria() {
  return {
      {1, "decomposability", 1.0, [] { return from_suite("decomposability"); }},
      {2, "mis-unbiased", 30.0, [] { return from_suite("mis-unbiased"); }},
      {3, "debias-closed-form", 5.0, [] { return from_suite("debias-closed-form"); }},
      {4, "weight-bound", 5.0, [] { return from_suite("weight-bound"); }},
      {5, "theorem2", 60.0, [] { return from_suite("theorem2"); }},
      {6, "clip-near-optimality", 10.0, [] { return from_suite("clip-optimality"); }},
      {7, "table1-clipping", 5.0, table1_clipping},
      {8, "label-flip-invariance", 10.0, [] { return from_suite("label-flip"); }},
      {9, "consistency", 300.0, consistency},
      {10, "example2-query-savings", 60.0, example2_queries},
      {11, "figure1-ordering", 1800.0, figure1},
      {12, "gradient-check", 10.0, [] { return from_suite("gradient"); }},
      {13, "determinism", 600.0, determinism},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion by number");
  CLI11_PARSE(app, argc, argv);

  bool all = true;
  bool found = false;
  for (const auto& c : criteria()) {
    if (only != 0 && c.id != only) continue;
    found = true;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds <= c.limit_seconds;
    const bool pass = out.pass && in_time;
    all = all && pass;
    std::printf("%s %2d %s: %s [%.2f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                out.detail.c_str(), seconds, c.limit_seconds, in_time ? "" : ", too slow");
    std::fflush(stdout);
  }
  if (!found) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return all ? 0 : 1;
}
