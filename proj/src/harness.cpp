#include "cfal/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace cfal {

using nlohmann::json;

namespace {

template <typename T>
std::vector<T> scalar_or_list(const json& j, const char* key) {
  std::vector<T> out;
  if (j.is_array()) {
    for (const auto& v : j) out.push_back(v.get<T>());
  } else {
    out.push_back(j.get<T>());
  }
  if (out.empty()) throw ConfigError(std::string("'") + key + "' must not be empty");
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

ExperimentConfig parse_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(j,
             {"mode", "seed", "trials", "output", "algorithm", "algorithms", "ablate", "fixture",
              "world", "world_file", "logged", "schedule", "epochs", "delta", "gamma1", "linear",
              "policies", "q_min", "capacity", "eta", "curve_every"},
             "config");
  ExperimentConfig c;
  const std::string mode = j.value("mode", "exact");
  if (mode == "exact") c.mode = Mode::exact;
  else if (mode == "linear") c.mode = Mode::linear;
  else throw ConfigError("mode must be 'exact' or 'linear'");

  c.seed = j.value("seed", std::uint64_t{1});
  c.trials = j.value("trials", Index{1});
  if (c.trials < 1) throw ConfigError("trials must be at least 1");
  c.output = j.value("output", std::string{});
  if (j.contains("algorithm") && j.contains("algorithms")) {
    throw ConfigError("give either 'algorithm' or 'algorithms'");
  }
  const char* alg_key = j.contains("algorithm") ? "algorithm" : "algorithms";
  if (j.contains(alg_key)) {
    c.algorithms.clear();
    for (const auto& name : scalar_or_list<std::string>(j[alg_key], alg_key)) {
      try {
        c.algorithms.push_back(algorithm_from_string(name));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
  }
  try {
    c.ablations = Ablations::without(j.value("ablate", std::string{}));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.delta = j.value("delta", 0.1);
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (j.contains("gamma1")) c.gamma1 = scalar_or_list<double>(j["gamma1"], "gamma1");
  for (double g : c.gamma1)
    if (!(g > 0.0)) throw ConfigError("gamma1 must be positive");

  if (c.mode == Mode::exact) {
    const int sources = j.contains("fixture") + j.contains("world") + j.contains("world_file");
    if (sources != 1) throw ConfigError("exact mode needs exactly one of fixture, world, world_file");
    try {
      if (j.contains("fixture")) {
        c.fixture = j["fixture"].get<std::string>();
        named_fixture(c.fixture);
      } else if (j.contains("world")) {
        c.world = world_from_json(j["world"].dump());
      } else {
        std::filesystem::path p = j["world_file"].get<std::string>();
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        c.world = world_from_json(read_file(p.string()));
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    } catch (const std::logic_error& e) {
      throw ConfigError(e.what());
    }
    if (!j.contains("logged")) throw ConfigError("exact mode needs 'logged'");
    c.logged = j["logged"].get<Index>();
    if (c.logged < 1) throw ConfigError("logged must be at least 1");
    if (j.contains("schedule") == j.contains("epochs")) {
      throw ConfigError("exact mode needs exactly one of schedule, epochs");
    }
    if (j.contains("epochs")) {
      const auto k = j["epochs"].get<Index>();
      if (k < 1 || k > 40) throw ConfigError("epochs must lie in 1..40");
      c.schedule = doubling_schedule(k);
    } else {
      c.schedule = scalar_or_list<Index>(j["schedule"], "schedule");
      for (std::size_t i = 0; i < c.schedule.size(); ++i) {
        if (c.schedule[i] < 1 || (i > 0 && c.schedule[i] < c.schedule[i - 1])) {
          throw ConfigError("schedule must be positive and nondecreasing");
        }
      }
    }
  } else {
    for (const char* key : {"fixture", "world", "world_file", "logged", "schedule", "epochs"}) {
      if (j.contains(key)) throw ConfigError(std::string("'") + key + "' is an exact-mode key");
    }
    if (j.contains("linear")) {
      const auto& l = j["linear"];
      if (!l.is_object()) throw ConfigError("'linear' must be an object");
      check_keys(l, {"dim", "points", "noise", "heldout_fraction", "test_fraction", "logged_fraction"},
                 "linear");
      c.linear.dim = l.value("dim", c.linear.dim);
      c.linear.points = l.value("points", c.linear.points);
      c.linear.noise = l.value("noise", c.linear.noise);
      c.linear.heldout_fraction = l.value("heldout_fraction", c.linear.heldout_fraction);
      c.linear.test_fraction = l.value("test_fraction", c.linear.test_fraction);
      c.linear.logged_fraction = l.value("logged_fraction", c.linear.logged_fraction);
      if (c.linear.dim < 1 || c.linear.points < 10) throw ConfigError("linear world too small");
      if (!(c.linear.noise >= 0.0 && c.linear.noise < 0.5)) throw ConfigError("noise in [0, 0.5)");
    }
    if (j.contains("policies")) c.policies = scalar_or_list<std::string>(j["policies"], "policies");
    for (const auto& p : c.policies)
      if (p != "certainty" && p != "uncertainty") throw ConfigError("unknown policy '" + p + "'");
    c.q_min = j.value("q_min", c.q_min);
    if (!(c.q_min > 0.0 && c.q_min <= 1.0)) throw ConfigError("q_min must lie in (0, 1]");
    if (j.contains("capacity")) c.capacity = scalar_or_list<double>(j["capacity"], "capacity");
    if (j.contains("eta")) c.eta = scalar_or_list<double>(j["eta"], "eta");
    for (double v : c.capacity)
      if (!(v > 0.0)) throw ConfigError("capacity must be positive");
    for (double v : c.eta)
      if (!(v > 0.0)) throw ConfigError("eta must be positive");
    c.curve_every = j.value("curve_every", c.curve_every);
    if (c.curve_every < 1) throw ConfigError("curve_every must be positive");
  }
  return c;
}

std::uint64_t trial_seed(std::uint64_t root, const std::string& algorithm,
                         const std::string& params, Index trial) {
  return mix_seed(mix_seed(root, hash_string(algorithm + "|" + params)),
                  static_cast<std::uint64_t>(trial));
}

struct Task {
  std::size_t grid = 0;  // index into the grid table
  Index trial = 0;
  double gamma1 = 0.0;
  double capacity = 0.0;
  double eta = 0.0;
};

struct TaskOutput {
  std::vector<CurvePoint> points;
  Index horizon = 0;
};

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  try {
    return parse_json(j, base_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(read_file(path), dir.empty() ? "." : dir.string());
}

double auc(const std::vector<TrialCurve>& trials) {
  if (trials.empty()) throw std::invalid_argument("auc needs at least one trial");
  double total = 0.0;
  for (const auto& t : trials) {
    if (t.points.empty()) throw std::invalid_argument("auc of an empty curve");
    const Index horizon = t.horizon > 0 ? t.horizon : t.points.back().labels_used;
    std::size_t p = 0;
    auto error_at = [&](Index l) {
      while (p + 1 < t.points.size() && t.points[p + 1].labels_used <= l) ++p;
      return t.points[p].test_error;
    };
    double prev = error_at(0);
    for (Index l = 0; l < horizon; ++l) {
      const double cur = error_at(l + 1);
      total += cur + prev;
      prev = cur;
    }
  }
  return total / (2.0 * static_cast<double>(trials.size()));
}

ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads) {
  const bool linear = config.mode == Mode::linear;
  std::vector<std::string> policies = linear ? config.policies : std::vector<std::string>{""};

  // Grid table in evaluation order: policy, algorithm, then parameters.
  ExperimentResult result;
  std::vector<Task> tasks;
  for (const auto& policy : policies)
    for (auto alg : config.algorithms) {
      auto add = [&](double g, double c, double e, std::string params) {
        result.grid.push_back({policy, alg, std::move(params), 0.0});
        for (Index t = 0; t < config.trials; ++t)
          tasks.push_back({result.grid.size() - 1, t, g, c, e});
      };
      if (linear) {
        for (double c : config.capacity)
          for (double e : config.eta)
            add(0.0, c, e,
                "policy=" + policy + ";C=" + format_double(c) + ";eta=" + format_double(e));
      } else {
        const std::string ab = effective_ablations(alg, config.ablations).disabled();
        for (double g : config.gamma1)
          add(g, 0.0, 0.0, "gamma1=" + format_double(g) + (ab.empty() ? "" : ";ablate=" + ab));
      }
    }

  // Shared read-only inputs.
  std::optional<FixtureWorld> fixture;
  if (!linear) {
    fixture = config.world ? FixtureWorld{config.world->world, config.world->hypotheses}
                           : named_fixture(config.fixture);
  }
  std::vector<LinearWorld> worlds;
  std::map<std::pair<std::string, Index>, PropensityMap> maps;
  if (linear) {
    for (Index t = 0; t < config.trials; ++t) {
      Rng rng(mix_seed(mix_seed(config.seed, hash_string("world")), static_cast<std::uint64_t>(t)));
      worlds.push_back(make_linear_world(config.linear, rng));
      for (const auto& p : policies) {
        maps.emplace(std::make_pair(p, t), p == "certainty"
                                               ? certainty_policy(worlds.back(), config.q_min)
                                               : uncertainty_policy(worlds.back(), config.q_min));
      }
    }
  }

  std::vector<TaskOutput> outputs(tasks.size());
  parallel_for(tasks.size(), threads, [&](std::size_t i) {
    const Task& task = tasks[i];
    const GridResult& g = result.grid[task.grid];
    TaskOutput& out = outputs[i];
    if (linear) {
      LinearRunConfig rc;
      rc.algorithm = g.algorithm;
      rc.ablations = config.ablations;
      rc.capacity = task.capacity;
      rc.eta = task.eta;
      rc.curve_every = config.curve_every;
      const auto& world = worlds[static_cast<std::size_t>(task.trial)];
      // Logged reveals are part of the data: common to every algorithm and grid point.
      const std::uint64_t reveal_seed =
          mix_seed(mix_seed(config.seed, hash_string("reveal|" + g.policy)),
                   static_cast<std::uint64_t>(task.trial));
      auto res = run_linear(world, maps.at({g.policy, task.trial}), rc, reveal_seed);
      out.points = std::move(res.curve);
      out.horizon = static_cast<Index>(world.online.size());
    } else {
      AlgoConfig ac;
      ac.delta = config.delta;
      ac.gamma1 = task.gamma1;
      ac.schedule = config.schedule;
      ac.ablations = effective_ablations(g.algorithm, config.ablations);
      Environment env(fixture->world,
                      trial_seed(config.seed, to_string(g.algorithm), g.params, task.trial));
      const auto res = run(fixture->hypotheses, ac, env, config.logged);
      for (const auto& e : res.record.epochs)
        out.points.push_back({e.cumulative_queries - e.queries, e.erm_error});
      out.points.push_back({res.record.final_row.cumulative_queries, res.record.output_error});
      out.horizon = ac.online_total();
    }
  });

  std::vector<std::vector<TrialCurve>> per_grid(result.grid.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Task& task = tasks[i];
    const GridResult& g = result.grid[task.grid];
    per_grid[task.grid].push_back({outputs[i].points, outputs[i].horizon});
    for (const auto& p : outputs[i].points)
      result.rows.push_back({to_string(g.algorithm), g.params, task.trial, p.labels_used, p.test_error});
  }
  for (std::size_t gi = 0; gi < result.grid.size(); ++gi) result.grid[gi].auc = auc(per_grid[gi]);

  std::stable_sort(result.rows.begin(), result.rows.end(), [](const CurveRow& a, const CurveRow& b) {
    if (a.algorithm != b.algorithm) return a.algorithm < b.algorithm;
    if (a.params != b.params) return a.params < b.params;
    return a.trial < b.trial;
  });

  for (const auto& policy : policies)
    for (auto alg : config.algorithms) {
      const GridResult* best = nullptr;
      for (const auto& g : result.grid)
        if (g.policy == policy && g.algorithm == alg && (!best || g.auc < best->auc)) best = &g;
      if (best) result.best.push_back(*best);
    }
  return result;
}

std::string curve_csv(const std::vector<CurveRow>& rows) {
  std::string out = "algorithm,params,trial,labels_used,test_error\n";
  for (const auto& r : rows) {
    out += r.algorithm + ',' + r.params + ',' + std::to_string(r.trial) + ',' +
           std::to_string(r.labels_used) + ',' + format_double(r.test_error) + '\n';
  }
  return out;
}

std::string grid_csv(const std::vector<GridResult>& grid) {
  std::string out = "algorithm,params,auc\n";
  for (const auto& g : grid) out += to_string(g.algorithm) + ',' + g.params + ',' + format_double(g.auc) + '\n';
  return out;
}

std::string metadata_json(const ExperimentConfig& config, const ExperimentResult* result) {
  json j;
  j["seed"] = config.seed;
  j["rng"] = std::string(kRngId);
  j["mode"] = config.mode == Mode::exact ? "exact" : "linear";
  j["trials"] = config.trials;
  std::vector<std::string> algs;
  for (auto a : config.algorithms) algs.push_back(to_string(a));
  j["algorithms"] = algs;
  j["ablate"] = config.ablations.disabled();

  json constants;
  constants["clip_rule"] = "inf{M >= 1 : 2 M log_term / count >= tail(M)}";
  if (config.mode == Mode::exact) {
    constants["gamma1"] = config.gamma1;
    constants["delta"] = config.delta;
    constants["lambda_factor"] = 4.0;
    constants["curve_granularity"] = "epoch";
    constants["radius_grid"] = {{"step", 0.01}, {"count", 100}};
    constants["logged"] = config.logged;
    constants["schedule"] = config.schedule;
    constants["world"] = config.world ? "inline" : config.fixture;
  } else {
    constants["loss"] = "squared_hinge";
    constants["step_size"] = "sqrt(eta/(eta+t))";
    constants["q_min"] = config.q_min;
    constants["curve_granularity"] = config.curve_every;
    constants["capacity"] = config.capacity;
    constants["eta"] = config.eta;
    constants["policies"] = config.policies;
    constants["linear"] = {{"dim", config.linear.dim},
                           {"points", config.linear.points},
                           {"noise", config.linear.noise},
                           {"heldout_fraction", config.linear.heldout_fraction},
                           {"test_fraction", config.linear.test_fraction},
                           {"logged_fraction", config.linear.logged_fraction}};
  }
  j["constants"] = constants;

  if (result) {
    json best = json::array();
    for (const auto& g : result->best) {
      best.push_back({{"policy", g.policy},
                      {"algorithm", to_string(g.algorithm)},
                      {"params", g.params},
                      {"auc", format_double(g.auc)}});
    }
    j["best"] = best;
  }
  return j.dump(2) + "\n";
}

}  // namespace cfal
