// Command-line driver: dataset generation, bulk-load statistics, workload
// benchmarks, agent training and range benchmarks.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "uplif/benchmark.hpp"
#include "uplif/dataset.hpp"
#include "uplif/index.hpp"
#include "uplif/tuner.hpp"

namespace {

using namespace uplif;

std::uint64_t effective_seed(std::uint64_t flag) {
  const char* env = std::getenv("UPLIF_SEED");
  if (!env || !*env) return flag;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') throw Error(std::string("UPLIF_SEED is not an unsigned integer: ") + env);
  return v;
}

Backend parse_backend(const std::string& s) {
  if (s == "rb") return Backend::kRedBlack;
  if (s == "bp") return Backend::kBPlus;
  throw Error("unknown backend '" + s + "' (expected rb or bp)");
}

std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

struct AgentFlag {
  bool enabled = false;
  std::string qtable;
};

AgentFlag parse_agent(const std::string& s) {
  if (s == "off") return {};
  const std::string prefix = "qtable:";
  if (s.rfind(prefix, 0) == 0 && s.size() > prefix.size()) return {true, s.substr(prefix.size())};
  throw Error("--agent must be 'off' or 'qtable:PATH'");
}

void print_metrics(const Metrics& m) {
  std::printf("%s run=%d ops=%llu secs=%.3f throughput_mops=%.4f p50_us=%.3f p99_us=%.3f index_bytes=%zu%s\n",
              m.workload.c_str(), m.run, static_cast<unsigned long long>(m.ops_completed), m.elapsed,
              m.throughput / 1e6, m.p50_us, m.p99_us, m.index_bytes, m.pool_exhausted ? " pool_exhausted" : "");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UpLIF learned index tools"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a key file");
  std::string dist = "lognormal";
  std::size_t gen_n = 0;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  double mu = 0.0, sigma = 1.0;
  gen->add_option("--dist", dist, "lognormal or uniform")->check(CLI::IsMember({"lognormal", "uniform"}));
  gen->add_option("--n", gen_n, "number of distinct keys")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_out)->required();
  gen->add_option("--mu", mu);
  gen->add_option("--sigma", sigma)->check(CLI::PositiveNumber);

  // bulk-load
  auto* bl = app.add_subcommand("bulk-load", "bulk-load a key file and report structure statistics");
  std::string bl_data, bl_stats;
  std::string bl_backend = "rb";
  bl->add_option("--data", bl_data)->required();
  bl->add_option("--out-stats", bl_stats);
  bl->add_option("--backend", bl_backend);

  // bench
  auto* bench = app.add_subcommand("bench", "run a timed workload");
  std::string b_data, b_workload = "ro", b_agent = "off", b_report, b_backend = "rb";
  double b_secs = 60.0, b_init = 0.5;
  std::uint64_t b_seed = 1, b_ops = 0;
  int b_runs = 10;
  bench->add_option("--data", b_data)->required();
  bench->add_option("--workload", b_workload)->check(CLI::IsMember({"ro", "rh", "wh", "wo", "shift"}));
  bench->add_option("--secs", b_secs)->check(CLI::NonNegativeNumber);
  bench->add_option("--seed", b_seed);
  bench->add_option("--agent", b_agent, "off or qtable:PATH");
  bench->add_option("--report", b_report);
  bench->add_option("--runs", b_runs)->check(CLI::PositiveNumber);
  bench->add_option("--init-fraction", b_init)->check(CLI::Range(0.0, 1.0));
  bench->add_option("--ops", b_ops, "op limit per run (0 = none)");
  bench->add_option("--backend", b_backend);
  bool b_oracle = false;
  bench->add_flag("--oracle", b_oracle, "run the sorted-map oracle instead of the index");

  // train-agent
  auto* train = app.add_subcommand("train-agent", "train a Q-table on a workload");
  std::string t_data, t_workload = "wh", t_out, t_backend = "rb";
  std::size_t t_steps = 1000;
  std::uint64_t t_seed = 1;
  double t_init = 0.5;
  train->add_option("--data", t_data)->required();
  train->add_option("--workload", t_workload)->check(CLI::IsMember({"ro", "rh", "wh", "wo", "shift"}));
  train->add_option("--steps", t_steps)->check(CLI::PositiveNumber);
  train->add_option("--out-qtable", t_out)->required();
  train->add_option("--seed", t_seed);
  train->add_option("--init-fraction", t_init)->check(CLI::Range(0.0, 1.0));
  train->add_option("--backend", t_backend);

  // range-bench
  auto* rb = app.add_subcommand("range-bench", "random range queries over a bulk-loaded file");
  std::string r_data, r_report;
  std::size_t r_queries = 1000;
  double r_span = 1e-4;
  std::uint64_t r_seed = 1;
  rb->add_option("--data", r_data)->required();
  rb->add_option("--queries", r_queries)->check(CLI::PositiveNumber);
  rb->add_option("--span", r_span)->check(CLI::Range(0.0, 1.0));
  rb->add_option("--seed", r_seed);
  rb->add_option("--report", r_report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const std::uint64_t seed = effective_seed(gen_seed);
      auto keys = dist == "lognormal" ? gen_lognormal(gen_n, mu, sigma, seed) : gen_uniform(gen_n, seed);
      write_dataset(gen_out, keys);
      std::printf("wrote %zu keys to %s\n", keys.size(), gen_out.c_str());
    } else if (*bl) {
      const auto keys = load_dataset(bl_data);
      std::vector<KeyValue> pairs;
      pairs.reserve(keys.size());
      for (Key k : keys) pairs.push_back({k, k});
      IndexConfig cfg;
      cfg.backend = parse_backend(bl_backend);
      const auto t0 = std::chrono::steady_clock::now();
      auto idx = UplifIndex::bulk_load(pairs, cfg);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const auto mem = idx.memory_breakdown();
      const auto st = idx.stats();
      nlohmann::json j = {
          {"keys", keys.size()},
          {"slots", idx.bmat().head().slot_count()},
          {"alpha", st.error_scaling},
          {"model_error_bound", idx.base_model().error_bound()},
          {"model_knots", idx.base_model().spline_points().size()},
          {"certified_window_error", idx.bmat().head().certified_error()},
          {"bmat_height", st.height},
          {"load_secs", secs},
          {"memory",
           {{"total", mem.total()},
            {"models", mem.models},
            {"mappings", mem.mappings},
            {"nodes", mem.nodes},
            {"slots", mem.slots},
            {"null_slots", mem.null_slots},
            {"segment_meta", mem.segment_meta},
            {"density", mem.density}}},
      };
      if (bl_stats.empty()) {
        std::cout << j.dump(2) << '\n';
      } else {
        std::ofstream out(bl_stats);
        if (!out) throw Error("cannot write " + bl_stats);
        out << j.dump(2) << '\n';
      }
    } else if (*bench) {
      const std::uint64_t seed = effective_seed(b_seed);
      const AgentFlag agent_flag = parse_agent(b_agent);
      if (b_init <= 0.0) throw Error("--init-fraction must be > 0");
      std::optional<QTable> q;
      if (agent_flag.enabled) q = load_qtable(agent_flag.qtable);
      const auto keys = load_dataset(b_data);
      std::vector<Metrics> all;
      for (int r = 0; r < b_runs; ++r) {
        WorkloadSpec spec;
        spec.kind = parse_workload(b_workload);
        spec.seed = seed + static_cast<std::uint64_t>(r);
        spec.init_fraction = b_init;
        OperationStream stream(spec, keys);
        RunOptions opt;
        opt.duration_secs = b_secs;
        opt.op_count = b_ops;
        Metrics m;
        if (b_oracle) {
          auto o = SortedMapOracle::bulk_load(stream.initial());
          m = run_benchmark(o, stream, opt);
        } else {
          IndexConfig cfg;
          cfg.backend = parse_backend(b_backend);
          auto idx = UplifIndex::bulk_load(stream.initial(), cfg);
          std::optional<Agent> agent;
          if (q) {
            agent.emplace(AgentConfig{}, ActionSet::all(), spec.seed, *q);
            agent->freeze();
            opt.agent = &*agent;
          }
          m = run_benchmark(idx, stream, opt);
        }
        m.dataset = stem(b_data);
        m.run = r;
        print_metrics(m);
        all.push_back(std::move(m));
      }
      if (!b_report.empty()) emit_report(all, b_report);
    } else if (*train) {
      const std::uint64_t seed = effective_seed(t_seed);
      const auto keys = load_dataset(t_data);
      WorkloadSpec spec;
      spec.kind = parse_workload(t_workload);
      spec.seed = seed;
      if (t_init <= 0.0) throw Error("--init-fraction must be > 0");
      spec.init_fraction = t_init;
      OperationStream stream(spec, keys);
      IndexConfig cfg;
      cfg.backend = parse_backend(t_backend);
      auto idx = UplifIndex::bulk_load(stream.initial(), cfg);
      AgentConfig acfg;
      Agent agent(acfg, ActionSet::all(), seed);
      IndexEnvironment env(idx, [&](std::size_t n) {
        std::size_t done = 0;
        Op op;
        bool sorted = true;
        while (done < n && stream.next(op)) {
          detail::apply_op(idx, op, sorted);
          ++done;
        }
        return done;
      });
      std::array<std::size_t, kActionCount> counts{};
      for (std::size_t s = 0; s < t_steps; ++s) {
        const StepReport rep = agent.step(env);
        ++counts[static_cast<std::size_t>(rep.executed)];
        if (rep.ops == 0) break;
      }
      save_qtable(agent.qtable(), t_out);
      std::printf("trained %zu steps: A1=%zu A2=%zu A3=%zu epsilon=%.4f entries=%zu -> %s\n", t_steps, counts[0],
                  counts[1], counts[2], agent.epsilon(), agent.qtable().size(), t_out.c_str());
    } else if (*rb) {
      const std::uint64_t seed = effective_seed(r_seed);
      const auto keys = load_dataset(r_data);
      std::vector<KeyValue> pairs;
      pairs.reserve(keys.size());
      for (Key k : keys) pairs.push_back({k, k});
      auto idx = UplifIndex::bulk_load(pairs);
      Metrics m = run_range_benchmark(idx, keys, r_queries, r_span, seed);
      m.dataset = stem(r_data);
      print_metrics(m);
      if (!m.results_sorted) throw std::runtime_error("range results out of order");
      if (!r_report.empty()) emit_report({m}, r_report);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
