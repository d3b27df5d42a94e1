#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "uplif/bmat.hpp"

namespace uplif {

class UplifIndex;

enum class Action : std::uint8_t { kKeep = 0, kRetrain = 1, kConvert = 2 };
inline constexpr std::size_t kActionCount = 3;
const char* action_name(Action a);

struct State {
  int s1 = 0;  // height bucket, 0..7
  int s2 = 0;  // granularity bucket, 0..7
  int s3 = 0;  // error-scaling bucket, 0..3
  int s4 = 0;  // model-count bucket, 0..6
  int s5 = 0;  // backend, 0 = red-black, 1 = B+

  friend auto operator<=>(const State&, const State&) = default;
};

std::string to_string(const State& s);

struct ActionSet {
  std::array<bool, kActionCount> enabled{true, true, true};

  static ActionSet all() { return {}; }
  static ActionSet only(Action a);
  bool contains(Action a) const { return enabled[static_cast<std::size_t>(a)]; }
  std::vector<Action> list() const;
};

struct AgentConfig {
  double alpha = 0.8;
  double gamma = 0.2;
  double epsilon = 1.0;
  double epsilon_decay = 0.99;
  double epsilon_min = 0.05;
  double eta = 0.7;
  std::size_t ops_per_step = 1000;

  void validate() const;
};

// Missing entries read as 0.
class QTable {
 public:
  double get(const State& s, Action a) const;
  void set(const State& s, Action a, double q);
  double max_q(const State& s) const;
  std::uint64_t visits(const State& s, Action a) const;
  void record_visit(const State& s, Action a);
  std::size_t size() const { return q_.size(); }
  // Greedy choice with lowest-index tie-break.
  Action greedy(const State& s, const ActionSet& available) const;
  const std::map<std::pair<State, Action>, double>& entries() const { return q_; }

  friend bool operator==(const QTable& a, const QTable& b) { return a.q_ == b.q_; }

 private:
  std::map<std::pair<State, Action>, double> q_;
  std::map<std::pair<State, Action>, std::uint64_t> visits_;
};

State observe_state(const PerfMeasures& pm);

Action select_action(const QTable& q, const State& s, const ActionSet& available, double epsilon,
                     std::mt19937_64& rng);

// eta * throughput/max_throughput - (1 - eta) * memory/total_memory
double reward(double throughput, double max_throughput, double mem_used, double total_mem, double eta);

void update_q(QTable& q, const State& s, Action a, double r_next, const State& s_next, double alpha,
              double gamma);

void save_qtable(const QTable& q, const std::string& path);
QTable load_qtable(const std::string& path);

// What the agent acts on. IndexEnvironment drives a real index; tests script
// their own dynamics.
class TuningEnvironment {
 public:
  virtual ~TuningEnvironment() = default;
  virtual PerfMeasures measures() const = 0;
  // Returns false when the action could not be carried out (treated as keep).
  virtual bool apply(Action a) = 0;
  // Runs up to n operations, returns how many ran.
  virtual std::size_t run_ops(std::size_t n) = 0;
  virtual double now_seconds() const = 0;
  virtual double memory_bytes() const = 0;
};

class IndexEnvironment : public TuningEnvironment {
 public:
  using OpRunner = std::function<std::size_t(std::size_t)>;
  IndexEnvironment(UplifIndex& index, OpRunner runner);

  PerfMeasures measures() const override;
  bool apply(Action a) override;
  std::size_t run_ops(std::size_t n) override { return runner_(n); }
  double now_seconds() const override;
  double memory_bytes() const override;

 private:
  UplifIndex& index_;
  OpRunner runner_;
};

struct StepReport {
  State state;
  Action chosen = Action::kKeep;
  Action executed = Action::kKeep;
  bool substituted = false;
  std::size_t ops = 0;
  double seconds = 0.0;
  double throughput = 0.0;
  double memory = 0.0;
  double reward = 0.0;
  double epsilon = 0.0;  // after decay
  State next;
};

class Agent {
 public:
  Agent(AgentConfig cfg, ActionSet available, std::uint64_t seed, QTable q = {});

  // observe -> act -> run N ops -> measure -> reward -> Q update -> decay ε.
  StepReport step(TuningEnvironment& env);

  // Exploit-only mode: ε = 0 and the Q-table stays frozen.
  void freeze();
  bool learning() const { return learning_; }
  double epsilon() const { return epsilon_; }
  const QTable& qtable() const { return q_; }
  QTable& qtable() { return q_; }
  const AgentConfig& config() const { return cfg_; }
  const ActionSet& available() const { return available_; }

 private:
  AgentConfig cfg_;
  ActionSet available_;
  std::mt19937_64 rng_;
  QTable q_;
  double epsilon_;
  bool learning_ = true;
  double max_throughput_ = 0.0;
  double max_memory_ = 0.0;
};

}  // namespace uplif
