#include "uplif/tuner.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "uplif/index.hpp"

namespace uplif {

const char* action_name(Action a) {
  switch (a) {
    case Action::kKeep: return "A1";
    case Action::kRetrain: return "A2";
    case Action::kConvert: return "A3";
  }
  return "?";
}

std::string to_string(const State& s) {
  std::ostringstream os;
  os << '(' << s.s1 << ',' << s.s2 << ',' << s.s3 << ',' << s.s4 << ',' << s.s5 << ')';
  return os.str();
}

ActionSet ActionSet::only(Action a) {
  ActionSet s;
  s.enabled = {false, false, false};
  s.enabled[static_cast<std::size_t>(a)] = true;
  return s;
}

std::vector<Action> ActionSet::list() const {
  std::vector<Action> out;
  for (std::size_t i = 0; i < kActionCount; ++i) {
    if (enabled[i]) out.push_back(static_cast<Action>(i));
  }
  return out;
}

void AgentConfig::validate() const {
  auto unit = [](double x) { return x > 0.0 && x <= 1.0; };
  if (!unit(alpha) || !unit(gamma) || !unit(eta)) throw Error("agent parameters must lie in (0,1]");
  if (epsilon < 0.0 || epsilon > 1.0) throw Error("epsilon must lie in [0,1]");
  if (!unit(epsilon_decay)) throw Error("epsilon_decay must lie in (0,1]");
  if (epsilon_min < 0.0 || epsilon_min > epsilon) throw Error("epsilon_min out of range");
  if (ops_per_step < 1) throw Error("ops_per_step must be >= 1");
}

double QTable::get(const State& s, Action a) const {
  auto it = q_.find({s, a});
  return it == q_.end() ? 0.0 : it->second;
}

void QTable::set(const State& s, Action a, double q) { q_[{s, a}] = q; }

double QTable::max_q(const State& s) const {
  double best = get(s, Action::kKeep);
  for (std::size_t i = 1; i < kActionCount; ++i) best = std::max(best, get(s, static_cast<Action>(i)));
  return best;
}

std::uint64_t QTable::visits(const State& s, Action a) const {
  auto it = visits_.find({s, a});
  return it == visits_.end() ? 0 : it->second;
}

void QTable::record_visit(const State& s, Action a) { ++visits_[{s, a}]; }

Action QTable::greedy(const State& s, const ActionSet& available) const {
  const auto actions = available.list();
  if (actions.empty()) throw Error("no available actions");
  Action best = actions.front();
  double best_q = get(s, best);
  for (Action a : actions) {
    const double q = get(s, a);
    if (q > best_q) {
      best = a;
      best_q = q;
    }
  }
  return best;
}

State observe_state(const PerfMeasures& pm) {
  State s;
  const std::size_t h = pm.height > 0 ? pm.height - 1 : 0;
  s.s1 = static_cast<int>(std::min<std::size_t>(h / 8, 7));
  if (pm.granularity > 0 && pm.live_keys > 0) {
    const std::size_t ratio = std::max<std::size_t>(pm.live_keys / pm.granularity, 1);
    const int lg = static_cast<int>(std::bit_width(ratio)) - 1;
    s.s2 = 7 - std::min(lg, 7);
  }
  int passed = 0;
  for (double t : {1.0, 2.0, 4.0, 8.0}) {
    if (pm.error_scaling >= t) ++passed;
  }
  s.s3 = std::max(passed - 1, 0);
  if (pm.model_count > 0) {
    int lg = 0;
    for (std::size_t m = pm.model_count; m >= 10; m /= 10) ++lg;
    s.s4 = std::min(lg, 6);
  }
  s.s5 = pm.backend == Backend::kBPlus ? 1 : 0;
  return s;
}

Action select_action(const QTable& q, const State& s, const ActionSet& available, double epsilon,
                     std::mt19937_64& rng) {
  const auto actions = available.list();
  if (actions.empty()) throw Error("no available actions");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (epsilon > 0.0 && coin(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
    return actions[pick(rng)];
  }
  return q.greedy(s, available);
}

double reward(double throughput, double max_throughput, double mem_used, double total_mem, double eta) {
  if (max_throughput <= 0.0 || total_mem <= 0.0) throw Error("non-positive normalizer");
  return eta * throughput / max_throughput - (1.0 - eta) * mem_used / total_mem;
}

void update_q(QTable& q, const State& s, Action a, double r_next, const State& s_next, double alpha,
              double gamma) {
  const double old = q.get(s, a);
  q.set(s, a, (1.0 - alpha) * old + alpha * (r_next + gamma * q.max_q(s_next)));
}

void save_qtable(const QTable& q, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "# s1,s2,s3,s4,s5,action,qvalue\n";
  char buf[64];
  for (const auto& [key, value] : q.entries()) {
    const State& s = key.first;
    std::snprintf(buf, sizeof buf, "%.17g", value);
    out << s.s1 << ',' << s.s2 << ',' << s.s3 << ',' << s.s4 << ',' << s.s5 << ','
        << static_cast<int>(key.second) + 1 << ',' << buf << '\n';
  }
  if (!out) throw Error("cannot write " + path);
}

QTable load_qtable(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  QTable q;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto fail = [&](const std::string& why) {
      throw Error("qtable line " + std::to_string(lineno) + ": " + why);
    };
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line.substr(first));
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 7) fail("expected 7 fields");
    int ints[6];
    for (int i = 0; i < 6; ++i) {
      std::size_t used = 0;
      try {
        ints[i] = std::stoi(fields[static_cast<std::size_t>(i)], &used);
      } catch (const std::exception&) {
        fail("bad integer '" + fields[static_cast<std::size_t>(i)] + "'");
      }
      if (used != fields[static_cast<std::size_t>(i)].size()) fail("bad integer");
    }
    if (ints[5] < 1 || ints[5] > static_cast<int>(kActionCount)) fail("action out of range");
    if (ints[4] != 0 && ints[4] != 1) fail("backend out of range");
    std::string qtext = fields[6];
    while (!qtext.empty() && (qtext.back() == '\r' || qtext.back() == ' ')) qtext.pop_back();
    char* end = nullptr;
    const double value = std::strtod(qtext.c_str(), &end);
    if (qtext.empty() || *end != '\0' || !std::isfinite(value)) fail("bad q-value");
    q.set(State{ints[0], ints[1], ints[2], ints[3], ints[4]}, static_cast<Action>(ints[5] - 1), value);
  }
  return q;
}

IndexEnvironment::IndexEnvironment(UplifIndex& index, OpRunner runner)
    : index_(index), runner_(std::move(runner)) {}

PerfMeasures IndexEnvironment::measures() const { return index_.stats(); }

bool IndexEnvironment::apply(Action a) {
  switch (a) {
    case Action::kKeep:
      return true;
    case Action::kRetrain:
      if (index_.stats().height < 2) return false;
      index_.prune();
      return true;
    case Action::kConvert:
      index_.convert(index_.bmat().backend() == Backend::kRedBlack ? Backend::kBPlus : Backend::kRedBlack);
      return true;
  }
  return false;
}

double IndexEnvironment::now_seconds() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

double IndexEnvironment::memory_bytes() const { return static_cast<double>(index_.memory_usage()); }

Agent::Agent(AgentConfig cfg, ActionSet available, std::uint64_t seed, QTable q)
    : cfg_(cfg), available_(available), rng_(seed), q_(std::move(q)), epsilon_(cfg.epsilon) {
  cfg_.validate();
  if (available_.list().empty()) throw Error("no available actions");
}

void Agent::freeze() {
  learning_ = false;
  epsilon_ = 0.0;
}

StepReport Agent::step(TuningEnvironment& env) {
  StepReport rep;
  rep.state = observe_state(env.measures());
  rep.chosen = select_action(q_, rep.state, available_, epsilon_, rng_);
  rep.executed = rep.chosen;

  // The clock starts before the action so its cost is charged to this step.
  const double t0 = env.now_seconds();
  if (!env.apply(rep.chosen)) {
    rep.executed = Action::kKeep;
    rep.substituted = true;
  }
  rep.ops = env.run_ops(cfg_.ops_per_step);
  rep.seconds = env.now_seconds() - t0;
  rep.throughput = rep.seconds > 0.0 ? static_cast<double>(rep.ops) / rep.seconds : 0.0;
  rep.memory = env.memory_bytes();
  max_throughput_ = std::max(max_throughput_, rep.throughput);
  max_memory_ = std::max(max_memory_, rep.memory);
  if (max_throughput_ > 0.0 && max_memory_ > 0.0) {
    rep.reward = reward(rep.throughput, max_throughput_, rep.memory, max_memory_, cfg_.eta);
  }
  rep.next = observe_state(env.measures());
  if (learning_) {
    update_q(q_, rep.state, rep.chosen, rep.reward, rep.next, cfg_.alpha, cfg_.gamma);
    q_.record_visit(rep.state, rep.chosen);
    epsilon_ = std::max(epsilon_ * cfg_.epsilon_decay, cfg_.epsilon_min);
  }
  rep.epsilon = epsilon_;
  return rep;
}

}  // namespace uplif
