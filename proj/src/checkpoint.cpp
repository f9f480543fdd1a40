#include "bac/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace bac {
namespace {

constexpr char kMagic[8] = {'B', 'A', 'C', 'C', 'K', 'P', 'T', '1'};

struct Writer {
  std::ofstream out;
  explicit Writer(const std::string& path) : out(path, std::ios::binary) {
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  }
  void bytes(const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
  void vec(const std::vector<double>& v) {
    u64(v.size());
    if (!v.empty()) bytes(v.data(), v.size() * sizeof(double));
  }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
};

struct Reader {
  std::ifstream in;
  explicit Reader(const std::string& path) : in(path, std::ios::binary) {
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  }
  void bytes(void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, 8);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, 8);
    return v;
  }
  std::vector<double> vec() {
    std::vector<double> v(u64());
    if (!v.empty()) bytes(v.data(), v.size() * sizeof(double));
    return v;
  }
  std::string str() {
    std::string s(u64(), '\0');
    if (!s.empty()) bytes(s.data(), s.size());
    return s;
  }
};

void write_net(Writer& w, const MlpParams& net) {
  w.u64(net.layers.size());
  for (const auto& layer : net.layers) {
    w.u64(layer.weight.rows);
    w.u64(layer.weight.cols);
    w.u8(static_cast<std::uint8_t>(layer.act));
    w.vec(layer.weight.data);
    w.vec(layer.bias);
  }
}

void read_net(Reader& r, MlpParams& net) {
  const std::uint64_t n_layers = r.u64();
  if (n_layers != net.layers.size())
    throw std::runtime_error("checkpoint: network layer count mismatch");
  for (auto& layer : net.layers) {
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    const auto act = static_cast<Activation>(r.u8());
    if (rows != layer.weight.rows || cols != layer.weight.cols)
      throw std::runtime_error("checkpoint: network shape mismatch");
    layer.act = act;
    layer.weight.data = r.vec();
    layer.bias = r.vec();
    if (layer.weight.data.size() != rows * cols || layer.bias.size() != rows)
      throw std::runtime_error("checkpoint: network payload mismatch");
  }
}

void write_adam(Writer& w, const AdamState& state) {
  w.u64(state.step);
  w.f64(state.beta1);
  w.f64(state.beta2);
  w.f64(state.epsilon);
  w.u64(state.layers.size());
  for (const auto& m : state.layers) {
    w.vec(m.m_weight);
    w.vec(m.v_weight);
    w.vec(m.m_bias);
    w.vec(m.v_bias);
  }
}

void read_adam(Reader& r, AdamState& state) {
  state.step = r.u64();
  state.beta1 = r.f64();
  state.beta2 = r.f64();
  state.epsilon = r.f64();
  const std::uint64_t n = r.u64();
  if (n != state.layers.size())
    throw std::runtime_error("checkpoint: optimizer layer count mismatch");
  for (auto& m : state.layers) {
    m.m_weight = r.vec();
    m.v_weight = r.vec();
    m.m_bias = r.vec();
    m.v_bias = r.vec();
  }
}

void write_rollout(Writer& w, const Rollout& rollout) {
  w.u64(rollout.size());
  for (std::size_t i = 0; i < rollout.size(); ++i) {
    w.vec(rollout.states[i]);
    w.vec(rollout.actions[i]);
  }
  w.f64(rollout.episode_return);
}

Rollout read_rollout(Reader& r) {
  Rollout rollout;
  const std::uint64_t n = r.u64();
  rollout.states.reserve(n);
  rollout.actions.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    rollout.states.push_back(r.vec());
    rollout.actions.push_back(r.vec());
  }
  rollout.episode_return = r.f64();
  return rollout;
}

}  // namespace

void save_checkpoint(const BacAgent& agent, const Env& env,
                     const ExperimentConfig& config, const std::string& path,
                     bool include_buffer) {
  Writer w(path);
  w.bytes(kMagic, sizeof(kMagic));

  w.str(serialize_experiment_config(config));
  w.vec(env.snapshot());

  const auto state = agent.rng().save();
  for (auto word : state.words) w.u64(word);
  w.f64(state.spare);
  w.u8(state.has_spare ? 1 : 0);

  const auto loop = agent.loop_state();
  w.vec(loop.observation);
  w.u8(loop.episode_active ? 1 : 0);
  w.f64(loop.episode_return);
  write_rollout(w, loop.current_rollout);
  write_rollout(w, loop.last_rollout);
  w.u64(loop.total_env_steps);
  w.u64(loop.episodes_completed);
  w.u64(loop.last_ae_training_episode);
  w.f64(loop.last_alpha);

  write_net(w, agent.actor());
  write_net(w, agent.critic(0));
  write_net(w, agent.critic(1));
  write_net(w, agent.target(0));
  write_net(w, agent.target(1));
  write_net(w, agent.behavior().autoencoder());

  write_adam(w, agent.actor_opt());
  write_adam(w, agent.critic_opt(0));
  write_adam(w, agent.critic_opt(1));
  write_adam(w, agent.behavior().optimizer_state());
  w.f64(agent.behavior().running_max());

  if (agent.temperature()) {
    w.u8(1);
    write_net(w, agent.temperature()->q);
    write_adam(w, agent.temperature()->opt);
    w.f64(agent.temperature()->last_alpha);
  } else {
    w.u8(0);
  }

  const auto& buffer = agent.buffer();
  w.u64(buffer.capacity());
  w.u64(buffer.insertion_count());
  w.u8(include_buffer ? 1 : 0);
  w.u64(buffer.size());
  if (include_buffer) {
    for (std::size_t i = 0; i < buffer.size(); ++i) {
      const Transition& t = buffer.at(i);
      w.vec(t.state);
      w.vec(t.action);
      w.f64(t.reward);
      w.vec(t.next_state);
      w.u8(t.done ? 1 : 0);
    }
  }
  if (!w.out) throw std::runtime_error("checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);

  LoadedCheckpoint loaded;
  std::vector<std::string> errors;
  loaded.config = parse_experiment_config(r.str(), errors);
  if (!errors.empty())
    throw std::runtime_error("checkpoint: embedded config invalid: " + errors.front());

  loaded.env = make_env(loaded.config.env_name);
  const auto env_snapshot = r.vec();

  Rng::State rng_state;
  for (auto& word : rng_state.words) word = r.u64();
  rng_state.spare = r.f64();
  rng_state.has_spare = r.u8() != 0;

  BacAgent::LoopState loop;
  loop.observation = r.vec();
  loop.episode_active = r.u8() != 0;
  loop.episode_return = r.f64();
  loop.current_rollout = read_rollout(r);
  loop.last_rollout = read_rollout(r);
  loop.total_env_steps = r.u64();
  loop.episodes_completed = r.u64();
  loop.last_ae_training_episode = r.u64();
  loop.last_alpha = r.f64();

  loaded.agent = std::make_unique<BacAgent>(loaded.env->spec(), loaded.config.agent,
                                            /*seed=*/0);
  BacAgent& agent = *loaded.agent;
  read_net(r, agent.actor_mutable());
  read_net(r, agent.critic_mutable(0));
  read_net(r, agent.critic_mutable(1));
  read_net(r, agent.target_mutable(0));
  read_net(r, agent.target_mutable(1));
  read_net(r, agent.behavior().autoencoder_mutable());

  read_adam(r, agent.actor_opt());
  read_adam(r, agent.critic_opt(0));
  read_adam(r, agent.critic_opt(1));
  read_adam(r, agent.behavior().optimizer_state());
  agent.behavior().set_running_max(r.f64());

  if (r.u8() != 0) {
    if (!agent.temperature())
      throw std::runtime_error("checkpoint: temperature present but config is static");
    read_net(r, agent.temperature()->q);
    read_adam(r, agent.temperature()->opt);
    agent.temperature()->last_alpha = r.f64();
  }

  const std::uint64_t capacity = r.u64();
  const std::uint64_t insertions = r.u64();
  loaded.buffer_included = r.u8() != 0;
  const std::uint64_t size = r.u64();
  if (capacity != agent.buffer().capacity())
    throw std::runtime_error("checkpoint: buffer capacity mismatch");
  if (loaded.buffer_included) {
    for (std::uint64_t i = 0; i < size; ++i) {
      Transition t;
      t.state = r.vec();
      t.action = r.vec();
      t.reward = r.f64();
      t.next_state = r.vec();
      t.done = r.u8() != 0;
      agent.buffer().push(std::move(t));
    }
  }
  agent.buffer().set_insertion_count(insertions);

  agent.rng().restore(rng_state);
  agent.restore_loop_state(std::move(loop));
  loaded.env->restore_snapshot(env_snapshot);
  return loaded;
}

}  // namespace bac
