#include "qexp/dataset.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "qexp/binary_io.hpp"
#include "qexp/envs.hpp"
#include "qexp/samplers.hpp"

namespace qexp {

namespace {

constexpr char kMagic[4] = {'Q', 'X', 'D', 'S'};
constexpr std::uint32_t kMaxDim = 1024;

void write_values(std::ostream& out, const std::vector<double>& v) {
    for (double x : v) io::write_le<double>(out, x);
}

std::vector<double> read_values(std::istream& in, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = io::read_le<double>(in);
    return v;
}

} // namespace

void write_dataset(std::ostream& out, const Dataset& data) {
    const auto s = static_cast<std::size_t>(data.state_dim);
    const auto a = static_cast<std::size_t>(data.action_dim);
    out.write(kMagic, sizeof(kMagic));
    io::write_le<std::uint32_t>(out, kDatasetVersion);
    io::write_string(out, data.env_name);
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.state_dim));
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.action_dim));
    io::write_le<std::uint64_t>(out, data.transitions.size());
    for (const auto& t : data.transitions) {
        if (t.state.size() != s || t.next_state.size() != s || t.action.size() != a) {
            throw std::invalid_argument("write_dataset: transition dimension mismatch");
        }
        write_values(out, t.state);
        write_values(out, t.action);
        io::write_le<double>(out, t.reward);
        write_values(out, t.next_state);
        io::write_le<std::uint8_t>(out, t.terminated ? 1 : 0);
        io::write_le<double>(out, t.behavior_log_prob);
    }
    if (!out) throw std::runtime_error("failed to write dataset");
}

Dataset read_dataset(std::istream& in) {
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("not a dataset file");
    }
    const auto version = io::read_le<std::uint32_t>(in);
    if (version != kDatasetVersion) {
        throw std::runtime_error("unsupported dataset version " + std::to_string(version));
    }
    Dataset data;
    data.env_name = io::read_string(in);
    const auto s = io::read_le<std::uint32_t>(in);
    const auto a = io::read_le<std::uint32_t>(in);
    if (s == 0 || a == 0 || s > kMaxDim || a > kMaxDim) {
        throw std::runtime_error("corrupt dataset: dimensions");
    }
    data.state_dim = static_cast<int>(s);
    data.action_dim = static_cast<int>(a);
    const auto count = io::read_le<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < count; ++i) {
        Transition t;
        t.state = read_values(in, data.state_dim);
        t.action = read_values(in, data.action_dim);
        t.reward = io::read_le<double>(in);
        t.next_state = read_values(in, data.state_dim);
        const auto term = io::read_le<std::uint8_t>(in);
        if (term > 1) throw std::runtime_error("corrupt dataset: terminated flag");
        t.terminated = term == 1;
        t.behavior_log_prob = io::read_le<double>(in);
        data.transitions.push_back(std::move(t));
    }
    return data;
}

void write_dataset(const std::string& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_dataset(out, data);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_dataset(in);
}

ReplayBuffer to_replay_buffer(const Dataset& data) {
    ReplayBuffer buffer(std::max<std::size_t>(data.transitions.size(), 1), data.state_dim, data.action_dim);
    for (const auto& t : data.transitions) buffer.add(t);
    return buffer;
}

Dataset generate_offline_dataset(Environment& env, const BehaviorPolicy& behavior, std::size_t n, Rng& rng) {
    Dataset data;
    data.env_name = std::string(env.name());
    data.state_dim = env.observation_dim();
    data.action_dim = env.action_dim();
    data.transitions.reserve(n);
    std::vector<double> obs;
    bool need_reset = true;
    while (data.transitions.size() < n) {
        if (need_reset) {
            obs = env.reset(rng);
            need_reset = false;
        }
        auto [action, log_prob] = behavior(obs, rng);
        StepResult step = env.step(action);
        Transition t;
        t.state = obs;
        t.action = std::move(action);
        t.reward = step.reward;
        t.next_state = step.observation;
        t.terminated = step.terminated;
        t.behavior_log_prob = log_prob;
        data.transitions.push_back(std::move(t));
        obs = std::move(step.observation);
        need_reset = step.terminated || step.truncated;
    }
    return data;
}

} // namespace qexp
