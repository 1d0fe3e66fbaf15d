#include "qexp/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "qexp/envs.hpp"

namespace qexp {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"experiment",
         {"env", "agent", "mode", "steps", "protocol", "eval_interval", "eval_episodes", "eval_deterministic",
          "warmup_steps", "buffer_capacity", "stop_return", "checkpoint_interval", "seeds", "out"}},
        {"policy", {"family", "q", "nu_base", "replacement_batch", "log_std_min", "log_std_max"}},
        {"agent",
         {"tau", "q_prime", "rho", "proposal_samples", "expectile", "bc_alpha", "critic_lr", "actor_lr_multiplier",
          "batch_size", "polyak", "gamma", "hidden", "adam_beta1", "adam_beta2", "adam_epsilon", "value_samples",
          "sac_samples", "max_weight", "reparameterize", "policy_noise", "noise_clip", "policy_delay"}},
        {"dataset", {"path", "size", "behavior_checkpoint", "behavior_deterministic"}},
        {"sweep",
         {"critic_lrs", "actor_lr_multipliers", "taus", "sweep_seeds", "best_seeds", "eval_interval",
          "eval_episodes"}},
    };
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    T value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError("bad numeric value for " + key + ": '" + raw + "'");
    }
    return value;
}

bool parse_bool(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("bad boolean for " + key + ": '" + raw + "'");
}

std::vector<std::string> split_list(const std::string& raw) {
    std::vector<std::string> items;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        items.push_back(item);
    }
    return items;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& raw) {
    std::vector<T> out;
    for (const auto& item : split_list(raw)) out.push_back(parse_number<T>(key, item));
    if (out.empty()) throw ConfigError("empty list for " + key);
    return out;
}

template <class T>
std::string join(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>) {
            out += format_double(xs[i]);
        } else {
            out += std::to_string(xs[i]);
        }
    }
    return out;
}

/// Reads section.key into `target` when present.
class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    std::optional<std::string> raw(const std::string& section, const std::string& key) const {
        const auto sec = tree_.get_child_optional(pt::ptree::path_type(section, '\0'));
        if (!sec) return std::nullopt;
        const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
        if (!v) return std::nullopt;
        return *v;
    }

    template <class T>
    void number(const std::string& section, const std::string& key, T& target) const {
        if (auto v = raw(section, key)) target = parse_number<T>(section + "." + key, *v);
    }
    void flag(const std::string& section, const std::string& key, bool& target) const {
        if (auto v = raw(section, key)) target = parse_bool(section + "." + key, *v);
    }
    void text(const std::string& section, const std::string& key, std::string& target) const {
        if (auto v = raw(section, key)) target = trim(*v);
    }
    template <class T>
    void list(const std::string& section, const std::string& key, std::vector<T>& target) const {
        if (auto v = raw(section, key)) target = parse_list<T>(section + "." + key, *v);
    }

private:
    const pt::ptree& tree_;
};

void check_keys(const pt::ptree& tree) {
    const auto& known = known_keys();
    for (const auto& [section, body] : tree) {
        const auto it = known.find(section);
        if (it == known.end()) {
            if (body.empty()) throw ConfigError("key outside any section: " + section);
            throw ConfigError("unknown section [" + section + "]");
        }
        for (const auto& [key, value] : body) {
            if (!it->second.contains(key)) throw ConfigError("unknown key " + section + "." + key);
        }
    }
}

std::string_view protocol_name(EvalProtocol p) {
    return p == EvalProtocol::Best ? "best" : "sweep";
}

} // namespace

std::string format_double(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

AgentConfig default_agent_config(bool offline) {
    AgentConfig c;
    c.offline = offline;
    if (offline) {
        c.hidden = {256, 256};
        c.batch_size = 256;
        c.polyak = 0.005;
        c.adam_beta1 = 0.9;
        c.adam_beta2 = 0.99;
    }
    return c;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    const auto seeds = parse_list<std::uint64_t>("seeds", text);
    const std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size()) throw ConfigError("duplicate seed in '" + text + "'");
    return seeds;
}

void ExperimentConfig::validate() const {
    const auto& names = env_names();
    if (std::find(names.begin(), names.end(), env) == names.end()) throw ConfigError("unknown env " + env);
    if (total_steps <= 0) throw ConfigError("steps must be positive");
    if (eval_interval <= 0 || eval_episodes <= 0) throw ConfigError("eval_interval and eval_episodes must be positive");
    if (total_steps % eval_interval != 0) throw ConfigError("eval_interval must divide steps");
    if (warmup_steps < 0 || checkpoint_interval < 0) throw ConfigError("negative warmup or checkpoint interval");
    if (buffer_capacity == 0) throw ConfigError("buffer_capacity must be positive");
    if (seeds.empty()) throw ConfigError("no seeds");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
        throw ConfigError("duplicate seeds");
    }
    if (agent.offline ? !supports_offline(agent.algorithm) : !supports_online(agent.algorithm)) {
        throw ConfigError(std::string(algorithm_name(agent.algorithm)) + " does not run in " +
                          (agent.offline ? "offline" : "online") + " mode");
    }
    if (dataset_size == 0) throw ConfigError("dataset size must be positive");
    if (sweep.critic_lrs.empty() || sweep.actor_lr_multipliers.empty() || sweep.taus.empty()) {
        throw ConfigError("empty sweep grid");
    }
    if (sweep.sweep_seeds.empty() || sweep.best_seeds.empty()) throw ConfigError("sweep needs both seed lists");
    for (auto s : sweep.sweep_seeds) {
        if (std::find(sweep.best_seeds.begin(), sweep.best_seeds.end(), s) != sweep.best_seeds.end()) {
            throw ConfigError("sweep seeds and best-run seeds overlap at " + std::to_string(s));
        }
    }
    if (sweep.eval_interval <= 0 || sweep.eval_episodes <= 0) {
        throw ConfigError("sweep eval_interval and eval_episodes must be positive");
    }
    try {
        agent.validate();
        policy.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

ExperimentConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    check_keys(tree);
    const Reader r(tree);
    ExperimentConfig c;

    try {
        std::string mode = "online";
        r.text("experiment", "mode", mode);
        if (mode != "online" && mode != "offline") throw ConfigError("mode must be online or offline");
        c.agent = default_agent_config(mode == "offline");
        if (auto a = r.raw("experiment", "agent")) c.agent.algorithm = parse_algorithm(trim(*a));
        if (auto p = r.raw("experiment", "protocol")) {
            const std::string v = trim(*p);
            if (v == "best") {
                c.protocol = EvalProtocol::Best;
            } else if (v == "sweep") {
                c.protocol = EvalProtocol::Sweep;
                c.eval_interval = 10000;
                c.eval_episodes = 3;
            } else {
                throw ConfigError("protocol must be best or sweep");
            }
        }
        r.text("experiment", "env", c.env);
        r.number("experiment", "steps", c.total_steps);
        r.number("experiment", "eval_interval", c.eval_interval);
        r.number("experiment", "eval_episodes", c.eval_episodes);
        r.flag("experiment", "eval_deterministic", c.eval_deterministic);
        r.number("experiment", "warmup_steps", c.warmup_steps);
        r.number("experiment", "buffer_capacity", c.buffer_capacity);
        if (auto v = r.raw("experiment", "stop_return")) c.stop_return = parse_number<double>("stop_return", *v);
        r.number("experiment", "checkpoint_interval", c.checkpoint_interval);
        if (auto v = r.raw("experiment", "seeds")) c.seeds = parse_seed_list(*v);
        r.text("experiment", "out", c.out_dir);

        if (auto f = r.raw("policy", "family")) c.policy.family = parse_policy_family(trim(*f));
        r.number("policy", "q", c.policy.q);
        r.number("policy", "nu_base", c.policy.nu_base);
        r.number("policy", "replacement_batch", c.policy.replacement_batch);
        r.number("policy", "log_std_min", c.policy.log_std_min);
        r.number("policy", "log_std_max", c.policy.log_std_max);

        AgentConfig& a = c.agent;
        r.number("agent", "tau", a.tau);
        r.number("agent", "q_prime", a.q_prime);
        r.number("agent", "rho", a.rho);
        r.number("agent", "proposal_samples", a.proposal_samples);
        r.number("agent", "expectile", a.expectile);
        r.number("agent", "bc_alpha", a.bc_alpha);
        r.number("agent", "critic_lr", a.critic_lr);
        r.number("agent", "actor_lr_multiplier", a.actor_lr_multiplier);
        r.number("agent", "batch_size", a.batch_size);
        r.number("agent", "polyak", a.polyak);
        r.number("agent", "gamma", a.gamma);
        r.list("agent", "hidden", a.hidden);
        r.number("agent", "adam_beta1", a.adam_beta1);
        r.number("agent", "adam_beta2", a.adam_beta2);
        r.number("agent", "adam_epsilon", a.adam_epsilon);
        r.number("agent", "value_samples", a.value_samples);
        r.number("agent", "sac_samples", a.sac_samples);
        r.number("agent", "max_weight", a.max_weight);
        r.flag("agent", "reparameterize", a.reparameterize);
        r.number("agent", "policy_noise", a.policy_noise);
        r.number("agent", "noise_clip", a.noise_clip);
        r.number("agent", "policy_delay", a.policy_delay);

        r.text("dataset", "path", c.dataset_path);
        r.number("dataset", "size", c.dataset_size);
        r.text("dataset", "behavior_checkpoint", c.behavior_checkpoint);
        r.flag("dataset", "behavior_deterministic", c.behavior_deterministic);

        r.list("sweep", "critic_lrs", c.sweep.critic_lrs);
        r.list("sweep", "actor_lr_multipliers", c.sweep.actor_lr_multipliers);
        r.list("sweep", "taus", c.sweep.taus);
        if (auto v = r.raw("sweep", "sweep_seeds")) c.sweep.sweep_seeds = parse_seed_list(*v);
        if (auto v = r.raw("sweep", "best_seeds")) c.sweep.best_seeds = parse_seed_list(*v);
        r.number("sweep", "eval_interval", c.sweep.eval_interval);
        r.number("sweep", "eval_episodes", c.sweep.eval_episodes);
    } catch (const std::invalid_argument& e) {
        // Unknown algorithm or family names.
        throw ConfigError(e.what());
    }

    bind_environment(c);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    return parse_config(in);
}

void bind_environment(ExperimentConfig& config) {
    try {
        const auto env = make_env(config.env);
        config.policy.action_dim = env->action_dim();
        config.policy.action_low = env->action_low();
        config.policy.action_high = env->action_high();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
    const AgentConfig& a = c.agent;
    out << "[experiment]\n"
        << "env = " << c.env << '\n'
        << "agent = " << algorithm_name(a.algorithm) << '\n'
        << "mode = " << (a.offline ? "offline" : "online") << '\n'
        << "steps = " << c.total_steps << '\n'
        << "protocol = " << protocol_name(c.protocol) << '\n'
        << "eval_interval = " << c.eval_interval << '\n'
        << "eval_episodes = " << c.eval_episodes << '\n'
        << "eval_deterministic = " << (c.eval_deterministic ? "true" : "false") << '\n'
        << "warmup_steps = " << c.warmup_steps << '\n'
        << "buffer_capacity = " << c.buffer_capacity << '\n';
    if (c.stop_return) out << "stop_return = " << format_double(*c.stop_return) << '\n';
    out << "checkpoint_interval = " << c.checkpoint_interval << '\n'
        << "seeds = " << join(c.seeds) << '\n'
        << "out = " << c.out_dir << "\n\n";

    out << "[policy]\n"
        << "family = " << policy_family_name(c.policy.family) << '\n'
        << "q = " << format_double(c.policy.q) << '\n'
        << "nu_base = " << format_double(c.policy.nu_base) << '\n'
        << "replacement_batch = " << c.policy.replacement_batch << '\n'
        << "log_std_min = " << format_double(c.policy.log_std_min) << '\n'
        << "log_std_max = " << format_double(c.policy.log_std_max) << "\n\n";

    out << "[agent]\n"
        << "tau = " << format_double(a.tau) << '\n'
        << "q_prime = " << format_double(a.q_prime) << '\n'
        << "rho = " << format_double(a.rho) << '\n'
        << "proposal_samples = " << a.proposal_samples << '\n'
        << "expectile = " << format_double(a.expectile) << '\n'
        << "bc_alpha = " << format_double(a.bc_alpha) << '\n'
        << "critic_lr = " << format_double(a.critic_lr) << '\n'
        << "actor_lr_multiplier = " << format_double(a.actor_lr_multiplier) << '\n'
        << "batch_size = " << a.batch_size << '\n'
        << "polyak = " << format_double(a.polyak) << '\n'
        << "gamma = " << format_double(a.gamma) << '\n'
        << "hidden = " << join(a.hidden) << '\n'
        << "adam_beta1 = " << format_double(a.adam_beta1) << '\n'
        << "adam_beta2 = " << format_double(a.adam_beta2) << '\n'
        << "adam_epsilon = " << format_double(a.adam_epsilon) << '\n'
        << "value_samples = " << a.value_samples << '\n'
        << "sac_samples = " << a.sac_samples << '\n'
        << "max_weight = " << format_double(a.max_weight) << '\n'
        << "reparameterize = " << (a.reparameterize ? "true" : "false") << '\n'
        << "policy_noise = " << format_double(a.policy_noise) << '\n'
        << "noise_clip = " << format_double(a.noise_clip) << '\n'
        << "policy_delay = " << a.policy_delay << "\n\n";

    out << "[dataset]\n";
    if (!c.dataset_path.empty()) out << "path = " << c.dataset_path << '\n';
    out << "size = " << c.dataset_size << '\n';
    if (!c.behavior_checkpoint.empty()) out << "behavior_checkpoint = " << c.behavior_checkpoint << '\n';
    out << "behavior_deterministic = " << (c.behavior_deterministic ? "true" : "false") << "\n\n";

    out << "[sweep]\n"
        << "critic_lrs = " << join(c.sweep.critic_lrs) << '\n'
        << "actor_lr_multipliers = " << join(c.sweep.actor_lr_multipliers) << '\n'
        << "taus = " << join(c.sweep.taus) << '\n'
        << "sweep_seeds = " << join(c.sweep.sweep_seeds) << '\n'
        << "best_seeds = " << join(c.sweep.best_seeds) << '\n'
        << "eval_interval = " << c.sweep.eval_interval << '\n'
        << "eval_episodes = " << c.sweep.eval_episodes << '\n';
}

} // namespace qexp
