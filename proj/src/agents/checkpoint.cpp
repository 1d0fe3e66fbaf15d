#include <cmath>
#include <cstring>
#include <fstream>

#include "qexp/agents.hpp"
#include "qexp/binary_io.hpp"

namespace qexp {
namespace {

constexpr char kActorMagic[8] = {'Q', 'X', 'A', 'C', 'T', '0', '0', '1'};
constexpr std::uint32_t kActorVersion = 1;
constexpr std::uint32_t kMaxActionDim = 16;

double read_finite(std::istream& in) {
    const double x = io::read_le<double>(in);
    if (!std::isfinite(x)) throw std::runtime_error("corrupt actor checkpoint: non-finite field");
    return x;
}

} // namespace

Actor::Actor(PolicyHeadConfig head, Mlp net) : head_(std::move(head)), net_(std::move(net)) {
    head_.validate();
    if (net_.num_layers() == 0 || net_.output_size() != head_.raw_size()) {
        throw std::invalid_argument("actor network output does not match the policy head");
    }
}

void save_actor(std::ostream& out, const Actor& actor) {
    const PolicyHeadConfig& h = actor.head();
    out.write(kActorMagic, sizeof(kActorMagic));
    io::write_le<std::uint32_t>(out, kActorVersion);
    io::write_string(out, std::string(policy_family_name(h.family)));
    io::write_le<double>(out, h.q);
    io::write_le<double>(out, h.nu_base);
    io::write_le<double>(out, h.log_std_min);
    io::write_le<double>(out, h.log_std_max);
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.replacement_batch));
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.action_dim));
    for (double x : h.action_low) io::write_le<double>(out, x);
    for (double x : h.action_high) io::write_le<double>(out, x);
    save_mlp(out, actor.net());
}

Actor load_actor(std::istream& in) {
    char magic[sizeof(kActorMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kActorMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("not an actor checkpoint");
    }
    const auto version = io::read_le<std::uint32_t>(in);
    if (version != kActorVersion) {
        throw std::runtime_error("unsupported actor checkpoint version " + std::to_string(version));
    }
    PolicyHeadConfig h;
    try {
        h.family = parse_policy_family(io::read_string(in, 64));
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("corrupt actor checkpoint: ") + e.what());
    }
    h.q = read_finite(in);
    h.nu_base = read_finite(in);
    h.log_std_min = read_finite(in);
    h.log_std_max = read_finite(in);
    h.replacement_batch = static_cast<int>(io::read_le<std::uint32_t>(in));
    const auto dim = io::read_le<std::uint32_t>(in);
    if (dim == 0 || dim > kMaxActionDim) throw std::runtime_error("corrupt actor checkpoint: action dimension");
    h.action_dim = static_cast<int>(dim);
    h.action_low.resize(dim);
    h.action_high.resize(dim);
    for (double& x : h.action_low) x = read_finite(in);
    for (double& x : h.action_high) x = read_finite(in);
    Mlp net = load_mlp(in);
    try {
        return Actor(std::move(h), std::move(net));
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("corrupt actor checkpoint: ") + e.what());
    }
}

void save_actor(const std::string& path, const Actor& actor) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    save_actor(out, actor);
}

Actor load_actor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_actor(in);
}

} // namespace qexp
