#include "qexp/nn_core.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "qexp/binary_io.hpp"
#include "qexp/kernels.hpp"
#include "qexp/samplers.hpp"

namespace qexp {

namespace {

constexpr char kCheckpointMagic[8] = {'Q', 'X', 'M', 'L', 'P', '0', '0', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::uint64_t kMaxLayerWidth = 1u << 20;

std::vector<std::size_t> compute_offsets(const std::vector<std::size_t>& sizes, std::size_t& total) {
    std::vector<std::size_t> offsets;
    total = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        offsets.push_back(total);
        total += sizes[l + 1] * sizes[l] + sizes[l + 1];
    }
    return offsets;
}

} // namespace

Mlp::Mlp(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) {
        throw std::invalid_argument("Mlp needs at least an input and an output size");
    }
    for (auto s : sizes_) {
        if (s == 0 || s > kMaxLayerWidth) {
            throw std::invalid_argument("Mlp layer width out of range");
        }
    }
    std::size_t total = 0;
    offsets_ = compute_offsets(sizes_, total);
    params_.assign(total, 0.0);
}

Mlp Mlp::initialized(std::vector<std::size_t> layer_sizes, Rng& rng) {
    Mlp net(std::move(layer_sizes));
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const std::size_t in = net.sizes_[l];
        const std::size_t out = net.sizes_[l + 1];
        const double bound = std::sqrt(1.0 / static_cast<double>(in));
        double* w = net.weights(l);
        for (std::size_t i = 0; i < out * in + out; ++i) {
            w[i] = rng.uniform(-bound, bound);
        }
    }
    return net;
}

Batch mlp_forward(const Mlp& net, const Batch& input, MlpTape* tape) {
    if (input.cols != net.input_size()) {
        throw std::invalid_argument("mlp_forward: input width does not match the first layer");
    }
    const auto& k = kernels::active();
    const auto& sizes = net.layer_sizes();
    const std::size_t n = input.rows;
    if (tape != nullptr) {
        tape->activations.clear();
        tape->activations.reserve(net.num_layers());
        tape->activations.push_back(input);
    }
    Batch current = input;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const std::size_t in = sizes[l];
        const std::size_t out = sizes[l + 1];
        Batch next(n, out);
        const bool hidden = l + 1 < net.num_layers();
        for (std::size_t r = 0; r < n; ++r) {
            double* y = next.row(r);
            k.gemv(net.weights(l), net.bias(l), current.row(r), y, out, in);
            if (hidden) {
                for (std::size_t j = 0; j < out; ++j) y[j] = y[j] > 0.0 ? y[j] : 0.0;
            }
        }
        if (tape != nullptr && hidden) tape->activations.push_back(next);
        current = std::move(next);
    }
    return current;
}

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input) {
    Batch b(1, input.size());
    std::copy(input.begin(), input.end(), b.data.begin());
    return mlp_forward(net, b).data;
}

void mlp_backward(const Mlp& net, const MlpTape& tape, const Batch& output_grad,
                  std::span<double> param_grad, Batch* input_grad) {
    if (tape.activations.size() != net.num_layers()) {
        throw std::invalid_argument("mlp_backward: tape does not match the network");
    }
    if (param_grad.size() != net.param_count()) {
        throw std::invalid_argument("mlp_backward: parameter gradient has the wrong size");
    }
    const std::size_t n = tape.activations.front().rows;
    if (output_grad.rows != n || output_grad.cols != net.output_size()) {
        throw std::invalid_argument("mlp_backward: output gradient shape mismatch");
    }
    const auto& k = kernels::active();
    const auto& sizes = net.layer_sizes();

    Batch delta = output_grad;
    for (std::size_t li = net.num_layers(); li-- > 0;) {
        const std::size_t in = sizes[li];
        const std::size_t out = sizes[li + 1];
        const Batch& act = tape.activations[li];
        const double* w = net.weights(li);
        double* gw = param_grad.data() + (net.weights(li) - net.params().data());
        double* gb = gw + out * in;
        const bool need_prev = li > 0 || input_grad != nullptr;
        Batch prev = need_prev ? Batch(n, in) : Batch();
        for (std::size_t r = 0; r < n; ++r) {
            const double* d = delta.row(r);
            const double* a = act.row(r);
            for (std::size_t j = 0; j < out; ++j) {
                const double dj = d[j];
                if (dj == 0.0) continue;
                k.axpy(dj, a, gw + j * in, in);
                gb[j] += dj;
                if (need_prev) k.axpy(dj, w + j * in, prev.row(r), in);
            }
        }
        if (li > 0) {
            // ReLU derivative from the post-activation value of the layer below.
            for (std::size_t i = 0; i < prev.data.size(); ++i) {
                if (act.data[i] <= 0.0) prev.data[i] = 0.0;
            }
            delta = std::move(prev);
        } else if (input_grad != nullptr) {
            *input_grad = std::move(prev);
        }
    }
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (grads.size() != params.size() || state.m.size() != params.size() ||
        state.v.size() != params.size()) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const kernels::AdamCoefficients c{state.learning_rate,
                                      state.beta1,
                                      state.beta2,
                                      state.epsilon,
                                      1.0 - std::pow(state.beta1, t),
                                      1.0 - std::pow(state.beta2, t)};
    kernels::active().adam(params.data(), grads.data(), state.m.data(), state.v.data(),
                           params.size(), c);
}

void adam_step(Mlp& net, std::span<const double> grads, AdamState& state) {
    adam_step(net.params(), grads, state);
}

void polyak_update(Mlp& target, const Mlp& online, double alpha) {
    if (!target.same_shape(online)) {
        throw std::invalid_argument("polyak_update: shape mismatch");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("polyak_update: alpha must lie in (0, 1]");
    }
    kernels::active().lerp(alpha, online.params().data(), target.params().data(),
                           target.param_count());
}

void save_mlp(std::ostream& out, const Mlp& net) {
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    io::write_le<std::uint32_t>(out, kCheckpointVersion);
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.layer_sizes().size()));
    for (auto s : net.layer_sizes()) io::write_le<std::uint64_t>(out, s);
    io::write_le<std::uint64_t>(out, net.param_count());
    for (double p : net.params()) io::write_le<double>(out, p);
    if (!out) {
        throw std::runtime_error("failed to write network checkpoint");
    }
}

Mlp load_mlp(std::istream& in) {
    char magic[sizeof(kCheckpointMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("not a network checkpoint");
    }
    const auto version = io::read_le<std::uint32_t>(in);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("unsupported network checkpoint version " + std::to_string(version));
    }
    const auto count = io::read_le<std::uint32_t>(in);
    if (count < 2 || count > 64) {
        throw std::runtime_error("corrupt network checkpoint: layer count");
    }
    std::vector<std::size_t> sizes;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto s = io::read_le<std::uint64_t>(in);
        if (s == 0 || s > kMaxLayerWidth) {
            throw std::runtime_error("corrupt network checkpoint: layer width");
        }
        sizes.push_back(static_cast<std::size_t>(s));
    }
    Mlp net(std::move(sizes));
    if (io::read_le<std::uint64_t>(in) != net.param_count()) {
        throw std::runtime_error("corrupt network checkpoint: parameter count");
    }
    for (double& p : net.params()) {
        p = io::read_le<double>(in);
        if (!std::isfinite(p)) {
            throw std::runtime_error("corrupt network checkpoint: non-finite parameter");
        }
    }
    return net;
}

void save_mlp(const std::string& path, const Mlp& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    save_mlp(out, net);
}

Mlp load_mlp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_mlp(in);
}

} // namespace qexp
