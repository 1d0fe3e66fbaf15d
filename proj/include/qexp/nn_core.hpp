#pragma once

// Dense ReLU networks with exact manual backpropagation, Adam and Polyak
// averaging. Parameters live in one flat buffer, layer by layer: the weight
// matrix (out x in, row-major) followed by the bias vector.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace qexp {

class Rng;

/// Row-major rows x cols block of doubles; one row per batch element.
struct Batch {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Batch() = default;
    Batch(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    std::span<double> row_span(std::size_t r) { return {row(r), cols}; }
    std::span<const double> row_span(std::size_t r) const { return {row(r), cols}; }
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Network parameters. Hidden layers use ReLU, the output layer is linear.
class Mlp {
public:
    Mlp() = default;
    /// Zero-initialized network; sizes = {input, hidden..., output}.
    explicit Mlp(std::vector<std::size_t> layer_sizes);

    /// Weights and biases uniform in +-sqrt(1/fan_in).
    static Mlp initialized(std::vector<std::size_t> layer_sizes, Rng& rng);

    const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
    std::size_t num_layers() const { return sizes_.size() - 1; }
    std::size_t input_size() const { return sizes_.front(); }
    std::size_t output_size() const { return sizes_.back(); }
    std::size_t param_count() const { return params_.size(); }

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }

    double* weights(std::size_t layer) { return params_.data() + offsets_[layer]; }
    const double* weights(std::size_t layer) const { return params_.data() + offsets_[layer]; }
    double* bias(std::size_t layer) { return weights(layer) + sizes_[layer + 1] * sizes_[layer]; }
    const double* bias(std::size_t layer) const {
        return weights(layer) + sizes_[layer + 1] * sizes_[layer];
    }

    bool same_shape(const Mlp& other) const { return sizes_ == other.sizes_; }
    friend bool operator==(const Mlp&, const Mlp&) = default;

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

/// Activations recorded by a forward pass; activations[l] is the input to layer l.
struct MlpTape {
    std::vector<Batch> activations;
};

/// Batched forward pass. Throws std::invalid_argument on a width mismatch.
Batch mlp_forward(const Mlp& net, const Batch& input, MlpTape* tape = nullptr);
std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input);

/// Accumulates d<output_grad, output>/dparams into param_grad (size
/// param_count()) and writes the input gradient when input_grad is non-null.
void mlp_backward(const Mlp& net, const MlpTape& tape, const Batch& output_grad,
                  std::span<double> param_grad, Batch* input_grad = nullptr);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    AdamState() = default;
    AdamState(std::size_t n, double lr, double b1, double b2, double eps = 1e-8)
        : m(n, 0.0), v(n, 0.0), learning_rate(lr), beta1(b1), beta2(b2), epsilon(eps) {}
};

/// One bias-corrected Adam update. Throws std::invalid_argument on shape mismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);
void adam_step(Mlp& net, std::span<const double> grads, AdamState& state);

/// target <- (1 - alpha) target + alpha online.
void polyak_update(Mlp& target, const Mlp& online, double alpha);

/// Versioned binary checkpoint: "QXMLP001", u32 version, u32 layer count + 1,
/// u64 sizes, u64 parameter count, f64 parameters, all little-endian.
void save_mlp(std::ostream& out, const Mlp& net);
Mlp load_mlp(std::istream& in);
void save_mlp(const std::string& path, const Mlp& net);
Mlp load_mlp(const std::string& path);

} // namespace qexp
