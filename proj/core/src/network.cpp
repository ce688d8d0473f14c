#include "hemo/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "hemo/binary_io.hpp"

namespace hemo {

namespace {

constexpr double kStdFloor = 1e-8;
const std::vector<int> kDefaultLayers = {23, 5, 5, 5, 3};

std::vector<double> floored(std::vector<double> stddev) {
    for (double& s : stddev) {
        if (s < kStdFloor) s = kStdFloor;
    }
    return stddev;
}

}  // namespace

Network Network::init(std::uint64_t seed) { return init(kDefaultLayers, seed); }

Network Network::init(const std::vector<int>& layers, std::uint64_t seed) {
    if (layers.size() < 2) throw std::invalid_argument("network needs at least two layers");
    for (int s : layers) {
        if (s <= 0) throw std::invalid_argument("network layer sizes must be positive");
    }
    Network net;
    net.layers_ = layers;
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
        const int fan_in = layers[l];
        const int fan_out = layers[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> uni(-bound, bound);
        std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out);
        for (double& x : w) x = uni(rng);
        net.weights_.push_back(std::move(w));
        net.biases_.emplace_back(fan_out, 0.0);
    }
    net.in_mean_.assign(layers.front(), 0.0);
    net.in_std_.assign(layers.front(), 1.0);
    net.out_mean_.assign(layers.back(), 0.0);
    net.out_std_.assign(layers.back(), 1.0);
    return net;
}

void Network::check_initialized() const {
    if (layers_.empty()) throw std::logic_error("network used before initialization");
}

// Allocation-free evaluation; callers validate first. Ping-pong scratch
// buffers persist per thread so per-particle calls stay cheap.
void Network::forward_scratch(const double* input, double* output) const {
    thread_local std::vector<double> bufa, bufb;
    std::size_t width = 0;
    for (int s : layers_) width = std::max(width, static_cast<std::size_t>(s));
    if (bufa.size() < width) {
        bufa.resize(width);
        bufb.resize(width);
    }
    double* x = bufa.data();
    double* y = bufb.data();
    const int in_n = layers_.front();
    for (int i = 0; i < in_n; ++i) x[i] = (input[i] - in_mean_[i]) / in_std_[i];
    const std::size_t last = weights_.size() - 1;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const int rows = layers_[l + 1];
        const int cols = layers_[l];
        for (int r = 0; r < rows; ++r) {
            double acc = biases_[l][r];
            const double* wrow = weights_[l].data() + static_cast<std::size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) acc += wrow[c] * x[c];
            y[r] = l == last ? acc : std::tanh(acc);
        }
        std::swap(x, y);
    }
    const int out_n = layers_.back();
    for (int i = 0; i < out_n; ++i) output[i] = x[i] * out_std_[i] + out_mean_[i];
}

std::vector<double> Network::forward_raw(const std::vector<double>& input) const {
    check_initialized();
    if (static_cast<int>(input.size()) != layers_.front()) {
        throw std::invalid_argument("network input size mismatch");
    }
    for (double v : input) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite network input");
    }
    std::vector<double> out(static_cast<std::size_t>(layers_.back()));
    forward_scratch(input.data(), out.data());
    return out;
}

Vec3 Network::forward(const FeatureVector& f) const {
    check_initialized();
    if (layers_.front() != kFeatureDim) {
        throw std::invalid_argument("network input size mismatch");
    }
    if (layers_.back() != 3) {
        throw std::logic_error("network output layer is not 3-dimensional");
    }
    for (double v : f) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite network input");
    }
    double out[3];
    forward_scratch(f.data(), out);
    return {out[0], out[1], out[2]};
}

double Network::train_step_raw(const std::vector<double>& input,
                               const std::vector<double>& target, double lr) {
    check_initialized();
    if (static_cast<int>(input.size()) != layers_.front() ||
        static_cast<int>(target.size()) != layers_.back()) {
        throw std::invalid_argument("training sample size mismatch");
    }
    if (lr < 0.0) throw std::invalid_argument("learning rate must be nonnegative");

    // Forward with cached activations; activations[0] is the normalized input.
    std::vector<std::vector<double>> acts(layers_.size());
    acts[0].resize(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) {
        acts[0][i] = (input[i] - in_mean_[i]) / in_std_[i];
    }
    const std::size_t last = weights_.size() - 1;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const int rows = layers_[l + 1];
        const int cols = layers_[l];
        acts[l + 1].resize(rows);
        for (int r = 0; r < rows; ++r) {
            double acc = biases_[l][r];
            const double* wrow = weights_[l].data() + static_cast<std::size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) acc += wrow[c] * acts[l][c];
            acts[l + 1][r] = l == last ? acc : std::tanh(acc);
        }
    }

    // MSE over normalized outputs: loss = (1/n) sum (y - t_norm)^2.
    const int out_dim = layers_.back();
    std::vector<double> delta(out_dim);
    double loss = 0.0;
    for (int i = 0; i < out_dim; ++i) {
        const double t_norm = (target[i] - out_mean_[i]) / out_std_[i];
        const double err = acts.back()[i] - t_norm;
        loss += err * err;
        delta[i] = 2.0 * err / out_dim;
    }
    loss /= out_dim;
    if (!std::isfinite(loss)) throw std::runtime_error("training diverged: non-finite loss");

    for (std::size_t l = weights_.size(); l-- > 0;) {
        const int rows = layers_[l + 1];
        const int cols = layers_[l];
        std::vector<double> prev_delta;
        if (l > 0) {
            prev_delta.assign(cols, 0.0);
            for (int r = 0; r < rows; ++r) {
                const double* wrow = weights_[l].data() + static_cast<std::size_t>(r) * cols;
                for (int c = 0; c < cols; ++c) prev_delta[c] += wrow[c] * delta[r];
            }
            // tanh' = 1 - a^2 at the layer below (hidden layers only).
            for (int c = 0; c < cols; ++c) prev_delta[c] *= 1.0 - acts[l][c] * acts[l][c];
        }
        for (int r = 0; r < rows; ++r) {
            double* wrow = weights_[l].data() + static_cast<std::size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) wrow[c] -= lr * delta[r] * acts[l][c];
            biases_[l][r] -= lr * delta[r];
        }
        delta = std::move(prev_delta);
    }
    return loss;
}

double Network::train_step(const FeatureVector& f, const Vec3& target, double lr) {
    const std::vector<double> in(f.begin(), f.end());
    return train_step_raw(in, {target.x, target.y, target.z}, lr);
}

void Network::set_input_normalization(std::vector<double> mean, std::vector<double> stddev) {
    check_initialized();
    if (static_cast<int>(mean.size()) != layers_.front() || mean.size() != stddev.size()) {
        throw std::invalid_argument("input normalization size mismatch");
    }
    in_mean_ = std::move(mean);
    in_std_ = floored(std::move(stddev));
}

void Network::set_output_normalization(std::vector<double> mean, std::vector<double> stddev) {
    check_initialized();
    if (static_cast<int>(mean.size()) != layers_.back() || mean.size() != stddev.size()) {
        throw std::invalid_argument("output normalization size mismatch");
    }
    out_mean_ = std::move(mean);
    out_std_ = floored(std::move(stddev));
}

void Network::save(const std::string& path) const {
    check_initialized();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write model file " + path);
    io::write_magic(os, "PCN1");
    io::write_u32(os, kFormatVersion);
    io::write_u32(os, static_cast<std::uint32_t>(layers_.size()));
    for (int s : layers_) io::write_u32(os, static_cast<std::uint32_t>(s));
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        for (double w : weights_[l]) io::write_f32(os, static_cast<float>(w));
        for (double b : biases_[l]) io::write_f32(os, static_cast<float>(b));
    }
    for (std::size_t i = 0; i < in_mean_.size(); ++i) {
        io::write_f32(os, static_cast<float>(in_mean_[i]));
        io::write_f32(os, static_cast<float>(in_std_[i]));
    }
    for (std::size_t i = 0; i < out_mean_.size(); ++i) {
        io::write_f32(os, static_cast<float>(out_mean_[i]));
        io::write_f32(os, static_cast<float>(out_std_[i]));
    }
    io::write_f64(os, meta.h);
    io::write_f64(os, meta.dt);
    io::write_f64(os, meta.v_cap);
    io::write_u32(os, static_cast<std::uint32_t>(meta.bins));
    if (!os) throw std::runtime_error("short write to model file " + path);
}

Network Network::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open model file " + path);
    io::expect_magic(is, "PCN1", path);
    const std::uint32_t version = io::read_u32(is);
    if (version != kFormatVersion) {
        throw std::runtime_error(path + ": model format version " + std::to_string(version) +
                                 ", expected " + std::to_string(kFormatVersion));
    }
    const std::uint32_t nlayers = io::read_u32(is);
    if (nlayers < 2 || nlayers > 64) throw std::runtime_error(path + ": bad layer count");
    Network net;
    net.layers_.resize(nlayers);
    for (auto& s : net.layers_) {
        const std::uint32_t v = io::read_u32(is);
        if (v == 0 || v > 1u << 20) throw std::runtime_error(path + ": bad layer size");
        s = static_cast<int>(v);
    }
    for (std::size_t l = 0; l + 1 < net.layers_.size(); ++l) {
        const std::size_t n = static_cast<std::size_t>(net.layers_[l]) * net.layers_[l + 1];
        std::vector<double> w(n);
        for (double& x : w) x = io::read_f32(is);
        net.weights_.push_back(std::move(w));
        std::vector<double> b(net.layers_[l + 1]);
        for (double& x : b) x = io::read_f32(is);
        net.biases_.push_back(std::move(b));
    }
    auto read_norm = [&](int n, std::vector<double>& mean, std::vector<double>& stddev) {
        mean.resize(n);
        stddev.resize(n);
        for (int i = 0; i < n; ++i) {
            mean[i] = io::read_f32(is);
            stddev[i] = io::read_f32(is);
        }
        stddev = floored(std::move(stddev));
    };
    read_norm(net.layers_.front(), net.in_mean_, net.in_std_);
    read_norm(net.layers_.back(), net.out_mean_, net.out_std_);
    net.meta.h = io::read_f64(is);
    net.meta.dt = io::read_f64(is);
    net.meta.v_cap = io::read_f64(is);
    net.meta.bins = static_cast<int>(io::read_u32(is));
    return net;
}

std::vector<double*> Network::parameters() {
    std::vector<double*> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        for (double& w : weights_[l]) out.push_back(&w);
        for (double& b : biases_[l]) out.push_back(&b);
    }
    return out;
}

std::vector<const double*> Network::parameters() const {
    std::vector<const double*> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        for (const double& w : weights_[l]) out.push_back(&w);
        for (const double& b : biases_[l]) out.push_back(&b);
    }
    return out;
}

bool bitwise_equal(const Network& a, const Network& b) {
    return a.layers_ == b.layers_ && a.weights_ == b.weights_ && a.biases_ == b.biases_ &&
           a.in_mean_ == b.in_mean_ && a.in_std_ == b.in_std_ && a.out_mean_ == b.out_mean_ &&
           a.out_std_ == b.out_std_;
}

}  // namespace hemo
