#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hemo/features.hpp"
#include "hemo/vec.hpp"

namespace hemo {

// Training provenance stamped into the model file. The driver refuses to
// roll out a model whose h / dt / feature binning differ from the scene.
struct ModelMeta {
    double h = 0.0;
    double dt = 0.0;
    double v_cap = 0.0;
    int bins = 0;
};

// Fully-connected tanh regressor with z-score normalization on both ends.
// The production topology is 23-5-5-5-3; arbitrary layer lists are
// supported so tests can hand-evaluate tiny nets.
class Network {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    Network() = default;

    // Xavier-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
    static Network init(std::uint64_t seed);
    static Network init(const std::vector<int>& layers, std::uint64_t seed);

    std::vector<double> forward_raw(const std::vector<double>& input) const;
    Vec3 forward(const FeatureVector& f) const;

    // One SGD step on the mean squared error over the normalized output
    // components; returns that loss. Throws on non-finite loss.
    double train_step_raw(const std::vector<double>& input, const std::vector<double>& target,
                          double lr);
    double train_step(const FeatureVector& f, const Vec3& target, double lr);

    // Stds are floored at 1e-8. Sizes must match the input/output layers.
    void set_input_normalization(std::vector<double> mean, std::vector<double> stddev);
    void set_output_normalization(std::vector<double> mean, std::vector<double> stddev);

    void save(const std::string& path) const;
    static Network load(const std::string& path);

    const std::vector<int>& layers() const { return layers_; }
    int input_dim() const { return layers_.front(); }
    int output_dim() const { return layers_.back(); }

    ModelMeta meta;

    // Flat parameter views used by the gradient check and bitwise equality.
    std::vector<double*> parameters();
    std::vector<const double*> parameters() const;

private:
    friend bool bitwise_equal(const Network& a, const Network& b);

    void check_initialized() const;
    void forward_scratch(const double* input, double* output) const;

    std::vector<int> layers_;
    // weights_[l] is row-major layers_[l+1] x layers_[l]; biases_[l] has
    // layers_[l+1] entries.
    std::vector<std::vector<double>> weights_;
    std::vector<std::vector<double>> biases_;
    std::vector<double> in_mean_, in_std_, out_mean_, out_std_;
};

bool bitwise_equal(const Network& a, const Network& b);

}  // namespace hemo
