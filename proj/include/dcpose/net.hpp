#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcpose/pose.hpp"

namespace dcpose::net {

// Feed-forward architecture: flattened image -> tanh hidden layers -> linear
// output of 2*num_joints coordinates. The noise vector is concatenated to the
// input of the layer at injection_layer. Layers before the injection form a
// shared trunk; layers from the injection onward belong to one of num_heads
// branch heads (one head per action for the conditional network). A forward
// pass uses exactly one head; every other head is masked out of both the
// output and the gradient.
struct NetConfig {
    int input_dim = 0;
    std::vector<int> hidden = {128, 64};
    int noise_dim = 16;
    int num_joints = 15;
    int num_heads = 1;
    // Index of the layer whose input is augmented with the noise vector.
    // Must name a hidden layer (not the input, not the output layer).
    // -1 disables the noise path entirely (requires noise_dim == 0).
    int injection_layer = 1;

    int layers() const { return static_cast<int>(hidden.size()) + 1; }
    int output_dim() const { return 2 * num_joints; }
    // Layer widths including input and output: hidden.size() + 2 entries.
    std::vector<int> widths() const;
    int layer_in(int layer) const;   // fan-in, including noise at the injection layer
    int layer_out(int layer) const;  // fan-out
    // First layer owned by the heads (== injection_layer, or layers() when
    // there is no injection: then the single "head" block is empty).
    int trunk_layers() const { return injection_layer < 0 ? layers() : injection_layer; }

    void validate() const;  // throws DataError on an inconsistent config
};

struct Params {
    NetConfig cfg;
    std::vector<double> values;

    std::size_t trunk_size() const;
    std::size_t head_size() const;
    // Offset of layer `layer`'s weight block for `head`; bias follows the
    // weights. Trunk layers ignore `head`.
    std::size_t weight_offset(int head, int layer) const;
    std::size_t bias_offset(int head, int layer) const;
};

std::size_t param_count(const NetConfig& cfg);

// Uniform init on [-s, s] with s = sqrt(6 / (fan_in + fan_out)); zero biases.
Params init_params(const NetConfig& cfg, std::uint64_t seed);

struct TrunkCache {
    std::vector<std::vector<double>> inputs;   // per trunk layer
    std::vector<std::vector<double>> preacts;  // per trunk layer
    std::vector<double> output;                // activation entering the head (pre-noise)
};

struct HeadCache {
    int head = 0;
    std::vector<double> noise;
    std::vector<std::vector<double>> inputs;   // per head layer; first one includes the noise
    std::vector<std::vector<double>> preacts;
};

struct ForwardCache {
    TrunkCache trunk;
    HeadCache head;
};

// Trunk evaluation is head- and noise-independent, so it can be computed once
// per image and reused across the K noise draws.
TrunkCache forward_trunk(const Params& params, const Image& image);

std::pair<Pose, HeadCache> forward_head(const Params& params, const TrunkCache& trunk,
                                        std::span<const double> noise, int head);

// Full forward pass. head must be -1 for a single-head network and a valid
// head index otherwise. Pure function of its arguments.
std::pair<Pose, ForwardCache> forward(const Params& params, const Image& image,
                                      std::span<const double> noise, int head = -1);

// Reverse-mode gradient of a scalar loss whose gradient w.r.t. the output
// pose coordinates is dpose. Returns a vector the size of params.values;
// entries of heads other than the cached one are exactly zero.
std::vector<double> backward(const Params& params, const ForwardCache& cache,
                             std::span<const double> dpose);

// Split backward pass for the trunk-reuse path: accumulate one sample's head
// gradient into grad and its gradient w.r.t. the trunk output into dtrunk;
// then run the trunk once with the summed dtrunk.
void backward_head_accum(const Params& params, const TrunkCache& trunk, const HeadCache& head,
                         std::span<const double> dpose, std::vector<double>& grad,
                         std::vector<double>& dtrunk);
void backward_trunk_accum(const Params& params, const TrunkCache& trunk,
                          std::span<const double> dtrunk, std::vector<double>& grad);

// A differentiable scalar loss of the network output: value and gradient
// w.r.t. the pose coordinates.
using PoseLoss = std::function<std::pair<double, std::vector<double>>(const Pose&)>;

// Compares backward against central finite differences of the loss over every
// parameter; returns the maximum relative error with denominator
// max(|analytic|, |numeric|, 1e-12).
double grad_check(const Params& params, const Image& image, std::span<const double> noise,
                  int head, const PoseLoss& loss, double epsilon);

// Checkpoint serialization: versioned text header followed by one parameter
// value per line, printed with 17 significant digits.
void save_checkpoint(const Params& params, const std::string& role, const std::string& decoder,
                     std::uint64_t seed, const std::string& path);

struct Checkpoint {
    Params params;
    std::string role;     // "prediction" | "conditional"
    std::string decoder;  // "meu" | "zero_noise"
    std::uint64_t seed = 0;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace dcpose::net
