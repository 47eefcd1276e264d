#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace orl {

enum class OutputActivation { kIdentity, kTanh };

// Dense feed-forward network with ReLU hidden layers. Batches are row-major:
// one sample per row, feature count per column. weights[k] maps layer k to
// layer k+1 and has shape layer_sizes[k+1] x layer_sizes[k].
struct Mlp {
    std::vector<int> layer_sizes;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    OutputActivation output_activation = OutputActivation::kIdentity;

    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }
    int num_layers() const { return static_cast<int>(weights.size()); }
    long parameter_count() const;
};

// Gradients of sum(upstream .* forward(inputs)) with respect to every
// parameter and to the inputs themselves. Shapes mirror their counterparts.
struct GradientBundle {
    std::vector<Eigen::MatrixXd> weight_grads;
    std::vector<Eigen::VectorXd> bias_grads;
    Eigen::MatrixXd input_grads;

    bool all_finite() const;
};

// Uniform fan-in initialization: every weight and bias of layer k is drawn
// from U[-1/sqrt(fan_in), +1/sqrt(fan_in)]. Deterministic given seed.
Mlp mlp_init(const std::vector<int>& layer_sizes, OutputActivation output_activation,
             std::uint64_t seed);

Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& inputs);

// Intermediate activations of one forward pass; feeds the backward pass when
// the caller wants to avoid recomputing the forward.
struct ForwardTrace {
    std::vector<Eigen::MatrixXd> layer_outputs;  // post-activation, one per layer
    const Eigen::MatrixXd& output() const { return layer_outputs.back(); }
};

ForwardTrace mlp_forward_trace(const Mlp& net, const Eigen::MatrixXd& inputs);

GradientBundle mlp_backward(const Mlp& net, const Eigen::MatrixXd& inputs,
                            const Eigen::MatrixXd& upstream);

GradientBundle mlp_backward(const Mlp& net, const Eigen::MatrixXd& inputs,
                            const ForwardTrace& trace, const Eigen::MatrixXd& upstream);

}  // namespace orl
