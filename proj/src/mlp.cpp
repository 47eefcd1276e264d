#include "orl/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "orl/errors.hpp"
#include "orl/rng.hpp"

namespace orl {

long Mlp::parameter_count() const {
    long n = 0;
    for (int k = 0; k < num_layers(); ++k) {
        n += weights[k].size() + biases[k].size();
    }
    return n;
}

bool GradientBundle::all_finite() const {
    for (const auto& g : weight_grads) {
        if (!g.allFinite()) return false;
    }
    for (const auto& g : bias_grads) {
        if (!g.allFinite()) return false;
    }
    return input_grads.allFinite();
}

Mlp mlp_init(const std::vector<int>& layer_sizes, OutputActivation output_activation,
             std::uint64_t seed) {
    if (layer_sizes.size() < 2) {
        throw std::invalid_argument("mlp_init: need at least input and output layer sizes");
    }
    for (int s : layer_sizes) {
        if (s < 1) throw std::invalid_argument("mlp_init: layer sizes must be positive");
    }

    Mlp net;
    net.layer_sizes = layer_sizes;
    net.output_activation = output_activation;
    Rng rng(seed);
    for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
        const int fan_in = layer_sizes[k];
        const int fan_out = layer_sizes[k + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r) {
            for (int c = 0; c < fan_in; ++c) {
                w(r, c) = rng.uniform(-bound, bound);
            }
        }
        Eigen::VectorXd b(fan_out);
        for (int r = 0; r < fan_out; ++r) {
            b(r) = rng.uniform(-bound, bound);
        }
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

namespace {

void check_input_width(const Mlp& net, const Eigen::MatrixXd& inputs) {
    if (inputs.cols() != net.input_dim()) {
        throw ShapeError("mlp_forward: input has " + std::to_string(inputs.cols()) +
                         " columns, network expects " + std::to_string(net.input_dim()));
    }
}

}  // namespace

ForwardTrace mlp_forward_trace(const Mlp& net, const Eigen::MatrixXd& inputs) {
    check_input_width(net, inputs);
    ForwardTrace trace;
    trace.layer_outputs.reserve(net.num_layers());
    const Eigen::MatrixXd* prev = &inputs;
    for (int k = 0; k < net.num_layers(); ++k) {
        Eigen::MatrixXd z = (*prev) * net.weights[k].transpose();
        z.rowwise() += net.biases[k].transpose();
        const bool last = (k == net.num_layers() - 1);
        if (!last) {
            z = z.cwiseMax(0.0);
        } else if (net.output_activation == OutputActivation::kTanh) {
            z = z.array().tanh();
        }
        trace.layer_outputs.push_back(std::move(z));
        prev = &trace.layer_outputs.back();
    }
    return trace;
}

Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& inputs) {
    return mlp_forward_trace(net, inputs).layer_outputs.back();
}

GradientBundle mlp_backward(const Mlp& net, const Eigen::MatrixXd& inputs,
                            const ForwardTrace& trace, const Eigen::MatrixXd& upstream) {
    const Eigen::MatrixXd& output = trace.output();
    if (upstream.rows() != output.rows() || upstream.cols() != output.cols()) {
        throw ShapeError("mlp_backward: upstream shape does not match forward output");
    }

    GradientBundle grads;
    grads.weight_grads.resize(net.num_layers());
    grads.bias_grads.resize(net.num_layers());

    // delta holds d(sum(upstream .* output)) / d(pre-activation of layer k).
    Eigen::MatrixXd delta;
    if (net.output_activation == OutputActivation::kTanh) {
        delta = upstream.array() * (1.0 - output.array().square());
    } else {
        delta = upstream;
    }

    for (int k = net.num_layers() - 1; k >= 0; --k) {
        const Eigen::MatrixXd& layer_in = (k == 0) ? inputs : trace.layer_outputs[k - 1];
        grads.weight_grads[k].noalias() = delta.transpose() * layer_in;
        grads.bias_grads[k] = delta.colwise().sum().transpose();
        Eigen::MatrixXd below = delta * net.weights[k];
        if (k > 0) {
            // ReLU: pass gradient only where the forward output was positive.
            below = below.array() * (trace.layer_outputs[k - 1].array() > 0.0).cast<double>();
        }
        delta = std::move(below);
    }
    grads.input_grads = std::move(delta);
    return grads;
}

GradientBundle mlp_backward(const Mlp& net, const Eigen::MatrixXd& inputs,
                            const Eigen::MatrixXd& upstream) {
    return mlp_backward(net, inputs, mlp_forward_trace(net, inputs), upstream);
}

}  // namespace orl
