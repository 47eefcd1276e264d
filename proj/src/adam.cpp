#include "orl/adam.hpp"

#include <cmath>
#include <string>

#include "orl/errors.hpp"

namespace orl {

AdamState adam_init(const Mlp& net, const AdamConfig& config) {
    AdamState state;
    state.config = config;
    for (int k = 0; k < net.num_layers(); ++k) {
        state.weight_m.push_back(Eigen::MatrixXd::Zero(net.weights[k].rows(), net.weights[k].cols()));
        state.weight_v.push_back(Eigen::MatrixXd::Zero(net.weights[k].rows(), net.weights[k].cols()));
        state.bias_m.push_back(Eigen::VectorXd::Zero(net.biases[k].size()));
        state.bias_v.push_back(Eigen::VectorXd::Zero(net.biases[k].size()));
    }
    return state;
}

namespace {

template <typename Tensor>
void update_tensor(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v,
                   const AdamConfig& cfg, double bias1, double bias2) {
    m.array() = cfg.beta1 * m.array() + (1.0 - cfg.beta1) * grad.array();
    v.array() = cfg.beta2 * v.array() + (1.0 - cfg.beta2) * grad.array().square();
    param.array() -=
        cfg.learning_rate * (m.array() / bias1) / ((v.array() / bias2).sqrt() + cfg.epsilon);
}

}  // namespace

void adam_step(Mlp& net, const GradientBundle& grads, AdamState& state) {
    if (static_cast<int>(grads.weight_grads.size()) != net.num_layers()) {
        throw ShapeError("adam_step: gradient layer count does not match network");
    }
    for (int k = 0; k < net.num_layers(); ++k) {
        if (!grads.weight_grads[k].allFinite() || !grads.bias_grads[k].allFinite()) {
            throw NumericError("adam_step: non-finite gradient in layer " + std::to_string(k),
                               state.step_count);
        }
        if (grads.weight_grads[k].rows() != net.weights[k].rows() ||
            grads.weight_grads[k].cols() != net.weights[k].cols() ||
            grads.bias_grads[k].size() != net.biases[k].size()) {
            throw ShapeError("adam_step: gradient shape mismatch in layer " + std::to_string(k));
        }
    }

    state.step_count += 1;
    const double bias1 = 1.0 - std::pow(state.config.beta1, static_cast<double>(state.step_count));
    const double bias2 = 1.0 - std::pow(state.config.beta2, static_cast<double>(state.step_count));
    for (int k = 0; k < net.num_layers(); ++k) {
        update_tensor(net.weights[k], grads.weight_grads[k], state.weight_m[k], state.weight_v[k],
                      state.config, bias1, bias2);
        update_tensor(net.biases[k], grads.bias_grads[k], state.bias_m[k], state.bias_v[k],
                      state.config, bias1, bias2);
    }
}

}  // namespace orl
