#pragma once

#include <Eigen/Dense>
#include <vector>

#include "orl/mlp.hpp"

namespace orl {

struct AdamConfig {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// First/second moment accumulators, one slot per parameter tensor.
struct AdamState {
    AdamConfig config;
    long step_count = 0;
    std::vector<Eigen::MatrixXd> weight_m, weight_v;
    std::vector<Eigen::VectorXd> bias_m, bias_v;
};

AdamState adam_init(const Mlp& net, const AdamConfig& config);

// One bias-corrected Adam step over all parameters of `net`, in place.
// Throws NumericError naming the offending layer if a gradient is not finite.
void adam_step(Mlp& net, const GradientBundle& grads, AdamState& state);

}  // namespace orl
