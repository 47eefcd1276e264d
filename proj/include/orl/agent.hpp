#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "orl/adam.hpp"
#include "orl/dataset.hpp"
#include "orl/env.hpp"
#include "orl/mlp.hpp"
#include "orl/rng.hpp"

namespace orl {

struct Td3bcConfig {
    double alpha = 2.5;          // Q-term weight numerator in lambda
    double discount = 0.99;
    double tau = 5e-3;           // soft target update rate
    double policy_noise = 0.2;   // target policy smoothing stddev
    double noise_clip = 0.5;
    int policy_freq = 2;         // actor/target update cadence
    int batch_size = 256;
    double actor_lr = 3e-4;
    double critic_lr = 3e-4;
    std::vector<int> hidden_sizes{64, 64};
    bool use_bc_term = true;   // off: plain TD3 actor objective (lambda kept)
    bool use_q_term = true;    // off: pure behavior cloning
    bool use_state_norm = true;
    double lambda_floor = 1e-8;

    void validate() const;  // throws std::invalid_argument
};

// Actor, twin critics, their targets, and optimizer states. Exclusively
// owned by one training loop; snapshots may be copied out for evaluation.
struct TrainState {
    Mlp actor, critic1, critic2;
    Mlp actor_target, critic1_target, critic2_target;
    AdamState actor_opt, critic1_opt, critic2_opt;
    long step_count = 0;
    Eigen::VectorXd action_low, action_high;
};

struct LossReport {
    double critic_loss = 0.0;
    std::optional<double> actor_loss;    // present iff an actor update ran
    std::optional<double> lambda_value;  // present iff actor update ran with the Q term
    double mean_abs_q = 0.0;
};

TrainState agent_init(const EnvSpec& spec, const Td3bcConfig& config, std::uint64_t seed);

// Deterministic actions of the current actor for a batch of (normalized)
// states: tanh head scaled into the action box.
Eigen::MatrixXd actor_forward(const TrainState& state, const Eigen::MatrixXd& states);

// Clipped double-Q target with target policy smoothing:
// y = r + discount * (1 - terminal) * min(Q1'(s', a~), Q2'(s', a~)).
Eigen::VectorXd compute_target(const TransitionBatch& batch, const TrainState& state,
                               const Td3bcConfig& config, Rng& rng);

struct CriticUpdateResult {
    double loss = 0.0;        // mean (Q1-y)^2 + mean (Q2-y)^2
    double mean_abs_q = 0.0;  // mean |Q1(s,a)| at dataset actions, pre-update
};

CriticUpdateResult critic_update(TrainState& state, const TransitionBatch& batch,
                                 const Eigen::VectorXd& targets);

// lambda = alpha / max(mean |Q|, floor). The estimate is a constant in the
// actor objective; nothing differentiates through it.
double compute_lambda(const Eigen::VectorXd& q_values, double alpha, double lambda_floor);

struct ActorLossGrad {
    double loss = 0.0;
    std::optional<double> lambda;
    GradientBundle grads;
};

// Loss and exact actor-parameter gradient of
//   -[use_q] lambda mean(Q1(s, pi(s))) + [use_bc] mean ||pi(s) - a||^2.
// lambda_override substitutes the lambda estimate (diagnostics/tests only).
ActorLossGrad actor_loss_and_grad(const TrainState& state, const TransitionBatch& batch,
                                  const Td3bcConfig& config,
                                  std::optional<double> lambda_override = std::nullopt);

struct ActorUpdateResult {
    double loss = 0.0;
    std::optional<double> lambda;
};

ActorUpdateResult actor_update(TrainState& state, const TransitionBatch& batch,
                               const Td3bcConfig& config);

// theta' <- tau * theta + (1 - tau) * theta' for all three target networks.
void soft_update_targets(TrainState& state, double tau);

// One full training step: minibatch, critic update every step (when the Q
// term is enabled), actor + target updates every policy_freq steps.
LossReport train_step(TrainState& state, const OfflineDataset& dataset,
                      const Td3bcConfig& config, Rng& rng);

// Deterministic action for one raw observation; normalizes with `stats` when
// given. No exploration noise.
Eigen::VectorXd select_action(const TrainState& state, const Eigen::VectorXd& raw_observation,
                              const NormalizationStats* stats);

}  // namespace orl
