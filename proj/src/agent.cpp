#include "orl/agent.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "orl/errors.hpp"

namespace orl {

void Td3bcConfig::validate() const {
    if (!(discount > 0.0 && discount < 1.0)) {
        throw std::invalid_argument("config: discount must be in (0, 1)");
    }
    if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("config: tau must be in (0, 1]");
    if (policy_freq < 1) throw std::invalid_argument("config: policy_freq must be >= 1");
    if (noise_clip < 0.0) throw std::invalid_argument("config: noise_clip must be >= 0");
    if (policy_noise < 0.0) throw std::invalid_argument("config: policy_noise must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) {
        throw std::invalid_argument("config: learning rates must be positive");
    }
    if (!(alpha > 0.0)) throw std::invalid_argument("config: alpha must be positive");
    if (!(lambda_floor > 0.0)) throw std::invalid_argument("config: lambda_floor must be positive");
    if (!use_bc_term && !use_q_term) {
        throw std::invalid_argument("config: at least one of the BC/Q terms must be enabled");
    }
    for (int h : hidden_sizes) {
        if (h < 1) throw std::invalid_argument("config: hidden sizes must be positive");
    }
}

TrainState agent_init(const EnvSpec& spec, const Td3bcConfig& config, std::uint64_t seed) {
    config.validate();
    if (spec.obs_dim < 1 || spec.act_dim < 1) {
        throw std::invalid_argument("agent_init: environment dimensions must be positive");
    }

    std::vector<int> actor_sizes{spec.obs_dim};
    actor_sizes.insert(actor_sizes.end(), config.hidden_sizes.begin(), config.hidden_sizes.end());
    actor_sizes.push_back(spec.act_dim);

    std::vector<int> critic_sizes{spec.obs_dim + spec.act_dim};
    critic_sizes.insert(critic_sizes.end(), config.hidden_sizes.begin(),
                        config.hidden_sizes.end());
    critic_sizes.push_back(1);

    TrainState state;
    state.actor = mlp_init(actor_sizes, OutputActivation::kTanh, derive_seed(seed, 1));
    state.critic1 = mlp_init(critic_sizes, OutputActivation::kIdentity, derive_seed(seed, 2));
    state.critic2 = mlp_init(critic_sizes, OutputActivation::kIdentity, derive_seed(seed, 3));
    state.actor_target = state.actor;
    state.critic1_target = state.critic1;
    state.critic2_target = state.critic2;
    state.actor_opt = adam_init(state.actor, {.learning_rate = config.actor_lr});
    state.critic1_opt = adam_init(state.critic1, {.learning_rate = config.critic_lr});
    state.critic2_opt = adam_init(state.critic2, {.learning_rate = config.critic_lr});
    state.action_low = spec.action_low;
    state.action_high = spec.action_high;
    return state;
}

namespace {

Eigen::RowVectorXd action_center(const TrainState& s) {
    return 0.5 * (s.action_high + s.action_low).transpose();
}

Eigen::RowVectorXd action_half_range(const TrainState& s) {
    return 0.5 * (s.action_high - s.action_low).transpose();
}

Eigen::MatrixXd scale_to_box(const TrainState& s, const Eigen::MatrixXd& tanh_out) {
    return (tanh_out.array().rowwise() * action_half_range(s).array()).rowwise() +
           action_center(s).array();
}

Eigen::MatrixXd concat_cols(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
    out << a, b;
    return out;
}

Eigen::MatrixXd clip_rows_to_box(const TrainState& s, Eigen::MatrixXd m) {
    for (long i = 0; i < m.rows(); ++i) {
        for (long j = 0; j < m.cols(); ++j) {
            m(i, j) = std::min(std::max(m(i, j), s.action_low(j)), s.action_high(j));
        }
    }
    return m;
}

}  // namespace

Eigen::MatrixXd actor_forward(const TrainState& state, const Eigen::MatrixXd& states) {
    return scale_to_box(state, mlp_forward(state.actor, states));
}

Eigen::VectorXd compute_target(const TransitionBatch& batch, const TrainState& state,
                               const Td3bcConfig& config, Rng& rng) {
    const long n = batch.size();
    Eigen::MatrixXd next_actions =
        scale_to_box(state, mlp_forward(state.actor_target, batch.next_states));
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < next_actions.cols(); ++j) {
            const double noise = std::min(std::max(rng.normal(0.0, config.policy_noise),
                                                   -config.noise_clip),
                                          config.noise_clip);
            next_actions(i, j) += noise;
        }
    }
    next_actions = clip_rows_to_box(state, std::move(next_actions));

    const Eigen::MatrixXd critic_in = concat_cols(batch.next_states, next_actions);
    const Eigen::VectorXd q1 = mlp_forward(state.critic1_target, critic_in).col(0);
    const Eigen::VectorXd q2 = mlp_forward(state.critic2_target, critic_in).col(0);
    const Eigen::VectorXd q_min = q1.cwiseMin(q2);
    return batch.rewards.array() +
           config.discount * (1.0 - batch.terminals.array()) * q_min.array();
}

CriticUpdateResult critic_update(TrainState& state, const TransitionBatch& batch,
                                 const Eigen::VectorXd& targets) {
    const long n = batch.size();
    if (targets.size() != n) throw ShapeError("critic_update: target length mismatch");
    const Eigen::MatrixXd critic_in = concat_cols(batch.states, batch.actions);

    const ForwardTrace trace1 = mlp_forward_trace(state.critic1, critic_in);
    const ForwardTrace trace2 = mlp_forward_trace(state.critic2, critic_in);
    const Eigen::VectorXd q1 = trace1.output().col(0);
    const Eigen::VectorXd q2 = trace2.output().col(0);

    const Eigen::VectorXd err1 = q1 - targets;
    const Eigen::VectorXd err2 = q2 - targets;
    const double loss = (err1.array().square().mean()) + (err2.array().square().mean());
    if (!std::isfinite(loss)) {
        throw NumericError("critic_update: non-finite loss", state.step_count);
    }

    const double inv_n = 1.0 / static_cast<double>(n);
    const Eigen::MatrixXd upstream1 = (2.0 * inv_n) * err1;
    const Eigen::MatrixXd upstream2 = (2.0 * inv_n) * err2;
    GradientBundle g1 = mlp_backward(state.critic1, critic_in, trace1, upstream1);
    GradientBundle g2 = mlp_backward(state.critic2, critic_in, trace2, upstream2);
    adam_step(state.critic1, g1, state.critic1_opt);
    adam_step(state.critic2, g2, state.critic2_opt);

    return {.loss = loss, .mean_abs_q = q1.cwiseAbs().mean()};
}

double compute_lambda(const Eigen::VectorXd& q_values, double alpha, double lambda_floor) {
    if (q_values.size() == 0) throw std::invalid_argument("compute_lambda: empty Q batch");
    const double mean_abs = q_values.cwiseAbs().mean();
    return alpha / std::max(mean_abs, lambda_floor);
}

ActorLossGrad actor_loss_and_grad(const TrainState& state, const TransitionBatch& batch,
                                  const Td3bcConfig& config,
                                  std::optional<double> lambda_override) {
    const long n = batch.size();
    const double inv_n = 1.0 / static_cast<double>(n);

    const ForwardTrace actor_trace = mlp_forward_trace(state.actor, batch.states);
    const Eigen::MatrixXd pi = scale_to_box(state, actor_trace.output());

    ActorLossGrad result;
    Eigen::MatrixXd d_loss_d_pi = Eigen::MatrixXd::Zero(n, pi.cols());

    if (config.use_q_term) {
        double lambda;
        if (lambda_override) {
            lambda = *lambda_override;
        } else {
            const Eigen::MatrixXd data_in = concat_cols(batch.states, batch.actions);
            const Eigen::VectorXd q_data = mlp_forward(state.critic1, data_in).col(0);
            lambda = compute_lambda(q_data, config.alpha, config.lambda_floor);
        }
        result.lambda = lambda;

        const Eigen::MatrixXd pi_in = concat_cols(batch.states, pi);
        const ForwardTrace q_trace = mlp_forward_trace(state.critic1, pi_in);
        const Eigen::VectorXd q_pi = q_trace.output().col(0);
        result.loss += -lambda * q_pi.mean();

        // Gradient reaches the actor only through the critic's action inputs.
        const Eigen::MatrixXd upstream = Eigen::MatrixXd::Constant(n, 1, -lambda * inv_n);
        const GradientBundle critic_grads = mlp_backward(state.critic1, pi_in, q_trace, upstream);
        d_loss_d_pi += critic_grads.input_grads.rightCols(pi.cols());
    }

    if (config.use_bc_term) {
        const Eigen::MatrixXd residual = pi - batch.actions;
        result.loss += residual.array().square().rowwise().sum().mean();
        d_loss_d_pi += (2.0 * inv_n) * residual;
    }

    const Eigen::MatrixXd actor_upstream =
        d_loss_d_pi.array().rowwise() * action_half_range(state).array();
    result.grads = mlp_backward(state.actor, batch.states, actor_trace, actor_upstream);
    return result;
}

ActorUpdateResult actor_update(TrainState& state, const TransitionBatch& batch,
                               const Td3bcConfig& config) {
    if (state.step_count % config.policy_freq != 0) {
        throw std::logic_error("actor_update: called off the policy_freq cadence");
    }
    ActorLossGrad lg = actor_loss_and_grad(state, batch, config);
    if (!std::isfinite(lg.loss)) {
        throw NumericError("actor_update: non-finite loss", state.step_count);
    }
    adam_step(state.actor, lg.grads, state.actor_opt);
    return {.loss = lg.loss, .lambda = lg.lambda};
}

namespace {

void soft_update(Mlp& target, const Mlp& source, double tau) {
    for (int k = 0; k < source.num_layers(); ++k) {
        target.weights[k] = tau * source.weights[k] + (1.0 - tau) * target.weights[k];
        target.biases[k] = tau * source.biases[k] + (1.0 - tau) * target.biases[k];
    }
}

}  // namespace

void soft_update_targets(TrainState& state, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw std::invalid_argument("soft_update_targets: tau must be in [0, 1]");
    }
    soft_update(state.actor_target, state.actor, tau);
    soft_update(state.critic1_target, state.critic1, tau);
    soft_update(state.critic2_target, state.critic2, tau);
}

LossReport train_step(TrainState& state, const OfflineDataset& dataset,
                      const Td3bcConfig& config, Rng& rng) {
    state.step_count += 1;
    const TransitionBatch batch = sample_minibatch(dataset, config.batch_size, rng);

    LossReport report;
    if (config.use_q_term) {
        const Eigen::VectorXd targets = compute_target(batch, state, config, rng);
        const CriticUpdateResult cu = critic_update(state, batch, targets);
        report.critic_loss = cu.loss;
        report.mean_abs_q = cu.mean_abs_q;
    }

    if (state.step_count % config.policy_freq == 0) {
        const ActorUpdateResult au = actor_update(state, batch, config);
        report.actor_loss = au.loss;
        report.lambda_value = au.lambda;
        soft_update_targets(state, config.tau);
    }
    return report;
}

Eigen::VectorXd select_action(const TrainState& state, const Eigen::VectorXd& raw_observation,
                              const NormalizationStats* stats) {
    Eigen::VectorXd obs = raw_observation;
    if (stats != nullptr) obs = apply_normalization(obs, *stats);
    if (obs.size() != state.actor.input_dim()) {
        throw ShapeError("select_action: observation dimension mismatch");
    }
    const Eigen::MatrixXd action = actor_forward(state, obs.transpose());
    Eigen::VectorXd a = action.row(0).transpose();
    for (long i = 0; i < a.size(); ++i) {
        // tanh scaling keeps the action inside the box; clipping is a no-op.
        assert(a(i) >= state.action_low(i) && a(i) <= state.action_high(i));
        a(i) = std::min(std::max(a(i), state.action_low(i)), state.action_high(i));
    }
    return a;
}

}  // namespace orl
