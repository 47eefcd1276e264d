#include "orl/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "orl/errors.hpp"

namespace orl {

namespace {

enum class Kind { kLqr1d, kPointMass, kPendulum };

Kind kind_of(const EnvSpec& spec) {
    if (spec.name == "lqr1d") return Kind::kLqr1d;
    if (spec.name == "pointmass") return Kind::kPointMass;
    if (spec.name == "pendulum") return Kind::kPendulum;
    throw std::invalid_argument("unknown environment: " + spec.name);
}

double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

double wrap_angle(double theta) {
    // into [-pi, pi)
    const double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(theta + std::numbers::pi, two_pi);
    if (w < 0) w += two_pi;
    return w - std::numbers::pi;
}

// ---------------------------------------------------------------- lqr1d ----
// Double integrator driven to the origin. Stage cost x^2 + 0.1 a^2.
namespace lqr {
constexpr double kDt = 0.05;
constexpr double kForce = 0.6;
constexpr double kStateClamp = 2.0;
constexpr double kQx = 1.0;   // position weight
constexpr double kR = 0.1;    // action weight

Eigen::Matrix2d dynamics_a() {
    Eigen::Matrix2d a;
    a << 1.0, kDt, 0.0, 1.0;
    return a;
}

Eigen::Vector2d dynamics_b() { return {0.0, kDt * kForce}; }

// Stationary gain from iterating the discrete Riccati equation to a fixed
// point: action = -K [x, v].
Eigen::RowVector2d solve_gain() {
    const Eigen::Matrix2d a = dynamics_a();
    const Eigen::Vector2d b = dynamics_b();
    Eigen::Matrix2d q = Eigen::Matrix2d::Zero();
    q(0, 0) = kQx;
    Eigen::Matrix2d p = q;
    for (int it = 0; it < 100000; ++it) {
        const double denom = kR + (b.transpose() * p * b).value();
        const Eigen::Matrix2d next =
            q + a.transpose() * p * a -
            (a.transpose() * p * b) * (b.transpose() * p * a) / denom;
        const double diff = (next - p).cwiseAbs().maxCoeff();
        p = next;
        if (diff < 1e-14) break;
    }
    const double denom = kR + (b.transpose() * p * b).value();
    return (b.transpose() * p * a) / denom;
}

const Eigen::RowVector2d& gain() {
    static const Eigen::RowVector2d k = solve_gain();
    return k;
}
}  // namespace lqr

// ------------------------------------------------------------ pointmass ----
// Damped point mass on a bounded plane, reward is negative distance to a
// per-episode goal.
namespace pm {
constexpr double kDt = 0.1;
constexpr double kAccel = 3.0;
constexpr double kDamping = 0.85;
constexpr double kPosClamp = 1.2;
constexpr double kVelClamp = 3.0;
constexpr double kPGain = 1.2;
constexpr double kDGain = 1.0;
constexpr double kGoalBox = 0.5;
}  // namespace pm

// ------------------------------------------------------------- pendulum ----
// Torque-limited swing-up, theta = 0 upright. Underactuated: max torque
// cannot lift the pendulum statically, the expert has to pump energy.
namespace pend {
constexpr double kDt = 0.05;
constexpr double kGravity = 10.0;
constexpr double kMass = 1.0;
constexpr double kLength = 1.0;
constexpr double kMaxTorque = 2.0;
constexpr double kMaxSpeed = 8.0;
constexpr double kInertia = kMass * kLength * kLength / 3.0;
constexpr double kEnergyTop = kMass * kGravity * kLength / 2.0;
// Aim slightly above the upright energy so the swing always crosses the top
// (an exact target stalls just short of the balance region).
constexpr double kEnergyTarget = kEnergyTop + 0.3;
constexpr double kEnergyGain = 1.0;
constexpr double kBalanceAngle = 0.5;
constexpr double kBalanceSpeed = 2.5;
constexpr double kBalanceP = 10.0;
constexpr double kBalanceD = 2.5;

double total_energy(double theta, double theta_dot) {
    return 0.5 * kInertia * theta_dot * theta_dot + kEnergyTop * std::cos(theta);
}

Eigen::VectorXd observe(double theta, double theta_dot) {
    Eigen::VectorXd obs(3);
    obs << std::cos(theta), std::sin(theta), theta_dot / kMaxSpeed;
    return obs;
}
}  // namespace pend

EnvSpec make_spec(const std::string& name, int obs_dim, int act_dim, int horizon,
                  double reward_low, double reward_high, double random_ref, double expert_ref) {
    EnvSpec spec;
    spec.name = name;
    spec.obs_dim = obs_dim;
    spec.act_dim = act_dim;
    spec.action_low = Eigen::VectorXd::Constant(act_dim, -1.0);
    spec.action_high = Eigen::VectorXd::Constant(act_dim, 1.0);
    spec.horizon = horizon;
    spec.reward_low = reward_low;
    spec.reward_high = reward_high;
    spec.random_ref = random_ref;
    spec.expert_ref = expert_ref;
    return spec;
}

const std::vector<EnvSpec>& registry() {
    // Reference returns frozen from reference_scores(spec, kReferenceEpisodes,
    // kReferenceSeed); the env test suite recomputes them.
    static const std::vector<EnvSpec> specs = {
        make_spec("lqr1d", 2, 1, 100, -(lqr::kStateClamp * lqr::kStateClamp + lqr::kR), 0.0,
                  /*random_ref=*/-41.509258707651263, /*expert_ref=*/-7.4283757231118219),
        make_spec("pointmass", 6, 2, 100,
                  -std::hypot(pm::kPosClamp + pm::kGoalBox, pm::kPosClamp + pm::kGoalBox),
                  0.0,
                  /*random_ref=*/-114.877028203923, /*expert_ref=*/-8.7994874591027195),
        make_spec("pendulum", 3, 1, 200,
                  -(std::numbers::pi * std::numbers::pi +
                    0.1 * pend::kMaxSpeed * pend::kMaxSpeed +
                    0.001 * pend::kMaxTorque * pend::kMaxTorque),
                  0.0,
                  /*random_ref=*/-1221.1210665179149, /*expert_ref=*/-155.38568882412568),
    };
    return specs;
}

}  // namespace

const EnvSpec& env_spec(const std::string& name) {
    for (const auto& spec : registry()) {
        if (spec.name == name) return spec;
    }
    throw std::invalid_argument("unknown environment: " + name);
}

const std::vector<std::string>& env_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& spec : registry()) out.push_back(spec.name);
        return out;
    }();
    return names;
}

EnvState env_reset(const EnvSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    EnvState state;
    state.steps_elapsed = 0;
    switch (kind_of(spec)) {
        case Kind::kLqr1d: {
            state.internal = Eigen::Vector2d(rng.uniform(-1.0, 1.0), 0.0);
            state.observation = state.internal;
            break;
        }
        case Kind::kPointMass: {
            Eigen::VectorXd internal(6);
            internal << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),  // position
                0.0, 0.0,                                                // velocity
                rng.uniform(-pm::kGoalBox, pm::kGoalBox),
                rng.uniform(-pm::kGoalBox, pm::kGoalBox);                // goal
            state.internal = internal;
            state.observation = Eigen::VectorXd(6);
            state.observation << internal(0), internal(1), internal(2), internal(3),
                internal(4) - internal(0), internal(5) - internal(1);
            break;
        }
        case Kind::kPendulum: {
            const double theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
            const double theta_dot = rng.uniform(-1.0, 1.0);
            state.internal = Eigen::Vector2d(theta, theta_dot);
            state.observation = pend::observe(theta, theta_dot);
            break;
        }
    }
    return state;
}

StepResult env_step(const EnvSpec& spec, const EnvState& state, const Eigen::VectorXd& action) {
    if (action.size() != spec.act_dim) {
        throw ShapeError("env_step: action has wrong dimension for " + spec.name);
    }
    for (int i = 0; i < spec.act_dim; ++i) {
        if (action(i) < spec.action_low(i) || action(i) > spec.action_high(i)) {
            throw std::invalid_argument("env_step: action outside the action box; clip first");
        }
    }
    if (state.steps_elapsed >= spec.horizon) {
        throw std::invalid_argument("env_step: episode already finished");
    }

    StepResult result;
    result.next_state.steps_elapsed = state.steps_elapsed + 1;

    switch (kind_of(spec)) {
        case Kind::kLqr1d: {
            const double x = state.internal(0);
            const double v = state.internal(1);
            const double a = action(0);
            result.reward = -(lqr::kQx * x * x + lqr::kR * a * a);
            const double nx = clip(x + lqr::kDt * v, -lqr::kStateClamp, lqr::kStateClamp);
            const double nv = clip(v + lqr::kDt * lqr::kForce * a, -lqr::kStateClamp,
                                   lqr::kStateClamp);
            result.next_state.internal = Eigen::Vector2d(nx, nv);
            result.next_state.observation = result.next_state.internal;
            break;
        }
        case Kind::kPointMass: {
            const Eigen::VectorXd& in = state.internal;
            const Eigen::Vector2d pos(in(0), in(1));
            const Eigen::Vector2d vel(in(2), in(3));
            const Eigen::Vector2d goal(in(4), in(5));
            result.reward = -(pos - goal).norm();
            Eigen::Vector2d nvel = pm::kDamping * vel + pm::kDt * pm::kAccel * action;
            nvel = nvel.cwiseMax(-pm::kVelClamp).cwiseMin(pm::kVelClamp);
            Eigen::Vector2d npos = pos + pm::kDt * nvel;
            npos = npos.cwiseMax(-pm::kPosClamp).cwiseMin(pm::kPosClamp);
            Eigen::VectorXd internal(6);
            internal << npos(0), npos(1), nvel(0), nvel(1), goal(0), goal(1);
            result.next_state.internal = internal;
            result.next_state.observation = Eigen::VectorXd(6);
            result.next_state.observation << npos(0), npos(1), nvel(0), nvel(1),
                goal(0) - npos(0), goal(1) - npos(1);
            break;
        }
        case Kind::kPendulum: {
            const double theta = state.internal(0);
            const double theta_dot = state.internal(1);
            const double torque = pend::kMaxTorque * action(0);
            result.reward = -(theta * theta + 0.1 * theta_dot * theta_dot +
                              0.001 * torque * torque);
            // Semi-implicit Euler; gravity accelerates away from upright.
            const double accel = 1.5 * pend::kGravity / pend::kLength * std::sin(theta) +
                                 torque / pend::kInertia;
            const double ntheta_dot =
                clip(theta_dot + pend::kDt * accel, -pend::kMaxSpeed, pend::kMaxSpeed);
            const double ntheta = wrap_angle(theta + pend::kDt * ntheta_dot);
            result.next_state.internal = Eigen::Vector2d(ntheta, ntheta_dot);
            result.next_state.observation = pend::observe(ntheta, ntheta_dot);
            break;
        }
    }

    if (result.next_state.steps_elapsed >= spec.horizon) {
        result.done = true;
        result.next_state.timeout = true;
    }
    return result;
}

namespace {

Eigen::VectorXd random_action(const EnvSpec& spec, Rng& rng) {
    Eigen::VectorXd a(spec.act_dim);
    for (int i = 0; i < spec.act_dim; ++i) {
        a(i) = rng.uniform(spec.action_low(i), spec.action_high(i));
    }
    return a;
}

Eigen::VectorXd expert_action(const EnvSpec& spec, const EnvState& state) {
    Eigen::VectorXd a(spec.act_dim);
    switch (kind_of(spec)) {
        case Kind::kLqr1d: {
            a(0) = -(lqr::gain() * Eigen::Vector2d(state.internal(0), state.internal(1))).value();
            break;
        }
        case Kind::kPointMass: {
            const Eigen::VectorXd& in = state.internal;
            const Eigen::Vector2d pos(in(0), in(1));
            const Eigen::Vector2d vel(in(2), in(3));
            const Eigen::Vector2d goal(in(4), in(5));
            const Eigen::Vector2d cmd = pm::kPGain * (goal - pos) - pm::kDGain * vel;
            a = cmd;
            break;
        }
        case Kind::kPendulum: {
            const double theta = state.internal(0);
            const double theta_dot = state.internal(1);
            double torque;
            if (std::abs(theta) < pend::kBalanceAngle &&
                std::abs(theta_dot) < pend::kBalanceSpeed) {
                torque = -pend::kBalanceP * theta - pend::kBalanceD * theta_dot;
            } else if (std::abs(theta_dot) < 1e-3) {
                torque = pend::kMaxTorque;  // break the standstill
            } else {
                const double deficit =
                    pend::kEnergyTarget - pend::total_energy(theta, theta_dot);
                torque = pend::kEnergyGain * deficit * (theta_dot > 0 ? 1.0 : -1.0);
            }
            a(0) = torque / pend::kMaxTorque;
            break;
        }
    }
    for (int i = 0; i < spec.act_dim; ++i) {
        a(i) = clip(a(i), spec.action_low(i), spec.action_high(i));
    }
    return a;
}

}  // namespace

Eigen::VectorXd scripted_policy(const EnvSpec& spec, PolicyTier tier, const EnvState& state,
                                Rng& rng) {
    switch (tier) {
        case PolicyTier::kRandom:
            return random_action(spec, rng);
        case PolicyTier::kExpert:
            return expert_action(spec, state);
        case PolicyTier::kMedium: {
            if (rng.uniform01() < 0.2) {
                return random_action(spec, rng);
            }
            Eigen::VectorXd a = expert_action(spec, state);
            for (int i = 0; i < spec.act_dim; ++i) {
                const double range = spec.action_high(i) - spec.action_low(i);
                a(i) = clip(a(i) + rng.normal(0.0, 0.3 * range), spec.action_low(i),
                            spec.action_high(i));
            }
            return a;
        }
    }
    throw std::invalid_argument("scripted_policy: unknown tier");
}

namespace {

double rollout_return(const EnvSpec& spec, PolicyTier tier, std::uint64_t episode_seed) {
    EnvState state = env_reset(spec, episode_seed);
    Rng policy_rng(derive_seed(episode_seed, 0x706f6c69637921ULL));
    double total = 0.0;
    for (;;) {
        const Eigen::VectorXd action = scripted_policy(spec, tier, state, policy_rng);
        StepResult step = env_step(spec, state, action);
        total += step.reward;
        if (step.done) break;
        state = std::move(step.next_state);
    }
    return total;
}

}  // namespace

double scripted_policy_return(const EnvSpec& spec, PolicyTier tier, int episodes,
                              std::uint64_t seed) {
    double sum = 0.0;
    for (int i = 0; i < episodes; ++i) {
        sum += rollout_return(spec, tier, derive_seed(seed, static_cast<std::uint64_t>(i)));
    }
    return sum / episodes;
}

std::pair<double, double> reference_scores(const EnvSpec& spec, int episodes,
                                           std::uint64_t seed) {
    if (episodes < 1) throw std::invalid_argument("reference_scores: episodes must be positive");
    return {scripted_policy_return(spec, PolicyTier::kRandom, episodes, seed),
            scripted_policy_return(spec, PolicyTier::kExpert, episodes, seed)};
}

Eigen::RowVector2d lqr1d_expert_gain() { return lqr::gain(); }

PolicyTier tier_from_name(const std::string& name) {
    if (name == "random") return PolicyTier::kRandom;
    if (name == "medium") return PolicyTier::kMedium;
    if (name == "expert") return PolicyTier::kExpert;
    throw std::invalid_argument("unknown policy tier: " + name);
}

std::string tier_name(PolicyTier tier) {
    switch (tier) {
        case PolicyTier::kRandom: return "random";
        case PolicyTier::kMedium: return "medium";
        case PolicyTier::kExpert: return "expert";
    }
    return "?";
}

}  // namespace orl
