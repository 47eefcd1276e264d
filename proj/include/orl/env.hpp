#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "orl/rng.hpp"

namespace orl {

inline constexpr int kReferenceEpisodes = 1000;
inline constexpr std::uint64_t kReferenceSeed = 7;

// Static description of one environment, including the frozen reference
// returns that anchor normalized scores (0 = scripted random policy,
// 100 = scripted expert). The frozen values are averages over
// kReferenceEpisodes episodes seeded with kReferenceSeed and are reproduced
// exactly by reference_scores() with those arguments.
struct EnvSpec {
    std::string name;
    int obs_dim = 0;
    int act_dim = 0;
    Eigen::VectorXd action_low, action_high;
    int horizon = 0;
    double reward_low = 0.0, reward_high = 0.0;
    double random_ref = 0.0, expert_ref = 0.0;
};

struct EnvState {
    Eigen::VectorXd observation;
    Eigen::VectorXd internal;  // environment-private coordinates
    int steps_elapsed = 0;
    bool timeout = false;  // set when done was triggered by the step limit
};

struct StepResult {
    EnvState next_state;
    double reward = 0.0;
    bool done = false;
};

enum class PolicyTier { kRandom, kMedium, kExpert };

// Registry, addressed by name: "lqr1d", "pointmass", "pendulum".
const EnvSpec& env_spec(const std::string& name);
const std::vector<std::string>& env_names();

// Initial state; all stochasticity lives here. Dynamics are deterministic.
EnvState env_reset(const EnvSpec& spec, std::uint64_t seed);

// Caller must supply an in-range action (clip before calling).
StepResult env_step(const EnvSpec& spec, const EnvState& state, const Eigen::VectorXd& action);

// random: uniform over the action box. expert: per-environment controller
// (lqr1d: stationary LQR gain; pointmass: PD toward the goal; pendulum:
// energy pumping plus PD balance). medium: expert action with Gaussian noise
// of 0.3 x action half-range, and a 20% chance of a uniform random action.
Eigen::VectorXd scripted_policy(const EnvSpec& spec, PolicyTier tier, const EnvState& state,
                                Rng& rng);

// Mean undiscounted return of the scripted random and expert policies.
std::pair<double, double> reference_scores(const EnvSpec& spec, int episodes, std::uint64_t seed);

// Mean undiscounted return of one scripted tier (used by dataset summaries).
double scripted_policy_return(const EnvSpec& spec, PolicyTier tier, int episodes,
                              std::uint64_t seed);

// The stationary feedback gain used by the lqr1d expert: action = -K [x, v].
Eigen::RowVector2d lqr1d_expert_gain();

PolicyTier tier_from_name(const std::string& name);
std::string tier_name(PolicyTier tier);

}  // namespace orl
