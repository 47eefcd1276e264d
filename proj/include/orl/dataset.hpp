#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "orl/env.hpp"
#include "orl/rng.hpp"

namespace orl {

enum class DatasetTier { kRandom, kMedium, kMediumReplay, kMediumExpert, kExpert, kMixed };

std::string dataset_tier_name(DatasetTier tier);
DatasetTier dataset_tier_from_name(const std::string& name);

struct Transition {
    Eigen::VectorXd state;
    Eigen::VectorXd action;
    double reward = 0.0;
    Eigen::VectorXd next_state;
    bool terminal = false;  // genuine MDP termination only, never a timeout
};

// Per-feature statistics of the state columns. sigma is the population
// standard deviation; normalization divides by sigma + epsilon.
struct NormalizationStats {
    Eigen::VectorXd mu;
    Eigen::VectorXd sigma;
    double epsilon = 1e-3;
};

// Fixed batch of transitions, stored column-contiguous per field. Immutable
// once generated except for the one-shot normalization pass.
struct OfflineDataset {
    std::string env_name;
    DatasetTier tier = DatasetTier::kRandom;
    std::uint64_t generator_seed = 0;
    Eigen::MatrixXd states;       // size x obs_dim
    Eigen::MatrixXd actions;      // size x act_dim
    Eigen::VectorXd rewards;      // size
    Eigen::MatrixXd next_states;  // size x obs_dim
    std::vector<std::uint8_t> terminals;
    std::optional<NormalizationStats> stats;

    long size() const { return states.rows(); }
    int obs_dim() const { return static_cast<int>(states.cols()); }
    int act_dim() const { return static_cast<int>(actions.cols()); }
};

// Minibatch view used by the learner; terminals as a 0/1 double mask.
struct TransitionBatch {
    Eigen::MatrixXd states;
    Eigen::MatrixXd actions;
    Eigen::VectorXd rewards;
    Eigen::MatrixXd next_states;
    Eigen::VectorXd terminals;

    long size() const { return states.rows(); }
};

// Rolls out the scripted policies until `size` transitions are collected.
// medium_replay sweeps a random->medium action blend across the collection;
// medium_expert concatenates half medium, half expert. Normalization stats
// are computed (not applied) as part of generation. Deterministic in seed.
OfflineDataset generate_dataset(const EnvSpec& spec, DatasetTier tier, long size,
                                std::uint64_t seed);

// Half of each dataset, sampled uniformly without replacement, concatenated.
OfflineDataset mix_datasets(const OfflineDataset& a, const OfflineDataset& b, std::uint64_t seed);

// Mean and population standard deviation over the `state` rows only.
NormalizationStats compute_normalization(const OfflineDataset& d, double epsilon = 1e-3);

// (x - mu) / (sigma + epsilon), elementwise. Not idempotent: re-applying
// shifts by the already-normalized statistics.
Eigen::VectorXd apply_normalization(const Eigen::VectorXd& x, const NormalizationStats& stats);

// Normalizes both state and next_state columns in place and records stats.
void apply_normalization(OfflineDataset& d, const NormalizationStats& stats);

TransitionBatch sample_minibatch(const OfflineDataset& d, int batch_size, Rng& rng);

Transition get_transition(const OfflineDataset& d, long index);

// Returns of the complete episodes embedded in a generated dataset (reward
// sums over horizon-length runs of consecutive transitions). Empty for mixed
// datasets, whose rows have lost their episode structure.
std::vector<double> embedded_episode_returns(const OfflineDataset& d);

// Container format: "ORLD" magic, u32 version, u64 JSON header length, JSON
// header, then per-transition little-endian f64 records
// [state | action | reward | next_state | terminal byte].
void save_dataset(const OfflineDataset& d, const std::filesystem::path& path);
OfflineDataset load_dataset(const std::filesystem::path& path);

}  // namespace orl
