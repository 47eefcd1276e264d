#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orl/agent.hpp"
#include "orl/env.hpp"

namespace orl {

struct EvaluationRecord {
    long train_step = 0;
    std::vector<double> episode_returns;
    std::vector<std::uint64_t> episode_seeds;
};

// Time-ordered evaluation history of one training run.
struct RunLog {
    nlohmann::json config_snapshot;  // experiment config, seed included
    std::string env_name;
    double random_ref = 0.0;
    double expert_ref = 0.0;
    std::vector<EvaluationRecord> records;
    double train_seconds = 0.0;
    double eval_seconds = 0.0;
};

struct AggregateReport {
    std::vector<std::uint64_t> seeds;
    std::vector<double> per_seed_final;        // final_performance per seed
    std::vector<double> per_seed_worst_episode;     // last record, percent
    std::vector<double> per_seed_worst_evaluation;  // window 10, percent
    double mean_final = 0.0;
    double stddev_final = 0.0;  // population convention over seeds

    nlohmann::json to_json() const;
};

// Rolls out the deterministic policy; episode i uses seed base_seed + i.
// Returns are undiscounted reward sums.
EvaluationRecord evaluate_policy(const TrainState& state, const NormalizationStats* stats,
                                 const EnvSpec& spec, int episodes, std::uint64_t base_seed,
                                 long train_step);

// 100 * (raw - random_ref) / (expert_ref - random_ref).
double normalized_score(double raw, double random_ref, double expert_ref);

// Mean normalized score over all episode returns in the last 10 records.
double final_performance(const RunLog& log);

// 100 * (min - mean) / |mean| over one record's episode returns (<= 0).
double worst_episode_deviation(const EvaluationRecord& record);

// Same deviation over the per-record mean returns of the last `window`
// records.
double worst_evaluation_deviation(const RunLog& log, int window = 10);

// Per-seed final performance plus stability metrics; logs must share one
// configuration up to the seed field.
AggregateReport aggregate_over_seeds(const std::vector<RunLog>& logs);

// 100 * (candidate - reference) / |reference|.
double percent_difference(double candidate, double reference);

}  // namespace orl
