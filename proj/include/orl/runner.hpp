#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orl/agent.hpp"
#include "orl/dataset.hpp"
#include "orl/metrics.hpp"

namespace orl {

// Full description of one experiment (all seeds). Every run artifact is a
// pure function of this structure plus the code version.
struct ExperimentConfig {
    std::string env_name = "lqr1d";
    std::string dataset_path;  // when empty, generate from (tier, size, data_seed)
    DatasetTier tier = DatasetTier::kExpert;
    long dataset_size = 100000;
    std::uint64_t dataset_seed = 1;
    Td3bcConfig agent;
    long total_steps = 50000;
    long eval_every = 2500;
    int episodes_per_eval = 10;
    std::vector<std::uint64_t> seeds{0, 1, 2};
    std::filesystem::path output_dir;
    int jobs = 1;

    void validate() const;
    nlohmann::json to_json() const;

    // Restores the step budget, eval cadence, and hidden sizes used at full
    // benchmark scale (1M steps, eval every 5k, hidden 256x256).
    void apply_paper_parity();
};

// "key = value" config file: strings (bare or quoted), numbers, booleans,
// and [a, b, c] integer lists. '#' starts a comment.
ExperimentConfig load_config_file(const std::filesystem::path& path);

std::uint64_t fnv1a_hash(const std::string& text);

// Training loop for one seed. Numeric failures are caught and recorded on
// the returned log (failed/failure fields) so sibling seeds keep running.
struct TrainingOutcome {
    RunLog log;
    TrainState final_state;
    std::optional<NormalizationStats> stats;
    bool failed = false;
    std::string failure;
    double max_mean_abs_q = 0.0;
    double final_mean_abs_q = 0.0;
};

TrainingOutcome run_training(const ExperimentConfig& config, const OfflineDataset& raw,
                             std::uint64_t seed);

// CSV log schema: step, ep_return_0..N-1, mean_return, normalized_mean.
void write_run_csv(const RunLog& log, const std::filesystem::path& path);

struct CsvRunData {
    std::vector<long> steps;
    std::vector<std::vector<double>> episode_returns;  // one row per evaluation
    std::vector<double> mean_return;
    std::vector<double> normalized_mean;
};

CsvRunData read_run_csv(const std::filesystem::path& path);

// Checkpoint container ("ORLC"): all six networks, the three Adam states,
// step counter, and the config hash, versioned like the dataset format.
void save_checkpoint(const TrainState& state, std::uint64_t config_hash,
                     const std::filesystem::path& path);

struct Checkpoint {
    TrainState state;
    std::uint64_t config_hash = 0;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

struct SeedRunResult {
    std::uint64_t seed = 0;
    bool failed = false;
    std::string failure;
    RunLog log;
    double final_score = 0.0;  // final_performance, successful seeds only
    double max_mean_abs_q = 0.0;
    double final_mean_abs_q = 0.0;
};

struct ExperimentResult {
    std::vector<SeedRunResult> seed_results;
    std::optional<AggregateReport> aggregate;  // absent when every seed failed
    std::filesystem::path report_path;
};

// Runs every seed (optionally `jobs` seeds in parallel), writes one CSV log,
// checkpoint, and timing JSON per seed plus an aggregate report.json.
ExperimentResult train_experiment(const ExperimentConfig& config, const OfflineDataset& dataset);

struct ProfileArm {
    std::string name;
    long steps = 0;
    double seconds = 0.0;
    double per_step_ms = 0.0;
};

struct ProfileResult {
    std::vector<ProfileArm> arms;  // td3bc, td3 (no BC term), bc (no Q term)
    double td3bc_over_td3_pct = 0.0;
    nlohmann::json to_json() const;
};

// Times bare training steps (no evaluation) of the three configuration arms
// on the same dataset.
ProfileResult profile_training(const ExperimentConfig& config, const OfflineDataset& dataset,
                               long steps, long warmup);

// Cross-seed learning-curve summary: per step, mean and population stddev of
// the normalized means, plus the per-run stability metrics.
struct CurveReport {
    std::vector<long> steps;
    std::vector<double> mean_normalized;
    std::vector<double> stddev_normalized;
    std::vector<double> per_run_worst_episode_pct;
    std::vector<double> per_run_worst_evaluation_pct;
};

CurveReport summarize_runs(const std::vector<CsvRunData>& runs);

void write_curve_csv(const CurveReport& report, const std::filesystem::path& path);
void write_stability_csv(const CurveReport& report, const std::filesystem::path& path);

// Default output root: $ORL_OUTPUT_DIR, falling back to ./orl_out.
std::filesystem::path default_output_root();

// Shortest round-trip decimal formatting used by every text artifact.
std::string format_double(double value);

}  // namespace orl
