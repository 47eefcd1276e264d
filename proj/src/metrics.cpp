#include "orl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace orl {

EvaluationRecord evaluate_policy(const TrainState& state, const NormalizationStats* stats,
                                 const EnvSpec& spec, int episodes, std::uint64_t base_seed,
                                 long train_step) {
    if (episodes < 1) throw std::invalid_argument("evaluate_policy: episodes must be >= 1");
    EvaluationRecord record;
    record.train_step = train_step;
    record.episode_returns.reserve(static_cast<std::size_t>(episodes));
    record.episode_seeds.reserve(static_cast<std::size_t>(episodes));
    for (int i = 0; i < episodes; ++i) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
        EnvState env_state = env_reset(spec, seed);
        double total = 0.0;
        for (;;) {
            const Eigen::VectorXd action = select_action(state, env_state.observation, stats);
            StepResult step = env_step(spec, env_state, action);
            total += step.reward;
            if (step.done) break;
            env_state = std::move(step.next_state);
        }
        record.episode_returns.push_back(total);
        record.episode_seeds.push_back(seed);
    }
    return record;
}

double normalized_score(double raw, double random_ref, double expert_ref) {
    if (!(expert_ref > random_ref)) {
        throw std::invalid_argument("normalized_score: expert_ref must exceed random_ref");
    }
    return 100.0 * (raw - random_ref) / (expert_ref - random_ref);
}

double final_performance(const RunLog& log) {
    if (log.records.size() < 10) {
        throw std::invalid_argument("final_performance: need at least 10 evaluation records");
    }
    double sum = 0.0;
    long count = 0;
    for (std::size_t i = log.records.size() - 10; i < log.records.size(); ++i) {
        for (double ret : log.records[i].episode_returns) {
            sum += normalized_score(ret, log.random_ref, log.expert_ref);
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("final_performance: records hold no returns");
    return sum / static_cast<double>(count);
}

namespace {

double min_mean_deviation(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("deviation: empty value list");
    const double mean =
        std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (std::abs(mean) < 1e-12) {
        throw std::invalid_argument("deviation: mean too close to zero");
    }
    const double min = *std::min_element(values.begin(), values.end());
    return 100.0 * (min - mean) / std::abs(mean);
}

}  // namespace

double worst_episode_deviation(const EvaluationRecord& record) {
    return min_mean_deviation(record.episode_returns);
}

double worst_evaluation_deviation(const RunLog& log, int window) {
    if (window < 1) throw std::invalid_argument("worst_evaluation_deviation: window must be >= 1");
    if (log.records.size() < static_cast<std::size_t>(window)) {
        throw std::invalid_argument("worst_evaluation_deviation: fewer records than window");
    }
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(window));
    for (std::size_t i = log.records.size() - static_cast<std::size_t>(window);
         i < log.records.size(); ++i) {
        const auto& returns = log.records[i].episode_returns;
        if (returns.empty()) {
            throw std::invalid_argument("worst_evaluation_deviation: record holds no returns");
        }
        means.push_back(std::accumulate(returns.begin(), returns.end(), 0.0) /
                        static_cast<double>(returns.size()));
    }
    return min_mean_deviation(means);
}

AggregateReport aggregate_over_seeds(const std::vector<RunLog>& logs) {
    if (logs.empty()) throw std::invalid_argument("aggregate_over_seeds: no logs");

    nlohmann::json reference = logs.front().config_snapshot;
    reference.erase("seed");
    for (const auto& log : logs) {
        nlohmann::json other = log.config_snapshot;
        other.erase("seed");
        if (other != reference) {
            throw std::invalid_argument("aggregate_over_seeds: configs differ beyond the seed");
        }
    }

    AggregateReport report;
    for (const auto& log : logs) {
        report.seeds.push_back(log.config_snapshot.value("seed", std::uint64_t{0}));
        report.per_seed_final.push_back(final_performance(log));
        report.per_seed_worst_episode.push_back(worst_episode_deviation(log.records.back()));
        report.per_seed_worst_evaluation.push_back(worst_evaluation_deviation(log));
    }

    const double n = static_cast<double>(report.per_seed_final.size());
    report.mean_final =
        std::accumulate(report.per_seed_final.begin(), report.per_seed_final.end(), 0.0) / n;
    double var = 0.0;
    for (double f : report.per_seed_final) {
        var += (f - report.mean_final) * (f - report.mean_final);
    }
    report.stddev_final = std::sqrt(var / n);
    return report;
}

double percent_difference(double candidate, double reference) {
    if (std::abs(reference) < 1e-12) {
        throw std::invalid_argument("percent_difference: reference too close to zero");
    }
    return 100.0 * (candidate - reference) / std::abs(reference);
}

nlohmann::json AggregateReport::to_json() const {
    nlohmann::json j;
    j["seeds"] = seeds;
    j["per_seed_final"] = per_seed_final;
    j["per_seed_worst_episode_pct"] = per_seed_worst_episode;
    j["per_seed_worst_evaluation_pct"] = per_seed_worst_evaluation;
    j["mean_final"] = mean_final;
    j["stddev_final"] = stddev_final;
    return j;
}

}  // namespace orl
