#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "orl/dataset.hpp"
#include "orl/env.hpp"
#include "orl/errors.hpp"
#include "orl/metrics.hpp"
#include "orl/runner.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumeric = 3;

struct TrainFlags {
    std::string config_path;
    std::string env;
    std::string data_path;
    std::string tier = "expert";
    long size = 100000;
    std::uint64_t data_seed = 1;
    long steps = 0;
    long eval_every = 0;
    int episodes = 0;
    std::vector<std::uint64_t> seeds;
    std::string out_dir;
    int jobs = 0;
    double alpha = 2.5;
    double tau = 0.0;
    double discount = 0.0;
    int batch_size = 0;
    std::vector<int> hidden;
    bool no_bc = false;
    bool no_q = false;
    bool no_norm = false;
    bool paper_parity = false;
};

orl::OfflineDataset obtain_dataset(const orl::ExperimentConfig& config) {
    if (!config.dataset_path.empty()) {
        return orl::load_dataset(config.dataset_path);
    }
    return orl::generate_dataset(orl::env_spec(config.env_name), config.tier,
                                 config.dataset_size, config.dataset_seed);
}

void print_dataset_summary(const orl::OfflineDataset& d) {
    std::cout << "dataset: env=" << d.env_name << " tier=" << orl::dataset_tier_name(d.tier)
              << " size=" << d.size() << " seed=" << d.generator_seed << "\n";
    const auto returns = orl::embedded_episode_returns(d);
    if (!returns.empty()) {
        const double mean =
            std::accumulate(returns.begin(), returns.end(), 0.0) /
            static_cast<double>(returns.size());
        std::cout << "episodes: " << returns.size()
                  << "  mean return: " << orl::format_double(mean) << "\n";
    }
    if (d.stats) {
        std::cout << "state feature mu/sigma:\n";
        for (long i = 0; i < d.stats->mu.size(); ++i) {
            std::cout << "  [" << i << "] mu=" << orl::format_double(d.stats->mu(i))
                      << " sigma=" << orl::format_double(d.stats->sigma(i)) << "\n";
        }
    }
}

int cmd_gen_data(const std::string& env, const std::string& tier, long size,
                 std::uint64_t seed, std::string out_path) {
    const orl::EnvSpec& spec = orl::env_spec(env);
    const orl::DatasetTier tier_id = orl::dataset_tier_from_name(tier);
    const orl::OfflineDataset dataset = orl::generate_dataset(spec, tier_id, size, seed);
    if (out_path.empty()) {
        const fs::path root = orl::default_output_root();
        fs::create_directories(root);
        out_path = (root / (env + "_" + tier + "_" + std::to_string(size) + "_" +
                            std::to_string(seed) + ".orld"))
                       .string();
    }
    orl::save_dataset(dataset, out_path);
    print_dataset_summary(dataset);
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

int cmd_mix_data(const std::string& a_path, const std::string& b_path, std::uint64_t seed,
                 const std::string& out_path) {
    const orl::OfflineDataset a = orl::load_dataset(a_path);
    const orl::OfflineDataset b = orl::load_dataset(b_path);
    const orl::OfflineDataset mixed = orl::mix_datasets(a, b, seed);
    orl::save_dataset(mixed, out_path);
    print_dataset_summary(mixed);
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

orl::ExperimentConfig build_train_config(const CLI::App* cmd, const TrainFlags& flags) {
    orl::ExperimentConfig config;
    if (!flags.config_path.empty()) config = orl::load_config_file(flags.config_path);
    if (flags.paper_parity) config.apply_paper_parity();

    const auto given = [cmd](const std::string& name) {
        const CLI::Option* opt = cmd->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    if (given("--env")) config.env_name = flags.env;
    if (given("--data")) config.dataset_path = flags.data_path;
    if (given("--tier")) config.tier = orl::dataset_tier_from_name(flags.tier);
    if (given("--size")) config.dataset_size = flags.size;
    if (given("--data-seed")) config.dataset_seed = flags.data_seed;
    if (given("--steps")) config.total_steps = flags.steps;
    if (given("--eval-every")) config.eval_every = flags.eval_every;
    if (given("--episodes")) config.episodes_per_eval = flags.episodes;
    if (given("--seeds")) config.seeds = flags.seeds;
    if (given("--out")) config.output_dir = flags.out_dir;
    if (given("--jobs")) config.jobs = flags.jobs;
    if (given("--alpha")) config.agent.alpha = flags.alpha;
    if (given("--tau")) config.agent.tau = flags.tau;
    if (given("--discount")) config.agent.discount = flags.discount;
    if (given("--batch-size")) config.agent.batch_size = flags.batch_size;
    if (given("--hidden")) config.agent.hidden_sizes = flags.hidden;
    if (flags.no_bc) config.agent.use_bc_term = false;
    if (flags.no_q) config.agent.use_q_term = false;
    if (flags.no_norm) config.agent.use_state_norm = false;
    return config;
}

int cmd_train(const CLI::App* cmd, const TrainFlags& flags) {
    orl::ExperimentConfig config = build_train_config(cmd, flags);
    config.validate();
    const orl::OfflineDataset dataset = obtain_dataset(config);

    const orl::ExperimentResult result = orl::train_experiment(config, dataset);
    bool any_ok = false;
    for (const auto& seed_result : result.seed_results) {
        if (seed_result.failed) {
            std::cout << "seed " << seed_result.seed << ": FAILED (" << seed_result.failure
                      << ")\n";
        } else {
            any_ok = true;
            std::cout << "seed " << seed_result.seed << ": final normalized score "
                      << orl::format_double(seed_result.final_score) << "\n";
        }
    }
    if (result.aggregate) {
        std::cout << "mean final score: " << orl::format_double(result.aggregate->mean_final)
                  << " +/- " << orl::format_double(result.aggregate->stddev_final) << "\n";
    }
    std::cout << "report: " << result.report_path.string() << "\n";
    return any_ok ? kExitOk : kExitNumeric;
}

int cmd_profile(const CLI::App* cmd, const TrainFlags& flags, long steps, long warmup,
                std::string out_path) {
    orl::ExperimentConfig config = build_train_config(cmd, flags);
    config.agent.validate();
    const orl::OfflineDataset dataset = obtain_dataset(config);
    const orl::ProfileResult result = orl::profile_training(config, dataset, steps, warmup);

    if (out_path.empty()) {
        const fs::path root = orl::default_output_root();
        fs::create_directories(root);
        out_path = (root / "profile.json").string();
    }
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + out_path + " for writing");
    out << result.to_json().dump(2) << '\n';

    for (const auto& arm : result.arms) {
        std::cout << arm.name << ": " << orl::format_double(arm.per_step_ms) << " ms/step over "
                  << arm.steps << " steps\n";
    }
    std::cout << "td3bc vs td3 per-step difference: "
              << orl::format_double(result.td3bc_over_td3_pct) << "%\n";
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

int cmd_report(const std::vector<std::string>& csv_paths, const std::string& out_dir) {
    std::vector<orl::CsvRunData> runs;
    runs.reserve(csv_paths.size());
    for (const auto& path : csv_paths) runs.push_back(orl::read_run_csv(path));
    const orl::CurveReport report = orl::summarize_runs(runs);

    const fs::path dir = out_dir.empty() ? orl::default_output_root() : fs::path(out_dir);
    fs::create_directories(dir);
    orl::write_curve_csv(report, dir / "curve.csv");
    orl::write_stability_csv(report, dir / "stability.csv");
    std::cout << "wrote " << (dir / "curve.csv").string() << " and "
              << (dir / "stability.csv").string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"offline RL laboratory: TD3+BC on scripted toy-control datasets"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a dataset from a scripted policy");
    std::string gen_env = "lqr1d", gen_tier = "expert", gen_out;
    long gen_size = 100000;
    std::uint64_t gen_seed = 1;
    gen->add_option("--env", gen_env, "environment name")->required();
    gen->add_option("--tier", gen_tier, "random|medium|medium_replay|medium_expert|expert");
    gen->add_option("--size", gen_size, "number of transitions");
    gen->add_option("--seed", gen_seed, "generation seed");
    gen->add_option("--out", gen_out, "output file (default under the output root)");

    // mix-data
    auto* mix = app.add_subcommand("mix-data", "mix two datasets half/half");
    std::string mix_a, mix_b, mix_out;
    std::uint64_t mix_seed = 0;
    mix->add_option("--a", mix_a, "first dataset")->required();
    mix->add_option("--b", mix_b, "second dataset")->required();
    mix->add_option("--seed", mix_seed, "sampling seed");
    mix->add_option("--out", mix_out, "output file")->required();

    TrainFlags flags;
    const auto add_shared_options = [&flags](CLI::App* cmd) {
        cmd->add_option("--config", flags.config_path, "key = value config file");
        cmd->add_option("--env", flags.env, "environment name");
        cmd->add_option("--data", flags.data_path, "dataset file (generated when omitted)");
        cmd->add_option("--tier", flags.tier, "tier for on-the-fly generation");
        cmd->add_option("--size", flags.size, "size for on-the-fly generation");
        cmd->add_option("--data-seed", flags.data_seed, "seed for on-the-fly generation");
        cmd->add_option("--alpha", flags.alpha, "Q-term weight numerator");
        cmd->add_option("--tau", flags.tau, "target update rate");
        cmd->add_option("--discount", flags.discount, "discount factor");
        cmd->add_option("--batch-size", flags.batch_size, "minibatch size");
        cmd->add_option("--hidden", flags.hidden, "hidden layer sizes")->delimiter(',');
        cmd->add_flag("--no-bc", flags.no_bc, "drop the behavior cloning term (plain TD3)");
        cmd->add_flag("--no-q", flags.no_q, "drop the Q term (pure behavior cloning)");
        cmd->add_flag("--no-norm", flags.no_norm, "skip state normalization");
        cmd->add_flag("--paper-parity", flags.paper_parity,
                      "full-scale settings: 1M steps, eval every 5k, hidden 256x256");
    };

    // train
    auto* train = app.add_subcommand("train", "run the multi-seed training protocol");
    add_shared_options(train);
    train->add_option("--steps", flags.steps, "total training steps per seed");
    train->add_option("--eval-every", flags.eval_every, "evaluation period in steps");
    train->add_option("--episodes", flags.episodes, "episodes per evaluation");
    train->add_option("--seeds", flags.seeds, "training seeds")->delimiter(',');
    train->add_option("--out", flags.out_dir, "output directory");
    train->add_option("--jobs", flags.jobs, "seeds to run in parallel");

    // profile
    auto* profile = app.add_subcommand("profile", "time training steps of the ablation arms");
    add_shared_options(profile);
    long profile_steps = 10000, profile_warmup = 500;
    std::string profile_out;
    profile->add_option("--steps", profile_steps, "timed steps per arm");
    profile->add_option("--warmup", profile_warmup, "untimed steps before the clock starts");
    profile->add_option("--out", profile_out, "timing JSON path");

    // report
    auto* report = app.add_subcommand("report", "aggregate run CSVs into curve data");
    std::vector<std::string> report_csvs;
    std::string report_out;
    report->add_option("csvs", report_csvs, "run CSV files")->required();
    report->add_option("--out", report_out, "output directory");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_gen_data(gen_env, gen_tier, gen_size, gen_seed, gen_out);
        if (mix->parsed()) return cmd_mix_data(mix_a, mix_b, mix_seed, mix_out);
        if (train->parsed()) return cmd_train(train, flags);
        if (profile->parsed()) {
            return cmd_profile(profile, flags, profile_steps, profile_warmup, profile_out);
        }
        if (report->parsed()) return cmd_report(report_csvs, report_out);
        return kExitUsage;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << "run with --help for usage\n";
        return kExitUsage;
    } catch (const orl::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}
