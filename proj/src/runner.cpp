#include "orl/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "orl/errors.hpp"

namespace orl {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::string format_double(double value) {
    char buf[32];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

std::uint64_t fnv1a_hash(const std::string& text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

void ExperimentConfig::validate() const {
    agent.validate();
    if (total_steps < 1) throw std::invalid_argument("config: total_steps must be >= 1");
    if (eval_every < 1 || total_steps % eval_every != 0) {
        throw std::invalid_argument("config: eval_every must divide total_steps");
    }
    if (episodes_per_eval < 1) {
        throw std::invalid_argument("config: episodes_per_eval must be >= 1");
    }
    if (seeds.empty()) throw std::invalid_argument("config: need at least one seed");
    std::vector<std::uint64_t> sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument("config: seeds must be distinct");
    }
    if (jobs < 1) throw std::invalid_argument("config: jobs must be >= 1");
    env_spec(env_name);  // throws for unknown names
}

json ExperimentConfig::to_json() const {
    json j;
    j["env"] = env_name;
    j["dataset"] = dataset_path;
    j["tier"] = dataset_tier_name(tier);
    j["size"] = dataset_size;
    j["data_seed"] = dataset_seed;
    j["total_steps"] = total_steps;
    j["eval_every"] = eval_every;
    j["episodes_per_eval"] = episodes_per_eval;
    j["alpha"] = agent.alpha;
    j["discount"] = agent.discount;
    j["tau"] = agent.tau;
    j["policy_noise"] = agent.policy_noise;
    j["noise_clip"] = agent.noise_clip;
    j["policy_freq"] = agent.policy_freq;
    j["batch_size"] = agent.batch_size;
    j["actor_lr"] = agent.actor_lr;
    j["critic_lr"] = agent.critic_lr;
    j["hidden"] = agent.hidden_sizes;
    j["use_bc_term"] = agent.use_bc_term;
    j["use_q_term"] = agent.use_q_term;
    j["use_state_norm"] = agent.use_state_norm;
    j["lambda_floor"] = agent.lambda_floor;
    return j;
}

void ExperimentConfig::apply_paper_parity() {
    total_steps = 1000000;
    eval_every = 5000;
    agent.hidden_sizes = {256, 256};
}

// ------------------------------------------------------------ config file --

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\''))) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

std::vector<std::uint64_t> parse_uint_list(const std::string& value, int line_no) {
    if (value.size() < 2 || value.front() != '[' || value.back() != ']') {
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": expected [a, b, ...]");
    }
    std::vector<std::uint64_t> out;
    std::stringstream ss(value.substr(1, value.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(std::stoull(item));
    }
    return out;
}

double parse_double(const std::string& value, int line_no) {
    try {
        return std::stod(value);
    } catch (const std::exception&) {
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": expected a number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& value, int line_no) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw std::invalid_argument("config line " + std::to_string(line_no) +
                                ": expected true/false, got '" + value + "'");
}

}  // namespace

ExperimentConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());

    ExperimentConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "env") config.env_name = unquote(value);
        else if (key == "dataset") config.dataset_path = unquote(value);
        else if (key == "tier") config.tier = dataset_tier_from_name(unquote(value));
        else if (key == "size") config.dataset_size = static_cast<long>(parse_double(value, line_no));
        else if (key == "data_seed") config.dataset_seed = std::stoull(value);
        else if (key == "total_steps") config.total_steps = static_cast<long>(parse_double(value, line_no));
        else if (key == "eval_every") config.eval_every = static_cast<long>(parse_double(value, line_no));
        else if (key == "episodes_per_eval") config.episodes_per_eval = static_cast<int>(parse_double(value, line_no));
        else if (key == "seeds") config.seeds = parse_uint_list(value, line_no);
        else if (key == "output_dir") config.output_dir = unquote(value);
        else if (key == "jobs") config.jobs = static_cast<int>(parse_double(value, line_no));
        else if (key == "alpha") config.agent.alpha = parse_double(value, line_no);
        else if (key == "discount") config.agent.discount = parse_double(value, line_no);
        else if (key == "tau") config.agent.tau = parse_double(value, line_no);
        else if (key == "policy_noise") config.agent.policy_noise = parse_double(value, line_no);
        else if (key == "noise_clip") config.agent.noise_clip = parse_double(value, line_no);
        else if (key == "policy_freq") config.agent.policy_freq = static_cast<int>(parse_double(value, line_no));
        else if (key == "batch_size") config.agent.batch_size = static_cast<int>(parse_double(value, line_no));
        else if (key == "actor_lr") config.agent.actor_lr = parse_double(value, line_no);
        else if (key == "critic_lr") config.agent.critic_lr = parse_double(value, line_no);
        else if (key == "hidden") {
            config.agent.hidden_sizes.clear();
            for (std::uint64_t h : parse_uint_list(value, line_no)) {
                config.agent.hidden_sizes.push_back(static_cast<int>(h));
            }
        }
        else if (key == "use_bc_term") config.agent.use_bc_term = parse_bool(value, line_no);
        else if (key == "use_q_term") config.agent.use_q_term = parse_bool(value, line_no);
        else if (key == "use_state_norm") config.agent.use_state_norm = parse_bool(value, line_no);
        else if (key == "lambda_floor") config.agent.lambda_floor = parse_double(value, line_no);
        else {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": unknown key '" + key + "'");
        }
    }
    return config;
}

// -------------------------------------------------------------- training --

TrainingOutcome run_training(const ExperimentConfig& config, const OfflineDataset& raw,
                             std::uint64_t seed) {
    const EnvSpec& spec = env_spec(config.env_name);

    TrainingOutcome outcome;
    OfflineDataset data = raw;
    if (config.agent.use_state_norm) {
        const NormalizationStats stats =
            raw.stats ? *raw.stats : compute_normalization(raw);
        apply_normalization(data, stats);
        outcome.stats = stats;
    }

    RunLog& log = outcome.log;
    log.env_name = spec.name;
    log.random_ref = spec.random_ref;
    log.expert_ref = spec.expert_ref;
    log.config_snapshot = config.to_json();
    log.config_snapshot["seed"] = seed;

    TrainState state = agent_init(spec, config.agent, seed);
    Rng rng(derive_seed(seed, 0x747261696e657221ULL));

    const auto train_start = Clock::now();
    double eval_seconds = 0.0;
    long eval_index = 0;
    try {
        for (long step = 1; step <= config.total_steps; ++step) {
            const LossReport report = train_step(state, data, config.agent, rng);
            outcome.max_mean_abs_q = std::max(outcome.max_mean_abs_q, report.mean_abs_q);
            outcome.final_mean_abs_q = report.mean_abs_q;
            if (step % config.eval_every == 0) {
                const auto eval_start = Clock::now();
                const std::uint64_t base_seed =
                    seed * 1000000ULL + static_cast<std::uint64_t>(eval_index);
                log.records.push_back(evaluate_policy(
                    state, outcome.stats ? &*outcome.stats : nullptr, spec,
                    config.episodes_per_eval, base_seed, step));
                ++eval_index;
                eval_seconds += seconds_since(eval_start);
            }
        }
    } catch (const NumericError& e) {
        outcome.failed = true;
        outcome.failure = e.what();
    }
    log.eval_seconds = eval_seconds;
    log.train_seconds = seconds_since(train_start) - eval_seconds;
    outcome.final_state = std::move(state);
    return outcome;
}

// -------------------------------------------------------------- CSV logs --

void write_run_csv(const RunLog& log, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");

    const std::size_t episodes =
        log.records.empty() ? 0 : log.records.front().episode_returns.size();
    out << "step";
    for (std::size_t i = 0; i < episodes; ++i) out << ",ep_return_" << i;
    out << ",mean_return,normalized_mean\n";

    for (const auto& record : log.records) {
        out << record.train_step;
        double sum = 0.0;
        for (double ret : record.episode_returns) {
            out << ',' << format_double(ret);
            sum += ret;
        }
        const double mean = sum / static_cast<double>(record.episode_returns.size());
        out << ',' << format_double(mean) << ','
            << format_double(normalized_score(mean, log.random_ref, log.expert_ref)) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

CsvRunData read_run_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());

    CsvRunData data;
    std::string line;
    if (!std::getline(in, line)) throw FormatError("run CSV is empty: " + path.string());

    int return_columns = 0;
    {
        std::stringstream header(line);
        std::string field;
        while (std::getline(header, field, ',')) {
            if (field.rfind("ep_return_", 0) == 0) ++return_columns;
        }
        if (return_columns == 0) throw FormatError("run CSV header lacks return columns");
    }

    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::stringstream row(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (static_cast<int>(fields.size()) != return_columns + 3) {
            throw FormatError("run CSV row has wrong field count: " + path.string());
        }
        data.steps.push_back(std::stol(fields[0]));
        std::vector<double> returns;
        for (int i = 0; i < return_columns; ++i) {
            double v = 0.0;
            const auto& text = fields[static_cast<std::size_t>(i) + 1];
            const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
            if (res.ec != std::errc{}) throw FormatError("run CSV has a malformed number");
            returns.push_back(v);
        }
        data.episode_returns.push_back(std::move(returns));
        data.mean_return.push_back(std::stod(fields[fields.size() - 2]));
        data.normalized_mean.push_back(std::stod(fields[fields.size() - 1]));
    }
    return data;
}

// ------------------------------------------------------------ checkpoints --

namespace {

constexpr char kCheckpointMagic[4] = {'O', 'R', 'L', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

void write_doubles(std::ostream& out, const double* data, long count) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count) * static_cast<std::streamsize>(sizeof(double)));
}

void read_doubles(std::istream& in, double* data, long count) {
    const std::streamsize bytes =
        static_cast<std::streamsize>(count) * static_cast<std::streamsize>(sizeof(double));
    in.read(reinterpret_cast<char*>(data), bytes);
    if (in.gcount() != bytes) throw FormatError("checkpoint: truncated parameter block");
}

void write_net(std::ostream& out, const Mlp& net) {
    for (int k = 0; k < net.num_layers(); ++k) {
        write_doubles(out, net.weights[k].data(), net.weights[k].size());
        write_doubles(out, net.biases[k].data(), net.biases[k].size());
    }
}

void read_net(std::istream& in, Mlp& net) {
    for (int k = 0; k < net.num_layers(); ++k) {
        read_doubles(in, net.weights[k].data(), net.weights[k].size());
        read_doubles(in, net.biases[k].data(), net.biases[k].size());
    }
}

void write_adam(std::ostream& out, const AdamState& opt) {
    for (std::size_t k = 0; k < opt.weight_m.size(); ++k) {
        write_doubles(out, opt.weight_m[k].data(), opt.weight_m[k].size());
        write_doubles(out, opt.weight_v[k].data(), opt.weight_v[k].size());
        write_doubles(out, opt.bias_m[k].data(), opt.bias_m[k].size());
        write_doubles(out, opt.bias_v[k].data(), opt.bias_v[k].size());
    }
}

void read_adam(std::istream& in, AdamState& opt) {
    for (std::size_t k = 0; k < opt.weight_m.size(); ++k) {
        read_doubles(in, opt.weight_m[k].data(), opt.weight_m[k].size());
        read_doubles(in, opt.weight_v[k].data(), opt.weight_v[k].size());
        read_doubles(in, opt.bias_m[k].data(), opt.bias_m[k].size());
        read_doubles(in, opt.bias_v[k].data(), opt.bias_v[k].size());
    }
}

json adam_header(const AdamState& opt) {
    return json{{"step_count", opt.step_count},
                {"learning_rate", opt.config.learning_rate},
                {"beta1", opt.config.beta1},
                {"beta2", opt.config.beta2},
                {"epsilon", opt.config.epsilon}};
}

AdamConfig adam_config_from_header(const json& j) {
    AdamConfig cfg;
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.beta1 = j.at("beta1").get<double>();
    cfg.beta2 = j.at("beta2").get<double>();
    cfg.epsilon = j.at("epsilon").get<double>();
    return cfg;
}

}  // namespace

void save_checkpoint(const TrainState& state, std::uint64_t config_hash,
                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");

    json header;
    header["config_hash"] = config_hash;
    header["step_count"] = state.step_count;
    header["actor_layers"] = state.actor.layer_sizes;
    header["critic_layers"] = state.critic1.layer_sizes;
    header["action_low"] = std::vector<double>(state.action_low.data(),
                                               state.action_low.data() + state.action_low.size());
    header["action_high"] = std::vector<double>(
        state.action_high.data(), state.action_high.data() + state.action_high.size());
    header["actor_opt"] = adam_header(state.actor_opt);
    header["critic1_opt"] = adam_header(state.critic1_opt);
    header["critic2_opt"] = adam_header(state.critic2_opt);
    const std::string header_text = header.dump();

    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    out.write(reinterpret_cast<const char*>(&kCheckpointVersion), sizeof(kCheckpointVersion));
    const std::uint64_t header_len = header_text.size();
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));

    for (const Mlp* net : {&state.actor, &state.critic1, &state.critic2, &state.actor_target,
                           &state.critic1_target, &state.critic2_target}) {
        write_net(out, *net);
    }
    for (const AdamState* opt : {&state.actor_opt, &state.critic1_opt, &state.critic2_opt}) {
        write_adam(out, *opt);
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());

    char magic[4];
    in.read(magic, sizeof(magic));
    if (in.gcount() != sizeof(magic) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
        throw VersionError("checkpoint: bad magic bytes");
    }
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (in.gcount() != sizeof(version)) throw FormatError("checkpoint: truncated version");
    if (version != kCheckpointVersion) {
        throw VersionError("checkpoint: unsupported version " + std::to_string(version));
    }
    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    if (in.gcount() != sizeof(header_len) || header_len == 0 || header_len > (1ULL << 26)) {
        throw FormatError("checkpoint: implausible header length");
    }
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (in.gcount() != static_cast<std::streamsize>(header_len)) {
        throw FormatError("checkpoint: truncated JSON header");
    }

    json header;
    try {
        header = json::parse(header_text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint: malformed JSON header: ") + e.what());
    }

    Checkpoint ckpt;
    try {
        ckpt.config_hash = header.at("config_hash").get<std::uint64_t>();
        const auto actor_layers = header.at("actor_layers").get<std::vector<int>>();
        const auto critic_layers = header.at("critic_layers").get<std::vector<int>>();
        ckpt.state.step_count = header.at("step_count").get<long>();

        ckpt.state.actor = mlp_init(actor_layers, OutputActivation::kTanh, 0);
        ckpt.state.critic1 = mlp_init(critic_layers, OutputActivation::kIdentity, 0);
        ckpt.state.critic2 = mlp_init(critic_layers, OutputActivation::kIdentity, 0);

        const auto low = header.at("action_low").get<std::vector<double>>();
        const auto high = header.at("action_high").get<std::vector<double>>();
        ckpt.state.action_low = Eigen::Map<const Eigen::VectorXd>(low.data(),
                                                                  static_cast<long>(low.size()));
        ckpt.state.action_high =
            Eigen::Map<const Eigen::VectorXd>(high.data(), static_cast<long>(high.size()));

        ckpt.state.actor_opt =
            adam_init(ckpt.state.actor, adam_config_from_header(header.at("actor_opt")));
        ckpt.state.actor_opt.step_count = header.at("actor_opt").at("step_count").get<long>();
        ckpt.state.critic1_opt =
            adam_init(ckpt.state.critic1, adam_config_from_header(header.at("critic1_opt")));
        ckpt.state.critic1_opt.step_count = header.at("critic1_opt").at("step_count").get<long>();
        ckpt.state.critic2_opt =
            adam_init(ckpt.state.critic2, adam_config_from_header(header.at("critic2_opt")));
        ckpt.state.critic2_opt.step_count = header.at("critic2_opt").at("step_count").get<long>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint: JSON header missing fields: ") + e.what());
    }

    ckpt.state.actor_target = ckpt.state.actor;
    ckpt.state.critic1_target = ckpt.state.critic1;
    ckpt.state.critic2_target = ckpt.state.critic2;
    for (Mlp* net : {&ckpt.state.actor, &ckpt.state.critic1, &ckpt.state.critic2,
                     &ckpt.state.actor_target, &ckpt.state.critic1_target,
                     &ckpt.state.critic2_target}) {
        read_net(in, *net);
    }
    for (AdamState* opt :
         {&ckpt.state.actor_opt, &ckpt.state.critic1_opt, &ckpt.state.critic2_opt}) {
        read_adam(in, *opt);
    }
    return ckpt;
}

// ------------------------------------------------------------- experiment --

namespace {

json machine_descriptor() {
    json j;
    j["hardware_threads"] = std::thread::hardware_concurrency();
    std::ifstream cpuinfo("/proc/cpuinfo");
    std::string line;
    while (std::getline(cpuinfo, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) j["cpu"] = trim(line.substr(colon + 1));
            break;
        }
    }
    return j;
}

}  // namespace

ExperimentResult train_experiment(const ExperimentConfig& config, const OfflineDataset& dataset) {
    config.validate();
    const std::filesystem::path out_dir =
        config.output_dir.empty() ? default_output_root() : config.output_dir;
    std::filesystem::create_directories(out_dir);

    ExperimentResult result;
    result.seed_results.resize(config.seeds.size());

    const auto run_one = [&](std::size_t index) {
        const std::uint64_t seed = config.seeds[index];
        SeedRunResult& seed_result = result.seed_results[index];
        seed_result.seed = seed;
        try {
            TrainingOutcome outcome = run_training(config, dataset, seed);
            seed_result.failed = outcome.failed;
            seed_result.failure = outcome.failure;
            seed_result.log = std::move(outcome.log);
            seed_result.max_mean_abs_q = outcome.max_mean_abs_q;
            seed_result.final_mean_abs_q = outcome.final_mean_abs_q;

            const std::string tag = "seed" + std::to_string(seed);
            write_run_csv(seed_result.log, out_dir / ("run_" + tag + ".csv"));
            const std::uint64_t hash = fnv1a_hash(seed_result.log.config_snapshot.dump());
            save_checkpoint(outcome.final_state, hash, out_dir / ("checkpoint_" + tag + ".orlc"));

            json timing;
            timing["seed"] = seed;
            timing["train_seconds"] = seed_result.log.train_seconds;
            timing["eval_seconds"] = seed_result.log.eval_seconds;
            timing["machine"] = machine_descriptor();
            std::ofstream timing_out(out_dir / ("timing_" + tag + ".json"), std::ios::trunc);
            timing_out << timing.dump(2) << '\n';

            if (!seed_result.failed) {
                seed_result.final_score = final_performance(seed_result.log);
            }
        } catch (const std::exception& e) {
            seed_result.failed = true;
            seed_result.failure = e.what();
        }
    };

    if (config.jobs <= 1) {
        for (std::size_t i = 0; i < config.seeds.size(); ++i) run_one(i);
    } else {
        std::size_t next = 0;
        while (next < config.seeds.size()) {
            std::vector<std::thread> pool;
            const std::size_t batch = std::min<std::size_t>(
                static_cast<std::size_t>(config.jobs), config.seeds.size() - next);
            for (std::size_t k = 0; k < batch; ++k) {
                pool.emplace_back(run_one, next + k);
            }
            for (auto& t : pool) t.join();
            next += batch;
        }
    }

    std::vector<RunLog> successful;
    for (const auto& seed_result : result.seed_results) {
        if (!seed_result.failed) successful.push_back(seed_result.log);
    }

    json report;
    report["env"] = config.env_name;
    report["config"] = config.to_json();
    json per_seed = json::array();
    for (const auto& seed_result : result.seed_results) {
        json s;
        s["seed"] = seed_result.seed;
        s["failed"] = seed_result.failed;
        if (seed_result.failed) {
            s["failure"] = seed_result.failure;
        } else {
            s["final_performance"] = seed_result.final_score;
        }
        s["max_mean_abs_q"] = seed_result.max_mean_abs_q;
        s["final_mean_abs_q"] = seed_result.final_mean_abs_q;
        per_seed.push_back(std::move(s));
    }
    report["per_seed"] = std::move(per_seed);
    if (!successful.empty()) {
        result.aggregate = aggregate_over_seeds(successful);
        report["aggregate"] = result.aggregate->to_json();
    }
    result.report_path = out_dir / "report.json";
    std::ofstream report_out(result.report_path, std::ios::trunc);
    report_out << report.dump(2) << '\n';

    return result;
}

// --------------------------------------------------------------- profile --

json ProfileResult::to_json() const {
    json j;
    j["machine"] = machine_descriptor();
    json arm_array = json::array();
    for (const auto& arm : arms) {
        arm_array.push_back({{"name", arm.name},
                             {"steps", arm.steps},
                             {"seconds", arm.seconds},
                             {"per_step_ms", arm.per_step_ms}});
    }
    j["arms"] = std::move(arm_array);
    j["td3bc_over_td3_pct"] = td3bc_over_td3_pct;
    return j;
}

ProfileResult profile_training(const ExperimentConfig& config, const OfflineDataset& dataset,
                               long steps, long warmup) {
    if (steps < 1) throw std::invalid_argument("profile: steps must be >= 1");

    OfflineDataset data = dataset;
    if (config.agent.use_state_norm) {
        apply_normalization(data, data.stats ? *data.stats : compute_normalization(data));
    }
    const EnvSpec& spec = env_spec(config.env_name);

    struct Arm {
        std::string name;
        bool use_bc;
        bool use_q;
    };
    const std::vector<Arm> arm_specs = {
        {"td3bc", true, true}, {"td3", false, true}, {"bc", true, false}};

    ProfileResult result;
    for (const auto& arm : arm_specs) {
        Td3bcConfig agent_config = config.agent;
        agent_config.use_bc_term = arm.use_bc;
        agent_config.use_q_term = arm.use_q;
        TrainState state = agent_init(spec, agent_config, 0);
        Rng rng(derive_seed(0, 0x70726f66ULL));
        for (long i = 0; i < warmup; ++i) train_step(state, data, agent_config, rng);
        const auto start = Clock::now();
        for (long i = 0; i < steps; ++i) train_step(state, data, agent_config, rng);
        const double seconds = seconds_since(start);
        result.arms.push_back({arm.name, steps, seconds, 1000.0 * seconds / steps});
    }
    result.td3bc_over_td3_pct =
        percent_difference(result.arms[0].per_step_ms, result.arms[1].per_step_ms);
    return result;
}

// ----------------------------------------------------------------- report --

CurveReport summarize_runs(const std::vector<CsvRunData>& runs) {
    if (runs.empty()) throw std::invalid_argument("summarize_runs: no runs");
    const auto& grid = runs.front().steps;
    for (const auto& run : runs) {
        if (run.steps != grid) {
            throw std::invalid_argument("summarize_runs: evaluation grids do not match");
        }
    }

    CurveReport report;
    report.steps = grid;
    for (std::size_t row = 0; row < grid.size(); ++row) {
        double sum = 0.0;
        for (const auto& run : runs) sum += run.normalized_mean[row];
        const double mean = sum / static_cast<double>(runs.size());
        double var = 0.0;
        for (const auto& run : runs) {
            var += (run.normalized_mean[row] - mean) * (run.normalized_mean[row] - mean);
        }
        report.mean_normalized.push_back(mean);
        report.stddev_normalized.push_back(std::sqrt(var / static_cast<double>(runs.size())));
    }

    for (const auto& run : runs) {
        EvaluationRecord last;
        last.episode_returns = run.episode_returns.back();
        report.per_run_worst_episode_pct.push_back(worst_episode_deviation(last));

        RunLog pseudo;
        pseudo.random_ref = 0.0;
        pseudo.expert_ref = 1.0;
        for (std::size_t row = 0; row < run.steps.size(); ++row) {
            EvaluationRecord record;
            record.train_step = run.steps[row];
            record.episode_returns = run.episode_returns[row];
            pseudo.records.push_back(std::move(record));
        }
        report.per_run_worst_evaluation_pct.push_back(worst_evaluation_deviation(pseudo));
    }
    return report;
}

void write_curve_csv(const CurveReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "step,mean_normalized,stddev_normalized\n";
    for (std::size_t i = 0; i < report.steps.size(); ++i) {
        out << report.steps[i] << ',' << format_double(report.mean_normalized[i]) << ','
            << format_double(report.stddev_normalized[i]) << '\n';
    }
}

void write_stability_csv(const CurveReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "run,worst_episode_pct,worst_evaluation_pct\n";
    for (std::size_t i = 0; i < report.per_run_worst_episode_pct.size(); ++i) {
        out << i << ',' << format_double(report.per_run_worst_episode_pct[i]) << ','
            << format_double(report.per_run_worst_evaluation_pct[i]) << '\n';
    }
}

std::filesystem::path default_output_root() {
    if (const char* env = std::getenv("ORL_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return "orl_out";
}

}  // namespace orl
