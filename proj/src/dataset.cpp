#include "orl/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "orl/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "dataset container assumes a little-endian host");

namespace orl {

using nlohmann::json;

std::string dataset_tier_name(DatasetTier tier) {
    switch (tier) {
        case DatasetTier::kRandom: return "random";
        case DatasetTier::kMedium: return "medium";
        case DatasetTier::kMediumReplay: return "medium_replay";
        case DatasetTier::kMediumExpert: return "medium_expert";
        case DatasetTier::kExpert: return "expert";
        case DatasetTier::kMixed: return "mixed";
    }
    return "?";
}

DatasetTier dataset_tier_from_name(const std::string& name) {
    if (name == "random") return DatasetTier::kRandom;
    if (name == "medium") return DatasetTier::kMedium;
    if (name == "medium_replay") return DatasetTier::kMediumReplay;
    if (name == "medium_expert") return DatasetTier::kMediumExpert;
    if (name == "expert") return DatasetTier::kExpert;
    if (name == "mixed") return DatasetTier::kMixed;
    throw std::invalid_argument("unknown dataset tier: " + name);
}

namespace {

struct Collector {
    const EnvSpec& spec;
    OfflineDataset out;
    long filled = 0;

    explicit Collector(const EnvSpec& s, long size) : spec(s) {
        out.env_name = s.name;
        out.states.resize(size, s.obs_dim);
        out.actions.resize(size, s.act_dim);
        out.rewards.resize(size);
        out.next_states.resize(size, s.obs_dim);
        out.terminals.assign(static_cast<std::size_t>(size), 0);
    }

    bool full() const { return filled >= out.states.rows(); }

    void add(const EnvState& state, const Eigen::VectorXd& action, const StepResult& step) {
        out.states.row(filled) = state.observation.transpose();
        out.actions.row(filled) = action.transpose();
        out.rewards(filled) = step.reward;
        out.next_states.row(filled) = step.next_state.observation.transpose();
        const bool genuine_terminal = step.done && !step.next_state.timeout;
        out.terminals[static_cast<std::size_t>(filled)] = genuine_terminal ? 1 : 0;
        ++filled;
    }
};

Eigen::VectorXd clip_to_box(const EnvSpec& spec, Eigen::VectorXd a) {
    for (int i = 0; i < spec.act_dim; ++i) {
        a(i) = std::min(std::max(a(i), spec.action_low(i)), spec.action_high(i));
    }
    return a;
}

// One episode of the per-tier behavior. `blend` is only used by
// medium_replay: action = (1 - blend) * random + blend * medium.
void collect_episode(Collector& collector, DatasetTier tier, double blend,
                     std::uint64_t episode_seed) {
    const EnvSpec& spec = collector.spec;
    EnvState state = env_reset(spec, episode_seed);
    Rng policy_rng(derive_seed(episode_seed, 0x706f6c69637921ULL));
    for (;;) {
        Eigen::VectorXd action;
        switch (tier) {
            case DatasetTier::kRandom:
                action = scripted_policy(spec, PolicyTier::kRandom, state, policy_rng);
                break;
            case DatasetTier::kMedium:
                action = scripted_policy(spec, PolicyTier::kMedium, state, policy_rng);
                break;
            case DatasetTier::kExpert:
                action = scripted_policy(spec, PolicyTier::kExpert, state, policy_rng);
                break;
            case DatasetTier::kMediumReplay: {
                const Eigen::VectorXd rnd =
                    scripted_policy(spec, PolicyTier::kRandom, state, policy_rng);
                const Eigen::VectorXd med =
                    scripted_policy(spec, PolicyTier::kMedium, state, policy_rng);
                action = clip_to_box(spec, (1.0 - blend) * rnd + blend * med);
                break;
            }
            default:
                throw std::invalid_argument("generate_dataset: tier has no behavior policy");
        }
        StepResult step = env_step(spec, state, action);
        collector.add(state, action, step);
        if (collector.full() || step.done) break;
        state = std::move(step.next_state);
    }
}

void finalize_stats(OfflineDataset& d) { d.stats = compute_normalization(d); }

}  // namespace

OfflineDataset generate_dataset(const EnvSpec& spec, DatasetTier tier, long size,
                                std::uint64_t seed) {
    if (size < 1000) throw std::invalid_argument("generate_dataset: size must be >= 1000");
    if (tier == DatasetTier::kMixed) {
        throw std::invalid_argument("generate_dataset: mixed datasets come from mix_datasets");
    }

    Collector collector(spec, size);
    if (tier == DatasetTier::kMediumExpert) {
        const long medium_half = size / 2;
        Collector medium(spec, medium_half);
        const std::uint64_t medium_seed = derive_seed(seed, 0x6d65ULL);
        for (long ep = 0; !medium.full(); ++ep) {
            collect_episode(medium, DatasetTier::kMedium, 0.0,
                            derive_seed(medium_seed, static_cast<std::uint64_t>(ep)));
        }
        Collector expert(spec, size - medium_half);
        const std::uint64_t expert_seed = derive_seed(seed, 0x6578ULL);
        for (long ep = 0; !expert.full(); ++ep) {
            collect_episode(expert, DatasetTier::kExpert, 0.0,
                            derive_seed(expert_seed, static_cast<std::uint64_t>(ep)));
        }
        collector.out.states << medium.out.states, expert.out.states;
        collector.out.actions << medium.out.actions, expert.out.actions;
        collector.out.rewards << medium.out.rewards, expert.out.rewards;
        collector.out.next_states << medium.out.next_states, expert.out.next_states;
        std::copy(medium.out.terminals.begin(), medium.out.terminals.end(),
                  collector.out.terminals.begin());
        std::copy(expert.out.terminals.begin(), expert.out.terminals.end(),
                  collector.out.terminals.begin() + medium_half);
        collector.filled = size;
    } else if (tier == DatasetTier::kMediumReplay) {
        const long episodes_planned = (size + spec.horizon - 1) / spec.horizon;
        for (long ep = 0; !collector.full(); ++ep) {
            const double blend =
                episodes_planned > 1
                    ? static_cast<double>(std::min(ep, episodes_planned - 1)) /
                          static_cast<double>(episodes_planned - 1)
                    : 1.0;
            collect_episode(collector, tier, blend,
                            derive_seed(seed, static_cast<std::uint64_t>(ep)));
        }
    } else {
        for (long ep = 0; !collector.full(); ++ep) {
            collect_episode(collector, tier, 0.0,
                            derive_seed(seed, static_cast<std::uint64_t>(ep)));
        }
    }

    collector.out.tier = tier;
    collector.out.generator_seed = seed;
    finalize_stats(collector.out);
    return collector.out;
}

namespace {

// First k of a shuffled index range, via partial Fisher-Yates.
std::vector<long> sample_without_replacement(long n, long k, Rng& rng) {
    std::vector<long> indices(static_cast<std::size_t>(n));
    std::iota(indices.begin(), indices.end(), 0L);
    for (long i = 0; i < k; ++i) {
        const long j = i + static_cast<long>(rng.uniform_below(static_cast<std::uint64_t>(n - i)));
        std::swap(indices[static_cast<std::size_t>(i)], indices[static_cast<std::size_t>(j)]);
    }
    indices.resize(static_cast<std::size_t>(k));
    return indices;
}

}  // namespace

OfflineDataset mix_datasets(const OfflineDataset& a, const OfflineDataset& b,
                            std::uint64_t seed) {
    if (a.env_name != b.env_name || a.obs_dim() != b.obs_dim() || a.act_dim() != b.act_dim()) {
        throw std::invalid_argument("mix_datasets: datasets describe different environments");
    }
    const long from_a = a.size() / 2;
    const long from_b = b.size() / 2;

    Rng rng_a(derive_seed(seed, 0xa));
    Rng rng_b(derive_seed(seed, 0xb));
    const std::vector<long> idx_a = sample_without_replacement(a.size(), from_a, rng_a);
    const std::vector<long> idx_b = sample_without_replacement(b.size(), from_b, rng_b);

    OfflineDataset out;
    out.env_name = a.env_name;
    out.tier = DatasetTier::kMixed;
    out.generator_seed = seed;
    out.states.resize(from_a + from_b, a.obs_dim());
    out.actions.resize(from_a + from_b, a.act_dim());
    out.rewards.resize(from_a + from_b);
    out.next_states.resize(from_a + from_b, a.obs_dim());
    out.terminals.assign(static_cast<std::size_t>(from_a + from_b), 0);

    long row = 0;
    for (const auto& [source, picks] : {std::pair{&a, &idx_a}, std::pair{&b, &idx_b}}) {
        for (long i : *picks) {
            out.states.row(row) = source->states.row(i);
            out.actions.row(row) = source->actions.row(i);
            out.rewards(row) = source->rewards(i);
            out.next_states.row(row) = source->next_states.row(i);
            out.terminals[static_cast<std::size_t>(row)] =
                source->terminals[static_cast<std::size_t>(i)];
            ++row;
        }
    }

    const double epsilon = a.stats ? a.stats->epsilon : 1e-3;
    out.stats = compute_normalization(out, epsilon);
    return out;
}

NormalizationStats compute_normalization(const OfflineDataset& d, double epsilon) {
    if (d.size() == 0) throw std::invalid_argument("compute_normalization: empty dataset");
    if (epsilon <= 0.0) throw std::invalid_argument("compute_normalization: epsilon must be > 0");
    NormalizationStats stats;
    stats.epsilon = epsilon;
    stats.mu = d.states.colwise().mean();
    const Eigen::MatrixXd centered = d.states.rowwise() - stats.mu.transpose();
    stats.sigma = (centered.array().square().colwise().mean()).sqrt();
    return stats;
}

Eigen::VectorXd apply_normalization(const Eigen::VectorXd& x, const NormalizationStats& stats) {
    if (x.size() != stats.mu.size()) {
        throw ShapeError("apply_normalization: dimension mismatch");
    }
    return (x - stats.mu).array() / (stats.sigma.array() + stats.epsilon);
}

void apply_normalization(OfflineDataset& d, const NormalizationStats& stats) {
    if (d.obs_dim() != stats.mu.size()) {
        throw ShapeError("apply_normalization: dimension mismatch");
    }
    const Eigen::RowVectorXd mu = stats.mu.transpose();
    const Eigen::RowVectorXd denom = (stats.sigma.array() + stats.epsilon).transpose();
    d.states = (d.states.rowwise() - mu).array().rowwise() / denom.array();
    d.next_states = (d.next_states.rowwise() - mu).array().rowwise() / denom.array();
    d.stats = stats;
}

TransitionBatch sample_minibatch(const OfflineDataset& d, int batch_size, Rng& rng) {
    if (batch_size < 1 || batch_size > d.size()) {
        throw std::invalid_argument("sample_minibatch: batch size must be in [1, dataset size]");
    }
    TransitionBatch batch;
    batch.states.resize(batch_size, d.obs_dim());
    batch.actions.resize(batch_size, d.act_dim());
    batch.rewards.resize(batch_size);
    batch.next_states.resize(batch_size, d.obs_dim());
    batch.terminals.resize(batch_size);
    for (int i = 0; i < batch_size; ++i) {
        const long idx = static_cast<long>(rng.uniform_below(static_cast<std::uint64_t>(d.size())));
        batch.states.row(i) = d.states.row(idx);
        batch.actions.row(i) = d.actions.row(idx);
        batch.rewards(i) = d.rewards(idx);
        batch.next_states.row(i) = d.next_states.row(idx);
        batch.terminals(i) = d.terminals[static_cast<std::size_t>(idx)] ? 1.0 : 0.0;
    }
    return batch;
}

Transition get_transition(const OfflineDataset& d, long index) {
    if (index < 0 || index >= d.size()) {
        throw std::invalid_argument("get_transition: index out of range");
    }
    Transition t;
    t.state = d.states.row(index).transpose();
    t.action = d.actions.row(index).transpose();
    t.reward = d.rewards(index);
    t.next_state = d.next_states.row(index).transpose();
    t.terminal = d.terminals[static_cast<std::size_t>(index)] != 0;
    return t;
}

std::vector<double> embedded_episode_returns(const OfflineDataset& d) {
    if (d.tier == DatasetTier::kMixed) return {};
    const long horizon = env_spec(d.env_name).horizon;

    // medium_expert holds two independently collected halves.
    std::vector<std::pair<long, long>> segments;
    if (d.tier == DatasetTier::kMediumExpert) {
        segments = {{0, d.size() / 2}, {d.size() / 2, d.size()}};
    } else {
        segments = {{0, d.size()}};
    }

    std::vector<double> returns;
    for (const auto& [begin, end] : segments) {
        for (long start = begin; start + horizon <= end; start += horizon) {
            double total = 0.0;
            for (long i = start; i < start + horizon; ++i) total += d.rewards(i);
            returns.push_back(total);
        }
    }
    return returns;
}

// ----------------------------------------------------------- container ----

namespace {

constexpr char kMagic[4] = {'O', 'R', 'L', 'D'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_pod(std::istream& in, T& value) {
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    return in.gcount() == static_cast<std::streamsize>(sizeof(T));
}

}  // namespace

void save_dataset(const OfflineDataset& d, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_dataset: cannot open " + path.string());

    json header;
    header["env_name"] = d.env_name;
    header["tier"] = dataset_tier_name(d.tier);
    header["size"] = d.size();
    header["obs_dim"] = d.obs_dim();
    header["act_dim"] = d.act_dim();
    header["generator_seed"] = d.generator_seed;
    header["epsilon"] = d.stats ? d.stats->epsilon : 0.0;
    header["mu"] = json::array();
    header["sigma"] = json::array();
    if (d.stats) {
        for (long i = 0; i < d.stats->mu.size(); ++i) {
            header["mu"].push_back(d.stats->mu(i));
            header["sigma"].push_back(d.stats->sigma(i));
        }
    }
    const std::string header_text = header.dump();

    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint64_t>(header_text.size()));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));

    std::vector<double> row(static_cast<std::size_t>(2 * d.obs_dim() + d.act_dim() + 1));
    for (long i = 0; i < d.size(); ++i) {
        std::size_t pos = 0;
        for (int c = 0; c < d.obs_dim(); ++c) row[pos++] = d.states(i, c);
        for (int c = 0; c < d.act_dim(); ++c) row[pos++] = d.actions(i, c);
        row[pos++] = d.rewards(i);
        for (int c = 0; c < d.obs_dim(); ++c) row[pos++] = d.next_states(i, c);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(double)));
        const char terminal = d.terminals[static_cast<std::size_t>(i)] ? 1 : 0;
        out.write(&terminal, 1);
    }
    if (!out) throw std::runtime_error("save_dataset: write failed for " + path.string());
}

OfflineDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path.string());

    char magic[4];
    in.read(magic, sizeof(magic));
    if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw VersionError("load_dataset: bad magic bytes");
    }
    std::uint32_t version = 0;
    if (!read_pod(in, version)) throw FormatError("load_dataset: truncated version field");
    if (version != kVersion) {
        throw VersionError("load_dataset: unsupported container version " +
                           std::to_string(version));
    }
    std::uint64_t header_len = 0;
    if (!read_pod(in, header_len)) throw FormatError("load_dataset: truncated header length");
    if (header_len == 0 || header_len > (1ULL << 26)) {
        throw FormatError("load_dataset: implausible header length");
    }
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (in.gcount() != static_cast<std::streamsize>(header_len)) {
        throw FormatError("load_dataset: truncated JSON header");
    }

    json header;
    try {
        header = json::parse(header_text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("load_dataset: malformed JSON header: ") + e.what());
    }

    OfflineDataset d;
    long size = 0;
    int obs_dim = 0, act_dim = 0;
    try {
        d.env_name = header.at("env_name").get<std::string>();
        d.tier = dataset_tier_from_name(header.at("tier").get<std::string>());
        size = header.at("size").get<long>();
        obs_dim = header.at("obs_dim").get<int>();
        act_dim = header.at("act_dim").get<int>();
        d.generator_seed = header.at("generator_seed").get<std::uint64_t>();
        const auto& mu = header.at("mu");
        const auto& sigma = header.at("sigma");
        if (mu.size() != sigma.size()) throw FormatError("load_dataset: mu/sigma length mismatch");
        if (!mu.empty()) {
            NormalizationStats stats;
            stats.epsilon = header.at("epsilon").get<double>();
            stats.mu.resize(static_cast<long>(mu.size()));
            stats.sigma.resize(static_cast<long>(sigma.size()));
            for (std::size_t i = 0; i < mu.size(); ++i) {
                stats.mu(static_cast<long>(i)) = mu[i].get<double>();
                stats.sigma(static_cast<long>(i)) = sigma[i].get<double>();
            }
            d.stats = std::move(stats);
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("load_dataset: JSON header missing fields: ") + e.what());
    }
    if (size <= 0 || obs_dim <= 0 || act_dim <= 0) {
        throw FormatError("load_dataset: non-positive dimensions in header");
    }

    d.states.resize(size, obs_dim);
    d.actions.resize(size, act_dim);
    d.rewards.resize(size);
    d.next_states.resize(size, obs_dim);
    d.terminals.assign(static_cast<std::size_t>(size), 0);

    std::vector<double> row(static_cast<std::size_t>(2 * obs_dim + act_dim + 1));
    for (long i = 0; i < size; ++i) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(double)));
        if (in.gcount() != static_cast<std::streamsize>(row.size() * sizeof(double))) {
            throw FormatError("load_dataset: truncated transition records");
        }
        std::size_t pos = 0;
        for (int c = 0; c < obs_dim; ++c) d.states(i, c) = row[pos++];
        for (int c = 0; c < act_dim; ++c) d.actions(i, c) = row[pos++];
        d.rewards(i) = row[pos++];
        for (int c = 0; c < obs_dim; ++c) d.next_states(i, c) = row[pos++];
        char terminal = 0;
        in.read(&terminal, 1);
        if (in.gcount() != 1) throw FormatError("load_dataset: truncated terminal flag");
        if (terminal != 0 && terminal != 1) {
            throw FormatError("load_dataset: corrupt terminal flag");
        }
        d.terminals[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(terminal);
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError("load_dataset: unexpected trailing bytes");
    }
    return d;
}

}  // namespace orl
