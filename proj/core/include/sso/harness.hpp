#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sso/actor.hpp"
#include "sso/core.hpp"
#include "sso/embedding.hpp"
#include "sso/env.hpp"
#include "sso/generate.hpp"
#include "sso/llm_client.hpp"
#include "sso/skillset.hpp"

namespace sso {

enum class TrainMode { adapt, transfer };
enum class ActorKind { scripted, chat };
enum class GeneratorKind { offline, llm };
enum class ChatBackend { http, offline };
enum class EmbedderKind { test, http };

TrainMode parse_train_mode(const std::string& s);
ActorKind parse_actor_kind(const std::string& s);
GeneratorKind parse_generator_kind(const std::string& s);
ChatBackend parse_chat_backend(const std::string& s);
EmbedderKind parse_embedder_kind(const std::string& s);

inline constexpr std::size_t kAdaptEpisodes = 5;
inline constexpr std::size_t kTransferEpisodes = 30;

struct RunConfig {
    std::string env_family = "minilab";
    /// When set, the environment runs as this subprocess (line-JSON protocol).
    std::vector<std::string> env_command;
    std::vector<std::uint64_t> variant_seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<std::uint64_t> test_seeds{100, 101, 102, 103, 104};
    SSOConfig sso;
    TrainMode mode = TrainMode::adapt;
    ActorKind actor = ActorKind::scripted;
    GeneratorKind generator = GeneratorKind::offline;
    ChatBackend chat_backend = ChatBackend::http;
    EmbedderKind embedder = EmbedderKind::test;
    std::string chat_model = "gpt-4-0613";
    std::string embedding_model = "text-embedding-ada-002";
    HttpEndpoint endpoint;
    std::uint64_t seed = 0;
    /// Adapt: episodes per variant. Transfer: total training episodes.
    std::optional<std::size_t> episodes;
    std::size_t eval_attempts = 10;
    std::filesystem::path out_dir = "sso-out";
    std::filesystem::path skills_path;
    std::filesystem::path cassette_path;
    CassetteMode cassette_mode = CassetteMode::replay;
    std::filesystem::path archive_path;
    std::filesystem::path embedding_cache_path;
    bool transcripts = true;

    std::size_t episode_count() const;
    /// Throws ConfigError.
    void validate() const;
};

/// Applies a JSON config document. SSOConfig fields may appear at the top
/// level or under "sso". Unknown keys are a ConfigError.
void apply_config_json(RunConfig& config, const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

struct IterationStats {
    std::size_t iteration = 0;
    std::size_t skill_set_size = 0;
    std::size_t skills_created = 0;
    std::size_t skills_pruned = 0;
    std::size_t executed_unique_skills = 0;
    double episode_score = 0.0;
    double mean_skill_length = 0.0;

    friend bool operator==(const IterationStats&, const IterationStats&) = default;
};

struct LifecycleRecord {
    SkillId id;
    std::size_t created_iteration = 0;
    /// One entry per credited execution.
    std::vector<std::size_t> executions;
    std::optional<std::size_t> pruned_iteration;

    friend bool operator==(const LifecycleRecord&, const LifecycleRecord&) = default;
};

class Lifecycle {
public:
    void created(SkillId id, std::size_t iteration);
    void executed(SkillId id, std::size_t iteration);
    void pruned(SkillId id, std::size_t iteration);
    const std::map<SkillId, LifecycleRecord>& records() const { return records_; }

private:
    LifecycleRecord& at(SkillId id);
    std::map<SkillId, LifecycleRecord> records_;
};

/// stats.csv and lifecycle.csv in `out_dir` (created if missing).
void emit_stats(std::span<const IterationStats> series, const Lifecycle& lifecycle,
                const std::filesystem::path& out_dir);

struct EpisodeResult {
    Trajectory trajectory;
    double score = 0.0;
    std::vector<std::string> action_templates;
};

/// Rolls out one episode against a frozen skill set. Throws ContractError if
/// the skill set changes while the episode runs.
EpisodeResult run_episode(Environment& env, Actor& actor, const SkillSet& skills, EmbeddingCache& cache,
                          const VariantSpec& variant, std::string trajectory_id);

struct ConstructContext {
    SkillGenerator& generator;
    EmbeddingCache& cache;
    std::span<const std::string> action_templates;
    /// Optional model used for semantic dedup.
    ChatClient* dedup_chat = nullptr;
    std::string dedup_model;
    double dedup_temperature = 0.0;
};

struct ConstructReport {
    std::size_t candidates = 0;
    std::size_t selected = 0;
    std::size_t discarded = 0;
    std::vector<SkillId> created;
};

/// Archives `latest`, extracts pairs against the N previous trajectories,
/// scores and samples them together with every previously sampled pair, and
/// generates skills for selected pairs that are new. All selected pairs are
/// then recorded as sampled.
ConstructReport construct(SkillSet& skills, Trajectory latest, const ConstructContext& ctx,
                          std::size_t iteration);

/// Episode, construct, then refine; one IterationStats per completed
/// iteration. An episode that fails on the environment or transport is
/// discarded and the loop continues.
class Trainer {
public:
    Trainer(SkillSet& skills, Environment& env, Actor& actor, SkillGenerator& generator, EmbeddingCache& cache,
            TranscriptLog* transcript = nullptr, std::filesystem::path transcript_dir = {});

    void set_dedup_chat(ChatClient* chat, std::string model, double temperature);

    /// Returns nullopt when the iteration was aborted.
    std::optional<IterationStats> iterate(const VariantSpec& variant);

    const std::vector<IterationStats>& stats() const { return stats_; }
    const Lifecycle& lifecycle() const { return lifecycle_; }
    const std::vector<double>& scores() const { return scores_; }
    std::size_t aborted() const { return aborted_; }
    std::size_t transport_failures() const { return transport_failures_; }

private:
    SkillSet* skills_;
    Environment* env_;
    Actor* actor_;
    SkillGenerator* generator_;
    EmbeddingCache* cache_;
    TranscriptLog* transcript_;
    std::filesystem::path transcript_dir_;
    ChatClient* dedup_chat_ = nullptr;
    std::string dedup_model_;
    double dedup_temperature_ = 0.0;
    std::vector<IterationStats> stats_;
    std::vector<double> scores_;
    Lifecycle lifecycle_;
    std::size_t aborted_ = 0;
    std::size_t transport_failures_ = 0;
};

/// Runs `iterations` iterations cycling through `variants` in order.
std::vector<IterationStats> train(Trainer& trainer, std::span<const VariantSpec> variants, std::size_t iterations);

struct EvalRow {
    std::uint64_t seed = 0;
    std::size_t attempt = 0;
    double score = 0.0;
};

struct EvalTable {
    std::vector<EvalRow> rows;
    std::map<std::uint64_t, double> variant_mean;
    double overall_mean = 0.0;
    std::size_t failures = 0;
};

/// Frozen-skill evaluation: no construct or refine, nothing archived.
EvalTable evaluate(Environment& env, Actor& actor, const SkillSet& skills, EmbeddingCache& cache,
                   std::span<const VariantSpec> variants, std::size_t attempts);

void write_eval_csv(const EvalTable& table, const std::filesystem::path& path);

/// Owns the environment, actor, generator, chat and embedding stacks built
/// from a RunConfig.
class Session {
public:
    explicit Session(RunConfig config);
    ~Session();

    const RunConfig& config() const { return config_; }
    Environment& env() { return *env_; }
    EmbeddingCache& cache() { return *cache_; }
    SkillGenerator& generator() { return *generator_; }
    /// The chat client the engine talks to (cassette-wrapped when a cassette
    /// is configured); null when nothing needs a model.
    ChatClient* chat() { return chat_; }
    TranscriptLog& transcript() { return transcript_; }
    std::unique_ptr<Actor> make_actor(double temperature, std::uint64_t seed);
    std::vector<std::string> action_templates(const VariantSpec& probe);
    /// Writes the embedding sidecar when one is configured.
    void flush();

private:
    ChatClient& require_chat();

    RunConfig config_;
    std::unique_ptr<EmbeddingProvider> provider_;
    std::unique_ptr<EmbeddingCache> cache_;
    std::unique_ptr<ChatClient> inner_chat_;
    std::unique_ptr<CassetteChatClient> cassette_;
    ChatClient* chat_ = nullptr;
    std::unique_ptr<Environment> env_;
    std::unique_ptr<SkillGenerator> generator_;
    TranscriptLog transcript_;
};

struct DriverResult {
    std::size_t aborted = 0;
    std::size_t transport_failures = 0;
    double mean_score = 0.0;
};

DriverResult run_adapt(Session& session);
DriverResult run_transfer(Session& session);
DriverResult run_eval(Session& session);
/// Construct-only pass over the trajectory archive at `archive_path`.
DriverResult run_mine(Session& session);
/// Summary of the skill set at `skills_path` to `out`, markdown export to
/// out_dir/skills.md.
void run_stats(const RunConfig& config, std::ostream& out);

}  // namespace sso
