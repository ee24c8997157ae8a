#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sso/core.hpp"
#include "sso/embedding.hpp"
#include "sso/generate.hpp"
#include "sso/trajectory_store.hpp"

namespace sso {

struct Skill {
    SkillId id;
    std::string name;
    std::string subgoal;
    std::vector<std::string> instructions;
    CandidatePair source_pair;
    /// First state of member a, then of member b.
    std::vector<Embedding> initial_state_embeddings;
    std::size_t created_iteration = 0;
    std::size_t executed_count = 0;
    double observed_value = 0.0;

    friend bool operator==(const Skill&, const Skill&) = default;
};

struct RetrievedSkill {
    const Skill* skill = nullptr;
    double relevance = 0.0;
};

struct RefineResult {
    std::vector<SkillId> pruned;
    /// (skill, step index) for every credited self-report, in step order.
    std::vector<std::pair<SkillId, std::size_t>> executions;
};

/// The live skill collection together with the trajectory archive and every
/// pair ever selected. All mutators bump `epoch()`.
class SkillSet {
public:
    static constexpr int kSchemaVersion = 1;

    explicit SkillSet(SSOConfig config = {});

    const SSOConfig& config() const { return config_; }

    /// Inserts a generated skill; initial-state embeddings are taken from the
    /// first state of each source member. Throws ContractError if the
    /// normalized subgoal is already live.
    SkillId add_skill(SkillDraft draft, EmbeddingCache& cache, std::size_t created_iteration);
    /// Lower-level insert used by persistence and tests.
    SkillId add_skill(Skill skill);
    void remove(SkillId id);

    const Skill* find(SkillId id) const;
    const std::map<SkillId, Skill>& skills() const { return skills_; }
    std::size_t size() const { return skills_.size(); }
    std::vector<std::string> live_subgoals() const;
    /// Source pair of every live skill.
    std::map<PairKey, SkillId> live_pair_index() const;

    /// Up to k skills ranked by max cosine between the skill's initial states
    /// and `state_text`; ties go to the older skill, then the smaller id.
    std::vector<RetrievedSkill> retrieve(const std::string& state_text, std::size_t k, EmbeddingCache& cache) const;

    /// Adds discounted_return(traj, t, gamma) to the skill's observed value.
    /// Unknown ids are ignored with a warning and return nullopt.
    std::optional<double> record_execution(SkillId id, const Trajectory& traj, std::size_t t, double gamma);

    /// Credits each self-reported step in order and removes a skill as soon as
    /// its observed value is <= epsilon. Sampled pairs are kept.
    RefineResult refine(const Trajectory& traj);

    TrajectoryStore& trajectories() { return trajectories_; }
    const TrajectoryStore& trajectories() const { return trajectories_; }
    const Trajectory& archive(Trajectory traj);

    const std::vector<CandidatePair>& sampled_pairs() const { return sampled_pairs_; }
    /// Appends pairs not already recorded (by member refs).
    void add_sampled_pairs(std::span<const CandidatePair> pairs);
    bool was_sampled(const CandidatePair& pair) const;

    std::size_t iteration() const { return iteration_; }
    void set_iteration(std::size_t it);

    std::uint64_t epoch() const { return epoch_; }

    /// Writes `path` and the trajectory archive next to it as
    /// "<stem>.trajectories.jsonl".
    void save(const std::filesystem::path& path) const;
    static SkillSet load(const std::filesystem::path& path);

    std::string export_markdown() const;

    friend bool operator==(const SkillSet& x, const SkillSet& y);

private:
    SSOConfig config_;
    std::map<SkillId, Skill> skills_;
    TrajectoryStore trajectories_;
    std::vector<CandidatePair> sampled_pairs_;
    std::map<PairKey, std::size_t> sampled_index_;
    std::size_t iteration_ = 0;
    std::uint64_t next_id_ = 1;
    std::uint64_t epoch_ = 0;
};

void to_json(nlohmann::json& j, const SubtrajRef& r);
void to_json(nlohmann::json& j, const CandidatePair& p);

}  // namespace sso
