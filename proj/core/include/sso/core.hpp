#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace sso {

/// Stable identifier of a skill inside one skill set. Rendered as "s<N>".
struct SkillId {
    std::uint64_t value = 0;

    std::string str() const;
    static std::optional<SkillId> parse(const std::string& s);

    friend auto operator<=>(const SkillId&, const SkillId&) = default;
};

struct Step {
    std::string observation;
    std::string action;
    double reward = 0.0;
    std::optional<SkillId> self_reported_skill;

    friend bool operator==(const Step&, const Step&) = default;
};

/// One completed episode: steps in order plus the state after the final action.
struct Trajectory {
    std::string id;
    std::vector<Step> steps;
    std::string terminal_observation;

    /// Cumulative reward (plain sum of step rewards).
    double episode_score() const;

    /// Throws ContractError unless every step has non-empty observation and
    /// action text and a finite reward.
    void validate() const;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Index view of `length` consecutive actions starting at `start`.
/// Covers states start..start+length and actions start..start+length-1.
struct SubtrajRef {
    std::string trajectory_id;
    std::size_t start = 0;
    std::size_t length = 0;

    std::size_t end() const { return start + length; }

    friend auto operator<=>(const SubtrajRef&, const SubtrajRef&) = default;
};

struct CandidatePair {
    SubtrajRef a;
    SubtrajRef b;
    double state_sim = 0.0;
    double action_sim = 0.0;
    double reward_value = 0.0;
    double score = 0.0;

    std::size_t length() const { return a.length; }

    friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

/// Identity of a pair independent of its computed scores; (a, b) and (b, a)
/// map to the same key.
struct PairKey {
    SubtrajRef first;
    SubtrajRef second;

    static PairKey of(const CandidatePair& p);

    friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

struct SSOConfig {
    std::size_t min_len = 2;
    std::size_t max_len = 5;
    std::size_t n_past = 10;
    double gamma = 0.9;
    double epsilon = 0.0;
    double w_state = 1.0;
    double w_action = 1.0;
    double w_reward = 0.1;
    double w_length = 0.01;
    std::size_t max_retrieved = 3;
    std::size_t beam_width = 10;
    double temp_train = 0.7;
    double temp_test = 0.0;
    std::size_t generation_retries = 2;

    /// Throws ConfigError naming the first violated bound.
    void validate() const;

    friend bool operator==(const SSOConfig&, const SSOConfig&) = default;
};

void to_json(nlohmann::json& j, const SSOConfig& c);
/// Missing fields keep their defaults; unknown fields are rejected.
void from_json(const nlohmann::json& j, SSOConfig& c);

/// Sum over i of reward(t+i) * gamma^i to the end of the trajectory.
double discounted_return(const Trajectory& traj, std::size_t t, double gamma);

/// True iff the two pairs share any (trajectory, step index) cell.
bool overlaps(const CandidatePair& p, const CandidatePair& q);
bool overlaps(const SubtrajRef& x, const SubtrajRef& y);

}  // namespace sso
