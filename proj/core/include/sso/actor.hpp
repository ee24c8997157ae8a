#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sso/core.hpp"
#include "sso/env.hpp"
#include "sso/llm_client.hpp"
#include "sso/skillset.hpp"

namespace sso {

/// A skill as rendered into the actor prompt.
struct OfferedSkill {
    SkillId id;
    std::string subgoal;
    std::vector<std::string> instructions;

    friend bool operator==(const OfferedSkill&, const OfferedSkill&) = default;
};

std::vector<OfferedSkill> offer(std::span<const RetrievedSkill> retrieved);

struct ActorDecision {
    std::string reflection;
    std::optional<SkillId> targeted_subgoal;
    std::string action;

    friend bool operator==(const ActorDecision&, const ActorDecision&) = default;
};

std::string render_actor_prompt(std::string_view task_description, std::span<const std::string> admissible_actions,
                                std::span<const OfferedSkill> skills, std::string_view state_text);

/// Throws ParseError when no "Next action:" line carries an action.
ActorDecision parse_actor_output(std::string_view text, std::span<const OfferedSkill> offered);

/// Model-style output for a decision: reflection, "Current subgoal:" with the
/// offered subgoal text or "none", and "Next action:".
std::string render_actor_output(const ActorDecision& decision, std::span<const OfferedSkill> offered);

/// Offline actor. Follows the first offered skill whose next instruction is a
/// valid action in the current state, otherwise explores uniformly.
class ScriptedPolicy {
public:
    explicit ScriptedPolicy(std::uint64_t seed) : rng_(seed) {}

    /// Forgets per-episode skill progress.
    void begin_episode() { progress_.clear(); }

    ActorDecision decide(const EnvObservation& obs, std::span<const OfferedSkill> skills);

private:
    std::mt19937_64 rng_;
    std::map<SkillId, std::size_t> progress_;
};

struct ActorContext {
    std::string_view task;
    const EnvObservation& observation;
    std::span<const OfferedSkill> skills;
    std::string_view noop_action;
};

class Actor {
public:
    virtual ~Actor() = default;
    virtual void begin_episode() {}
    virtual ActorDecision act(const ActorContext& ctx) = 0;
};

class ScriptedActor final : public Actor {
public:
    explicit ScriptedActor(std::uint64_t seed) : policy_(seed) {}
    void begin_episode() override { policy_.begin_episode(); }
    ActorDecision act(const ActorContext& ctx) override { return policy_.decide(ctx.observation, ctx.skills); }

private:
    ScriptedPolicy policy_;
};

/// Actor backed by a chat model. Each step is one user turn holding the full
/// prompt. A reply without an action is re-asked once with a format reminder;
/// a second failure yields the environment's no-op action.
class ChatActor final : public Actor {
public:
    ChatActor(ChatClient& chat, std::string model, double temperature, TranscriptLog* transcript = nullptr)
        : chat_(&chat), model_(std::move(model)), temperature_(temperature), transcript_(transcript) {}

    ActorDecision act(const ActorContext& ctx) override;

    std::size_t parse_failures() const { return parse_failures_; }

private:
    ChatClient* chat_;
    std::string model_;
    double temperature_;
    TranscriptLog* transcript_;
    std::size_t parse_failures_ = 0;
};

}  // namespace sso
