#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sso/core.hpp"
#include "sso/llm_client.hpp"
#include "sso/trajectory_store.hpp"

namespace sso {

struct SkillDraft {
    std::string name;
    std::vector<std::string> instructions;
    std::string subgoal;
    CandidatePair source_pair;

    friend bool operator==(const SkillDraft&, const SkillDraft&) = default;
};

/// The three user turns of the skill generation conversation.
struct GenerationPrompts {
    std::string summary;       // examples + request for a summary and name
    std::string instructions;  // numbered instruction list request
    std::string target;        // target observation request
    std::vector<std::string> warnings;
};

/// "Initial State:" / "Trajectory:" (Action/Observation lines) / "Final State:" block.
std::string render_subtrajectory(const SubtrajRef& ref, const TrajectoryStore& store);

GenerationPrompts render_generation_prompts(const CandidatePair& pair, const TrajectoryStore& store,
                                            std::span<const std::string> action_templates);

struct ParsedInstructions {
    std::string name;
    std::vector<std::string> steps;
};

/// Accepts "1." / "1)" / "Step 1:" numbering after an optional
/// "Skill <name> instructions:" header. Empty when no numbered line is found.
std::optional<ParsedInstructions> parse_instruction_list(std::string_view text);

struct ParsedTarget {
    std::string name;
    std::string target;
};

/// Finds "Skill <name> target: <observation>"; the target is folded onto one line.
std::optional<ParsedTarget> parse_target(std::string_view text);

struct GenerationResult {
    std::optional<SkillDraft> draft;
    std::string discard_reason;
    std::size_t chat_calls = 0;
};

class SkillGenerator {
public:
    virtual ~SkillGenerator() = default;
    virtual GenerationResult generate(const CandidatePair& pair, const TrajectoryStore& store,
                                      std::span<const std::string> action_templates) = 0;
};

/// Runs the three-turn conversation. The first reply is kept in the
/// conversation but never parsed. A turn whose reply does not parse is
/// re-asked with a format reminder up to `retries` times before the pair is
/// discarded. Transport errors propagate.
GenerationResult generate_skill(const CandidatePair& pair, const TrajectoryStore& store,
                                std::span<const std::string> action_templates, ChatClient& chat,
                                const std::string& model, double temperature, std::size_t retries,
                                TranscriptLog* transcript = nullptr);

class LlmSkillGenerator final : public SkillGenerator {
public:
    LlmSkillGenerator(ChatClient& chat, std::string model, const SSOConfig& config,
                      TranscriptLog* transcript = nullptr)
        : chat_(&chat), model_(std::move(model)), temperature_(config.temp_train),
          retries_(config.generation_retries), transcript_(transcript) {}

    GenerationResult generate(const CandidatePair& pair, const TrajectoryStore& store,
                              std::span<const std::string> action_templates) override {
        return generate_skill(pair, store, action_templates, *chat_, model_, temperature_, retries_, transcript_);
    }

private:
    ChatClient* chat_;
    std::string model_;
    double temperature_;
    std::size_t retries_;
    TranscriptLog* transcript_;
};

/// Deterministic stand-in for the model: instructions are member a's actions
/// verbatim, the subgoal is member a's final state on one line, and the name
/// is the actions joined with " then ".
class OfflineSkillGenerator final : public SkillGenerator {
public:
    GenerationResult generate(const CandidatePair& pair, const TrajectoryStore& store,
                              std::span<const std::string> action_templates) override;
};

/// Chat model that answers the generation conversation the way
/// OfflineSkillGenerator would, by reading Example 1 back out of the prompt.
/// Lets the full prompt/parse/cassette path run without a network.
class OfflineSkillModel final : public ChatClient {
public:
    std::string chat(const ChatRequest& request) override;
    std::size_t calls() const { return calls_; }

private:
    std::size_t calls_ = 0;
};

/// Removes drafts whose normalized subgoal repeats an existing subgoal or an
/// earlier draft. When `chat` is given, the survivors are then shown to the
/// model, and the drafts it names as duplicates are dropped; a transport
/// failure keeps the deterministic result.
std::vector<SkillDraft> dedup_skills(std::vector<SkillDraft> drafts,
                                     std::span<const std::string> existing_subgoals,
                                     ChatClient* chat = nullptr, const std::string& model = {},
                                     double temperature = 0.0);

}  // namespace sso
