#include "sso/generate.hpp"

#include <regex>
#include <set>

#include <spdlog/spdlog.h>

#include "sso/errors.hpp"
#include "sso/text.hpp"

namespace sso {

namespace {

constexpr std::string_view kSummaryHead =
    "You are an expert planning system. You are creating reusable skills to execute \n"
    "when completing various tasks. You create skills by looking at successful \n"
    "examples of task completions. A skill is composed of a list of instructions and \n"
    "a target state. After creating a skill, it will be used to execute actions in \n"
    "an environment. The environment will return a set of observations that \n"
    "summarize the new environment state. These observations will be used in \n"
    "conjunction with the skill's target state to determine whether the last skill \n"
    "was successful.\n"
    "\n"
    "Consider the example trajectories of states and actions below. You'll be asked \n"
    "to analyze the similarities between each. Pay attention to the wording of the \n"
    "state observations and actions. Then you'll be asked to generate the common \n"
    "instructions, and target state for them.\n"
    "\n"
    "Example 1:\n";

constexpr std::string_view kSummaryTail =
    "Generate a summary of what is happening in the examples above and the \n"
    "similarities between them. Provide a name for the skill that is being executed \n"
    "in the examples above. Do not generate skill instructions or target yet.";

constexpr std::string_view kInstructionsPrompt =
    "Generate a numbered list of instructions for completing the skill. The \n"
    "instructions should be similar to the actions in the examples. Instructions \n"
    "should use the action templates provided below. Create generic instructions \n"
    "that would be valid for every example but specific enough to be useful in the \n"
    "examples. Do not mention the examples in the instructions. Use the output \n"
    "format:\n"
    "Skill [skill name] instructions:\n"
    "1. instruction 1\n"
    "2. instruction 2\n"
    "...\n"
    "\n"
    "Action templates: ";

constexpr std::string_view kTargetPrompt =
    "Generate a single target observation that would indicate the success of the \n"
    "skill. The target should be similar to one of the observations in the final \n"
    "states. Create a generic target that would be valid for every example. Do not \n"
    "mention the examples in the target. Use the output format:\n"
    "Skill [skill name] target: [target observation]";

constexpr std::string_view kInstructionsReminder =
    "Your answer did not follow the requested format. Reply again using exactly:\n"
    "Skill [skill name] instructions:\n"
    "1. instruction 1\n"
    "2. instruction 2\n"
    "...";

constexpr std::string_view kTargetReminder =
    "Your answer did not follow the requested format. Reply again using exactly:\n"
    "Skill [skill name] target: [target observation]";

std::string strip_brackets(std::string s) {
    s = text::trim(s);
    if (s.size() >= 2 && s.front() == '[' && s.back() == ']' && s.find(']') == s.size() - 1)
        s = text::trim(s.substr(1, s.size() - 2));
    return s;
}

std::string offline_name(std::span<const std::string> actions) {
    return text::join(actions, " then ");
}

}  // namespace

std::string render_subtrajectory(const SubtrajRef& ref, const TrajectoryStore& store) {
    const auto states = subtraj_states(ref, store);
    const auto actions = subtraj_actions(ref, store);
    std::string out = "Initial State:\n" + states.front() + "\n\nTrajectory:\n";
    for (std::size_t i = 0; i < actions.size(); ++i) {
        out += "Action: " + actions[i] + "\n";
        out += "Observation: " + states[i + 1] + "\n";
    }
    out += "\nFinal State:\n" + states.back();
    return out;
}

GenerationPrompts render_generation_prompts(const CandidatePair& pair, const TrajectoryStore& store,
                                            std::span<const std::string> action_templates) {
    GenerationPrompts p;
    p.summary.append(kSummaryHead);
    p.summary += render_subtrajectory(pair.a, store);
    p.summary += "\n\nExample 2:\n";
    p.summary += render_subtrajectory(pair.b, store);
    p.summary += "\n\n";
    p.summary.append(kSummaryTail);

    p.instructions.append(kInstructionsPrompt);
    p.instructions += text::join(action_templates, ", ");
    if (action_templates.empty()) p.warnings.emplace_back("no action templates supplied for skill generation");

    p.target.append(kTargetPrompt);
    return p;
}

std::optional<ParsedInstructions> parse_instruction_list(std::string_view reply) {
    static const std::regex header(R"(^\s*\**\s*skill\s+(.*?)\s+instructions\s*:?\s*\**\s*$)", std::regex::icase);
    static const std::regex numbered(R"(^\s*(?:step\s*)?\d+\s*[.):]\s*(.*\S)\s*$)", std::regex::icase);

    ParsedInstructions out;
    bool in_list = false;
    for (const auto& line : text::split_lines(reply)) {
        std::smatch m;
        if (!in_list && out.name.empty() && std::regex_match(line, m, header)) {
            out.name = strip_brackets(m[1].str());
            continue;
        }
        if (std::regex_match(line, m, numbered)) {
            auto step = text::trim(m[1].str());
            if (!step.empty()) out.steps.push_back(std::move(step));
            in_list = true;
            continue;
        }
        if (in_list && !text::trim(line).empty()) break;
    }
    if (out.steps.empty()) return std::nullopt;
    return out;
}

std::optional<ParsedTarget> parse_target(std::string_view reply) {
    static const std::regex line_re(R"(^\s*\**\s*skill\s+(.*?)\s*target\s*:\**\s*(.*?)\s*$)", std::regex::icase);
    const auto lines = text::split_lines(reply);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::smatch m;
        if (!std::regex_match(lines[i], m, line_re)) continue;
        std::string joined = m[2].str();
        // Wrapped targets continue until a blank line.
        for (std::size_t k = i + 1; k < lines.size() && !text::trim(lines[k]).empty(); ++k) joined += " " + lines[k];
        auto target = strip_brackets(text::collapse_whitespace(joined));
        if (target.empty()) continue;
        return ParsedTarget{strip_brackets(m[1].str()), std::move(target)};
    }
    return std::nullopt;
}

GenerationResult generate_skill(const CandidatePair& pair, const TrajectoryStore& store,
                                std::span<const std::string> action_templates, ChatClient& chat,
                                const std::string& model, double temperature, std::size_t retries,
                                TranscriptLog* transcript) {
    const auto prompts = render_generation_prompts(pair, store, action_templates);
    for (const auto& w : prompts.warnings) spdlog::warn("{}", w);

    GenerationResult result;
    ChatRequest request{model, {}, temperature};
    auto ask = [&](std::string content) {
        request.messages.push_back({"user", std::move(content)});
        auto reply = chat.chat(request);
        ++result.chat_calls;
        if (transcript)
            transcript->append({{"kind", "generation"}, {"request", canonical_json(request)}, {"response", reply}});
        request.messages.push_back({"assistant", reply});
        return reply;
    };

    ask(prompts.summary);

    std::optional<ParsedInstructions> instructions = parse_instruction_list(ask(prompts.instructions));
    for (std::size_t r = 0; !instructions && r < retries; ++r)
        instructions = parse_instruction_list(ask(std::string(kInstructionsReminder)));
    if (!instructions) {
        result.discard_reason = "no numbered instruction list after " + std::to_string(retries + 1) + " attempts";
        spdlog::info("discarding pair {}[{}+{}]: {}", pair.a.trajectory_id, pair.a.start, pair.a.length,
                     result.discard_reason);
        return result;
    }

    std::optional<ParsedTarget> target = parse_target(ask(prompts.target));
    for (std::size_t r = 0; !target && r < retries; ++r) target = parse_target(ask(std::string(kTargetReminder)));
    if (!target) {
        result.discard_reason = "no skill target line after " + std::to_string(retries + 1) + " attempts";
        spdlog::info("discarding pair {}[{}+{}]: {}", pair.a.trajectory_id, pair.a.start, pair.a.length,
                     result.discard_reason);
        return result;
    }

    SkillDraft draft;
    draft.name = !instructions->name.empty() ? instructions->name : target->name;
    draft.instructions = std::move(instructions->steps);
    draft.subgoal = std::move(target->target);
    draft.source_pair = pair;
    result.draft = std::move(draft);
    return result;
}

GenerationResult OfflineSkillGenerator::generate(const CandidatePair& pair, const TrajectoryStore& store,
                                                 std::span<const std::string>) {
    auto actions = subtraj_actions(pair.a, store);
    for (auto& a : actions) a = text::trim(a);
    const auto states = subtraj_states(pair.a, store);
    GenerationResult result;
    SkillDraft draft;
    draft.name = offline_name(actions);
    draft.instructions = std::move(actions);
    draft.subgoal = text::collapse_whitespace(states.back());
    draft.source_pair = pair;
    result.draft = std::move(draft);
    return result;
}

std::string OfflineSkillModel::chat(const ChatRequest& request) {
    ++calls_;
    if (request.messages.empty()) throw TransportError("offline model received no messages");
    const auto& first = request.messages.front().content;
    const auto begin = first.find("Example 1:\n");
    const auto end = first.find("\n\nExample 2:\n");
    if (begin == std::string::npos || end == std::string::npos || end < begin)
        return "I can only help with skill generation prompts.";
    const auto block = first.substr(begin + 11, end - begin - 11);

    std::vector<std::string> actions;
    for (const auto& line : text::split_lines(block))
        if (line.rfind("Action: ", 0) == 0) actions.push_back(text::trim(line.substr(8)));
    const auto final_at = block.rfind("\nFinal State:\n");
    const auto final_state =
        final_at == std::string::npos ? std::string{} : text::collapse_whitespace(block.substr(final_at + 14));
    const auto name = offline_name(actions);

    const auto& last = request.messages.back().content;
    if (last.rfind("Generate a numbered list", 0) == 0 || last.find("instructions:\n1.") != std::string::npos) {
        std::string reply = "Skill " + name + " instructions:\n";
        for (std::size_t i = 0; i < actions.size(); ++i) reply += std::to_string(i + 1) + ". " + actions[i] + "\n";
        return reply;
    }
    if (last.rfind("Generate a single target", 0) == 0 || last.find("target: [target observation]") != std::string::npos)
        return "Skill " + name + " target: " + final_state;
    return "Both examples perform the same steps: " + name + ".";
}

std::vector<SkillDraft> dedup_skills(std::vector<SkillDraft> drafts, std::span<const std::string> existing_subgoals,
                                     ChatClient* chat, const std::string& model, double temperature) {
    std::set<std::string> seen;
    for (const auto& s : existing_subgoals) seen.insert(text::normalize_subgoal(s));
    std::vector<SkillDraft> kept;
    for (auto& d : drafts)
        if (seen.insert(text::normalize_subgoal(d.subgoal)).second) kept.push_back(std::move(d));
    if (!chat || kept.empty()) return kept;

    std::string prompt = "Existing skill subgoals:\n";
    if (existing_subgoals.empty()) prompt += "(none)\n";
    for (std::size_t i = 0; i < existing_subgoals.size(); ++i)
        prompt += std::to_string(i + 1) + ". " + existing_subgoals[i] + "\n";
    prompt += "\nNew skill subgoals:\n";
    for (std::size_t i = 0; i < kept.size(); ++i) prompt += std::to_string(i + 1) + ". " + kept[i].subgoal + "\n";
    prompt +=
        "\nWhich new subgoals are semantically identical to an existing subgoal or to an earlier new subgoal? "
        "Answer with a single line:\nDuplicates: [comma-separated new subgoal numbers, or none]";

    std::string reply;
    try {
        reply = chat->chat(ChatRequest{model, {{"user", prompt}}, temperature});
    } catch (const TransportError& e) {
        spdlog::warn("semantic dedup unavailable, keeping normalized dedup: {}", e.what());
        return kept;
    }

    std::set<std::size_t> dropped;
    static const std::regex number(R"(\d+)");
    for (const auto& line : text::split_lines(reply)) {
        if (!text::starts_with_ci(text::trim(line), "duplicates:")) continue;
        const auto list = line.substr(line.find(':') + 1);
        for (std::sregex_iterator it(list.begin(), list.end(), number), end; it != end; ++it) {
            const auto n = std::stoul(it->str());
            if (n >= 1 && n <= kept.size()) dropped.insert(n - 1);
        }
        break;
    }
    std::vector<SkillDraft> out;
    for (std::size_t i = 0; i < kept.size(); ++i)
        if (!dropped.contains(i)) out.push_back(std::move(kept[i]));
    return out;
}

}  // namespace sso
