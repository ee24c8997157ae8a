#include "sso/actor.hpp"

#include <spdlog/spdlog.h>

#include "sso/errors.hpp"
#include "sso/text.hpp"

namespace sso {

namespace {

constexpr std::string_view kPromptHead =
    "You are playing a text-based game in which you must interact with your \n"
    "surroundings to complete a task. You will occasionally be given posisible \n"
    "subgoals. You may choose to target one of these subgoals or ignore them.\n"
    "\n";

constexpr std::string_view kPromptBody =
    "\n"
    "\n"
    "Given the state, reflect on what has happened so far, explain your plan to \n"
    "accomplish the task, output which of the given subgoals you are targeting next \n"
    "(match one of the subgoals in the prompt word for word or output \"none\"), and \n"
    "then output the next action to execute (use one of the action templates below).\n"
    "\n"
    "For example:\n"
    "The last action had the effect of... To accomplish the task, I will need to...\n"
    "Current subgoal: [subgoal]\n"
    "Next action: [action]\n"
    "\n";

constexpr std::string_view kSkillsHead =
    "The following instructions contain potentially useful information about \n"
    "reaching subgoals:\n"
    "\n";

constexpr std::string_view kFormatReminder =
    "Your answer did not follow the requested format. End your answer with exactly two lines:\n"
    "Current subgoal: [subgoal]\n"
    "Next action: [action]";

constexpr std::string_view kSubgoalTag = "current subgoal:";
constexpr std::string_view kActionTag = "next action:";

std::string_view rest_after(std::string_view line, std::size_t tag_len) {
    line.remove_prefix(tag_len);
    return line;
}

std::optional<SkillId> resolve(std::string_view reported, std::span<const OfferedSkill> offered) {
    const auto exact = text::collapse_whitespace(reported);
    for (const auto& s : offered)
        if (text::collapse_whitespace(s.subgoal) == exact) return s.id;
    const auto norm = text::normalize_reported(reported);
    if (norm.empty() || norm == "none") return std::nullopt;
    for (const auto& s : offered)
        if (text::normalize_reported(s.subgoal) == norm) return s.id;
    return std::nullopt;
}

}  // namespace

std::vector<OfferedSkill> offer(std::span<const RetrievedSkill> retrieved) {
    std::vector<OfferedSkill> out;
    out.reserve(retrieved.size());
    for (const auto& r : retrieved) out.push_back({r.skill->id, r.skill->subgoal, r.skill->instructions});
    return out;
}

std::string render_actor_prompt(std::string_view task_description, std::span<const std::string> admissible_actions,
                                std::span<const OfferedSkill> skills, std::string_view state_text) {
    std::string out(kPromptHead);
    out += task_description;
    out += kPromptBody;
    out += text::join(admissible_actions, ", ");
    out += "\n\n";
    if (!skills.empty()) {
        out += kSkillsHead;
        for (const auto& s : skills) {
            out += "Instructions for reaching the subgoal " + s.subgoal + ":\n";
            for (std::size_t i = 0; i < s.instructions.size(); ++i)
                out += "    " + std::to_string(i + 1) + ". " + s.instructions[i] + "\n";
            out += "\n";
        }
    }
    out += state_text;
    return out;
}

ActorDecision parse_actor_output(std::string_view text, std::span<const OfferedSkill> offered) {
    const auto lines = text::split_lines(text);
    std::optional<std::size_t> subgoal_line;
    std::optional<std::size_t> action_line;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto t = text::trim(lines[i]);
        if (!subgoal_line && text::starts_with_ci(t, kSubgoalTag)) subgoal_line = i;
        if (text::starts_with_ci(t, kActionTag)) action_line = i;
    }
    if (!action_line) throw ParseError("actor output has no \"Next action:\" line");

    auto value_of = [&](std::size_t i, std::size_t tag_len) {
        auto v = text::trim(rest_after(text::trim(lines[i]), tag_len));
        // "Next action:" alone on its line; take the following non-empty line.
        for (std::size_t j = i + 1; v.empty() && j < lines.size(); ++j) v = text::trim(lines[j]);
        return v;
    };

    ActorDecision d;
    d.action = value_of(*action_line, kActionTag.size());
    if (d.action.size() >= 2 && d.action.front() == '[' && d.action.back() == ']')
        d.action = text::trim(d.action.substr(1, d.action.size() - 2));
    if (d.action.empty()) throw ParseError("actor output has an empty \"Next action:\"");

    const auto reflection_end = subgoal_line ? *subgoal_line : *action_line;
    std::vector<std::string> head(lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(reflection_end));
    d.reflection = text::trim(text::join(head, "\n"));
    if (subgoal_line) d.targeted_subgoal = resolve(value_of(*subgoal_line, kSubgoalTag.size()), offered);
    return d;
}

std::string render_actor_output(const ActorDecision& decision, std::span<const OfferedSkill> offered) {
    std::string subgoal = "none";
    if (decision.targeted_subgoal)
        for (const auto& s : offered)
            if (s.id == *decision.targeted_subgoal) subgoal = text::collapse_whitespace(s.subgoal);
    std::string out;
    if (!decision.reflection.empty()) out += decision.reflection + "\n";
    out += "Current subgoal: " + subgoal + "\n";
    out += "Next action: " + decision.action;
    return out;
}

ActorDecision ScriptedPolicy::decide(const EnvObservation& obs, std::span<const OfferedSkill> skills) {
    std::map<std::string, const std::string*> valid;
    for (const auto& a : obs.valid_actions) valid.emplace(text::normalize_reported(a), &a);

    for (const auto& s : skills) {
        auto& next = progress_[s.id];
        if (next >= s.instructions.size()) continue;
        auto it = valid.find(text::normalize_reported(s.instructions[next]));
        if (it == valid.end()) continue;
        ++next;
        return {"I am following the instructions for reaching a known subgoal.", s.id, *it->second};
    }

    const auto& pool = obs.valid_actions.empty() ? obs.admissible_action_templates : obs.valid_actions;
    if (pool.empty()) throw ContractError("scripted policy has no action to choose from");
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    return {"I am exploring.", std::nullopt, pool[pick(rng_)]};
}

ActorDecision ChatActor::act(const ActorContext& ctx) {
    const auto prompt =
        render_actor_prompt(ctx.task, ctx.observation.admissible_action_templates, ctx.skills, ctx.observation.text);
    ChatRequest req{model_, {{"user", prompt}}, temperature_};
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto reply = chat_->chat(req);
        if (transcript_) transcript_->append({{"kind", "actor"}, {"request", canonical_json(req)}, {"response", reply}});
        try {
            return parse_actor_output(reply, ctx.skills);
        } catch (const ParseError& e) {
            ++parse_failures_;
            spdlog::warn("actor reply did not parse: {}", e.what());
            req.messages.push_back({"assistant", reply});
            req.messages.push_back({"user", std::string(kFormatReminder)});
        }
    }
    return {"", std::nullopt, std::string(ctx.noop_action)};
}

}  // namespace sso
