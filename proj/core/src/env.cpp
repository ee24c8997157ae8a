#include "sso/env.hpp"

#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "env_internal.hpp"
#include "sso/errors.hpp"

namespace sso {

std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }

Split parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw ConfigError("unknown split: " + std::string(s));
}

std::unique_ptr<Environment> make_environment(std::string_view family) {
    if (family == "minilab") return detail::make_minilab();
    if (family == "minivault") return detail::make_minivault();
    throw ConfigError("unknown environment family: " + std::string(family));
}

std::vector<RewardEntry> minilab_reward_schedule(const VariantSpec& variant) {
    const auto substance = minilab_substance(variant.seed);
    return {{"focus on the thermometer", 10.0},
            {"place the focused " + substance + " on the activated stove", 30.0},
            {"read the thermometer after the " + substance + " melts", 60.0}};
}

namespace {

nlohmann::json to_wire(const EnvObservation& obs, const Environment& env) {
    return {{"text", obs.text},
            {"templates", obs.admissible_action_templates},
            {"actions", obs.valid_actions},
            {"reward", obs.reward},
            {"done", obs.done},
            {"score", obs.score},
            {"task", env.task_description()},
            {"noop", env.noop_action()}};
}

}  // namespace

void serve_environment(Environment& env, std::istream& in, std::ostream& out) {
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json reply;
        try {
            const auto req = nlohmann::json::parse(line);
            const auto type = req.at("type").get<std::string>();
            if (type == "reset") {
                VariantSpec v{req.value("family", env.family()), req.value("seed", std::uint64_t{0}),
                              parse_split(req.value("split", std::string("train")))};
                reply = to_wire(env.reset(v), env);
            } else if (type == "step") {
                reply = to_wire(env.step(req.at("action").get<std::string>()), env);
            } else {
                reply = {{"error", "unknown request type: " + type}};
            }
        } catch (const ContractError& e) {
            reply = {{"error", e.what()}, {"kind", "contract"}};
        } catch (const ConfigError& e) {
            reply = {{"error", e.what()}, {"kind", "config"}};
        } catch (const std::exception& e) {
            reply = {{"error", e.what()}, {"kind", "other"}};
        }
        out << reply.dump() << '\n' << std::flush;
    }
}

}  // namespace sso
