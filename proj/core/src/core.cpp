#include "sso/core.hpp"

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "sso/errors.hpp"

namespace sso {

std::string SkillId::str() const { return "s" + std::to_string(value); }

std::optional<SkillId> SkillId::parse(const std::string& s) {
    if (s.size() < 2 || s[0] != 's') return std::nullopt;
    std::uint64_t v = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') return std::nullopt;
        v = v * 10 + static_cast<std::uint64_t>(s[i] - '0');
    }
    return SkillId{v};
}

double Trajectory::episode_score() const {
    return std::accumulate(steps.begin(), steps.end(), 0.0,
                           [](double acc, const Step& s) { return acc + s.reward; });
}

void Trajectory::validate() const {
    if (steps.empty()) throw ContractError("trajectory " + id + " has no steps");
    if (terminal_observation.empty()) throw ContractError("trajectory " + id + " has no terminal observation");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& s = steps[i];
        if (s.observation.empty() || s.action.empty())
            throw ContractError("trajectory " + id + " step " + std::to_string(i) +
                                " has empty observation or action");
        if (!std::isfinite(s.reward))
            throw ContractError("trajectory " + id + " step " + std::to_string(i) +
                                " has a non-finite reward");
    }
}

PairKey PairKey::of(const CandidatePair& p) {
    if (p.b < p.a) return {p.b, p.a};
    return {p.a, p.b};
}

void SSOConfig::validate() const {
    if (min_len < 2) throw ConfigError("min_len must be >= 2");
    if (max_len < min_len) throw ConfigError("max_len must be >= min_len");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
    if (!std::isfinite(epsilon)) throw ConfigError("epsilon must be finite");
    for (double w : {w_state, w_action, w_reward, w_length})
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("score weights must be >= 0");
    if (max_retrieved < 1) throw ConfigError("max_retrieved must be >= 1");
    if (beam_width < 1) throw ConfigError("beam_width must be >= 1");
    if (n_past < 1) throw ConfigError("n_past must be >= 1");
    if (temp_train < 0.0 || temp_test < 0.0) throw ConfigError("temperatures must be >= 0");
}

void to_json(nlohmann::json& j, const SSOConfig& c) {
    j = nlohmann::json{{"min_len", c.min_len},
                       {"max_len", c.max_len},
                       {"n_past", c.n_past},
                       {"gamma", c.gamma},
                       {"epsilon", c.epsilon},
                       {"w_state", c.w_state},
                       {"w_action", c.w_action},
                       {"w_reward", c.w_reward},
                       {"w_length", c.w_length},
                       {"max_retrieved", c.max_retrieved},
                       {"beam_width", c.beam_width},
                       {"temp_train", c.temp_train},
                       {"temp_test", c.temp_test},
                       {"generation_retries", c.generation_retries}};
}

void from_json(const nlohmann::json& j, SSOConfig& c) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "min_len") c.min_len = value.get<std::size_t>();
            else if (key == "max_len") c.max_len = value.get<std::size_t>();
            else if (key == "n_past") c.n_past = value.get<std::size_t>();
            else if (key == "gamma") c.gamma = value.get<double>();
            else if (key == "epsilon") c.epsilon = value.get<double>();
            else if (key == "w_state") c.w_state = value.get<double>();
            else if (key == "w_action") c.w_action = value.get<double>();
            else if (key == "w_reward") c.w_reward = value.get<double>();
            else if (key == "w_length") c.w_length = value.get<double>();
            else if (key == "max_retrieved") c.max_retrieved = value.get<std::size_t>();
            else if (key == "beam_width") c.beam_width = value.get<std::size_t>();
            else if (key == "temp_train") c.temp_train = value.get<double>();
            else if (key == "temp_test") c.temp_test = value.get<double>();
            else if (key == "generation_retries") c.generation_retries = value.get<std::size_t>();
            else throw ConfigError("unknown config field: " + key);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config field " + key + ": " + e.what());
        }
    }
}

double discounted_return(const Trajectory& traj, std::size_t t, double gamma) {
    if (t >= traj.steps.size())
        throw LookupError("step index " + std::to_string(t) + " out of range for trajectory " +
                          traj.id + " with " + std::to_string(traj.steps.size()) + " steps");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ContractError("gamma must be in (0, 1]");
    double total = 0.0;
    double discount = 1.0;
    for (std::size_t i = t; i < traj.steps.size(); ++i) {
        total += traj.steps[i].reward * discount;
        discount *= gamma;
    }
    return total;
}

bool overlaps(const SubtrajRef& x, const SubtrajRef& y) {
    return x.trajectory_id == y.trajectory_id && x.start < y.end() && y.start < x.end();
}

bool overlaps(const CandidatePair& p, const CandidatePair& q) {
    return overlaps(p.a, q.a) || overlaps(p.a, q.b) || overlaps(p.b, q.a) || overlaps(p.b, q.b);
}

}  // namespace sso
