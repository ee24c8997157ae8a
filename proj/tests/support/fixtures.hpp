#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <random>
#include <string>
#include <vector>

#include "sso/core.hpp"
#include "sso/errors.hpp"
#include "sso/embedding.hpp"
#include "sso/llm_client.hpp"
#include "sso/skillset.hpp"
#include "sso/trajectory_store.hpp"

namespace sso::testing {

/// Trajectory from parallel action/reward lists; observations are "<id> state <t>".
inline Trajectory make_trajectory(const std::string& id, const std::vector<std::string>& actions,
                                  const std::vector<double>& rewards = {}) {
    Trajectory t;
    t.id = id;
    for (std::size_t i = 0; i < actions.size(); ++i)
        t.steps.push_back({id + " state " + std::to_string(i), actions[i], i < rewards.size() ? rewards[i] : 0.0, {}});
    t.terminal_observation = id + " state " + std::to_string(actions.size());
    return t;
}

/// Small vocabularies so that fuzzed trajectories share text and produce ties.
inline Trajectory random_trajectory(std::mt19937_64& rng, const std::string& id, std::size_t steps) {
    static const std::vector<std::string> rooms{"kitchen", "hallway", "workshop"};
    static const std::vector<std::string> things{"stove", "thermometer", "table", "door"};
    static const std::vector<std::string> verbs{"go to", "focus on", "open", "look at"};
    auto pick = [&](const std::vector<std::string>& v) { return v[rng() % v.size()]; };
    Trajectory t;
    t.id = id;
    for (std::size_t i = 0; i < steps; ++i) {
        Step s;
        s.observation = "You are in the " + pick(rooms) + ". You see a " + pick(things) + ".";
        s.action = pick(verbs) + " " + pick(things);
        s.reward = (rng() % 4 == 0) ? static_cast<double>(rng() % 30) : 0.0;
        t.steps.push_back(std::move(s));
    }
    t.terminal_observation = "You are in the " + pick(rooms) + ".";
    return t;
}

/// Distinct pairs over one latest trajectory "L" and three past ones, with
/// some non-positive scores. Windows collide often, so overlaps are common.
inline std::vector<CandidatePair> random_pairs(std::mt19937_64& rng, std::size_t n) {
    std::vector<CandidatePair> out;
    std::uniform_real_distribution<double> score(-0.5, 3.0);
    while (out.size() < n) {
        const std::size_t len = 2 + rng() % 3;
        CandidatePair p{{"L", rng() % 8, len}, {std::string(1, static_cast<char>('p' + rng() % 3)), rng() % 8, len}};
        p.score = score(rng);
        const auto key = PairKey::of(p);
        if (std::none_of(out.begin(), out.end(), [&](const CandidatePair& q) { return PairKey::of(q) == key; }))
            out.push_back(p);
    }
    return out;
}

/// Skill set with random skills, archived source trajectories, sampled pairs
/// and executions. Initial states come from a small vocabulary so that
/// relevance ties occur.
inline SkillSet random_skill_set(std::mt19937_64& rng, std::size_t n_skills) {
    static const std::vector<std::string> states{"You are in the kitchen.", "You are in the hallway.",
                                                 "The stove is on.", "A door leads north.", "You see a thermometer."};
    SkillSet set;
    const auto& t0 = set.archive(random_trajectory(rng, "t0", 6));
    const auto& t1 = set.archive(random_trajectory(rng, "t1", 6));
    for (std::size_t i = 0; i < n_skills; ++i) {
        Skill s;
        s.id = SkillId{i + 1};
        s.name = "skill " + std::to_string(rng() % 1000);
        s.subgoal = "subgoal " + std::to_string(i) + " " + std::to_string(rng() % 97);
        for (std::size_t k = 0, n = 1 + rng() % 4; k < n; ++k) s.instructions.push_back("step " + std::to_string(rng() % 50));
        s.source_pair = CandidatePair{{t0.id, rng() % 4, 2}, {t1.id, rng() % 4, 2}, 0.25 * (rng() % 4),
                                      0.125 * (rng() % 8), static_cast<double>(rng() % 30) / 7.0, 1.0 / (1 + rng() % 9)};
        s.initial_state_embeddings = {test_embed(states[rng() % states.size()]),
                                      test_embed(states[rng() % states.size()])};
        s.created_iteration = rng() % 4;
        s.executed_count = rng() % 5;
        s.observed_value = static_cast<double>(rng() % 1000) / 3.0;
        set.add_skill(std::move(s));
    }
    std::vector<CandidatePair> sampled;
    for (const auto& [id, s] : set.skills()) sampled.push_back(s.source_pair);
    set.add_sampled_pairs(sampled);
    set.set_iteration(rng() % 20);
    return set;
}

/// Temporary directory removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("sso-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Chat client that plays back fixed replies in order and keeps every request.
class ScriptedChat final : public ChatClient {
public:
    explicit ScriptedChat(std::vector<std::string> replies) : replies_(std::move(replies)) {}

    std::string chat(const ChatRequest& request) override {
        requests.push_back(request);
        if (next_ >= replies_.size()) throw TransportError("scripted chat ran out of replies");
        return replies_[next_++];
    }

    std::vector<ChatRequest> requests;

private:
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace sso::testing
