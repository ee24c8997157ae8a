#include "sso/trajectory_store.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sso/errors.hpp"

namespace sso {

const Trajectory& TrajectoryStore::add(Trajectory traj) {
    traj.validate();
    if (by_id_.contains(traj.id)) throw ContractError("duplicate trajectory id " + traj.id);
    auto ptr = std::make_shared<const Trajectory>(std::move(traj));
    by_id_.emplace(ptr->id, ptr);
    order_.push_back(ptr);
    return *ptr;
}

const Trajectory& TrajectoryStore::get(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw LookupError("unknown trajectory id " + id);
    return *it->second;
}

bool TrajectoryStore::contains(const std::string& id) const { return by_id_.contains(id); }

std::vector<const Trajectory*> TrajectoryStore::all() const { return last(order_.size()); }

std::vector<const Trajectory*> TrajectoryStore::last(std::size_t n) const {
    n = std::min(n, order_.size());
    std::vector<const Trajectory*> out;
    out.reserve(n);
    for (auto it = order_.end() - static_cast<std::ptrdiff_t>(n); it != order_.end(); ++it)
        out.push_back(it->get());
    return out;
}

bool operator==(const TrajectoryStore& x, const TrajectoryStore& y) {
    if (x.order_.size() != y.order_.size()) return false;
    for (std::size_t i = 0; i < x.order_.size(); ++i)
        if (!(*x.order_[i] == *y.order_[i])) return false;
    return true;
}

namespace {

const Trajectory& checked(const SubtrajRef& ref, const TrajectoryStore& store) {
    const auto& traj = store.get(ref.trajectory_id);
    if (ref.length == 0 || ref.end() > traj.steps.size())
        throw ContractError("subtrajectory [" + std::to_string(ref.start) + ", +" +
                            std::to_string(ref.length) + ") exceeds trajectory " + traj.id +
                            " with " + std::to_string(traj.steps.size()) + " steps");
    return traj;
}

}  // namespace

std::vector<std::string> subtraj_states(const SubtrajRef& ref, const TrajectoryStore& store) {
    const auto& traj = checked(ref, store);
    std::vector<std::string> states;
    states.reserve(ref.length + 1);
    for (std::size_t i = ref.start; i < ref.end(); ++i) states.push_back(traj.steps[i].observation);
    states.push_back(ref.end() < traj.steps.size() ? traj.steps[ref.end()].observation
                                                   : traj.terminal_observation);
    return states;
}

std::vector<std::string> subtraj_actions(const SubtrajRef& ref, const TrajectoryStore& store) {
    const auto& traj = checked(ref, store);
    std::vector<std::string> actions;
    actions.reserve(ref.length);
    for (std::size_t i = ref.start; i < ref.end(); ++i) actions.push_back(traj.steps[i].action);
    return actions;
}

void validate_ref(const SubtrajRef& ref, const Trajectory& traj, const SSOConfig& config) {
    if (ref.trajectory_id != traj.id) throw ContractError("ref does not point at " + traj.id);
    if (ref.length < config.min_len || ref.length > config.max_len)
        throw ContractError("subtrajectory length " + std::to_string(ref.length) +
                            " outside configured bounds");
    if (ref.end() > traj.steps.size()) throw ContractError("subtrajectory exceeds trajectory");
}

void to_json(nlohmann::json& j, const Step& s) {
    j = nlohmann::json{{"observation", s.observation},
                       {"action", s.action},
                       {"reward", s.reward},
                       {"self_reported_skill", nullptr}};
    if (s.self_reported_skill) j["self_reported_skill"] = s.self_reported_skill->str();
}

void from_json(const nlohmann::json& j, Step& s) {
    s.observation = j.at("observation").get<std::string>();
    s.action = j.at("action").get<std::string>();
    s.reward = j.at("reward").get<double>();
    s.self_reported_skill.reset();
    if (auto it = j.find("self_reported_skill"); it != j.end() && !it->is_null()) {
        auto id = SkillId::parse(it->get<std::string>());
        if (!id) throw LoadError("self_reported_skill: not a skill id: " + it->get<std::string>());
        s.self_reported_skill = id;
    }
}

void to_json(nlohmann::json& j, const Trajectory& t) {
    j = nlohmann::json{{"id", t.id}, {"steps", t.steps}, {"terminal_observation", t.terminal_observation}};
}

void from_json(const nlohmann::json& j, Trajectory& t) {
    t.id = j.at("id").get<std::string>();
    t.steps = j.at("steps").get<std::vector<Step>>();
    t.terminal_observation = j.at("terminal_observation").get<std::string>();
}

void write_trajectories_jsonl(const std::filesystem::path& path,
                              std::span<const Trajectory* const> trajs) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto* t : trajs) out << nlohmann::json(*t).dump() << '\n';
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<Trajectory> read_trajectories_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open trajectory archive " + path.string());
    std::vector<Trajectory> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(nlohmann::json::parse(line).get<Trajectory>());
        } catch (const nlohmann::json::exception& e) {
            throw LoadError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const LoadError& e) {
            throw LoadError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace sso
