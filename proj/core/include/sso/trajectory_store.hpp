#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sso/core.hpp"

namespace sso {

/// Append-only archive of completed trajectories.
///
/// Stored trajectories are shared immutable values, so copies of the store
/// and references handed out by `get` stay valid and unchanged while more
/// trajectories are appended.
class TrajectoryStore {
public:
    /// Validates and appends. Throws ContractError on an empty trajectory or a
    /// duplicate id.
    const Trajectory& add(Trajectory traj);

    const Trajectory& get(const std::string& id) const;
    bool contains(const std::string& id) const;

    std::size_t size() const { return order_.size(); }
    bool empty() const { return order_.empty(); }

    /// Trajectories in insertion order.
    std::vector<const Trajectory*> all() const;
    /// The `n` most recent trajectories, oldest first.
    std::vector<const Trajectory*> last(std::size_t n) const;

    friend bool operator==(const TrajectoryStore& x, const TrajectoryStore& y);

private:
    std::vector<std::shared_ptr<const Trajectory>> order_;
    std::map<std::string, std::shared_ptr<const Trajectory>, std::less<>> by_id_;
};

/// States s_start .. s_start+L; the last one is the next step's observation
/// or the terminal observation.
std::vector<std::string> subtraj_states(const SubtrajRef& ref, const TrajectoryStore& store);
/// Actions a_start .. a_start+L-1.
std::vector<std::string> subtraj_actions(const SubtrajRef& ref, const TrajectoryStore& store);

/// Throws ContractError if the ref does not fit its trajectory or its length
/// is outside [min_len, max_len].
void validate_ref(const SubtrajRef& ref, const Trajectory& traj, const SSOConfig& config);

void to_json(nlohmann::json& j, const Step& s);
void from_json(const nlohmann::json& j, Step& s);
void to_json(nlohmann::json& j, const Trajectory& t);
void from_json(const nlohmann::json& j, Trajectory& t);

/// One JSON object per line: {id, steps:[...], terminal_observation}.
void write_trajectories_jsonl(const std::filesystem::path& path,
                              std::span<const Trajectory* const> trajs);
std::vector<Trajectory> read_trajectories_jsonl(const std::filesystem::path& path);

}  // namespace sso
