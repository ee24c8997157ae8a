#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace sso {

enum class Split { train, test };

std::string to_string(Split s);
Split parse_split(std::string_view s);

struct VariantSpec {
    std::string family;
    std::uint64_t seed = 0;
    Split split = Split::train;

    friend bool operator==(const VariantSpec&, const VariantSpec&) = default;
};

struct EnvObservation {
    std::string text;
    /// Action forms with OBJ / LOC placeholders, as shown to the actor.
    std::vector<std::string> admissible_action_templates;
    /// Concrete actions the environment accepts in this state.
    std::vector<std::string> valid_actions;
    double reward = 0.0;
    bool done = false;
    double score = 0.0;
};

/// Episodic text environment. One instance runs one episode at a time.
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::string family() const = 0;
    /// Starts an episode. Throws ConfigError if `variant.family` is not served
    /// by this environment.
    virtual EnvObservation reset(const VariantSpec& variant) = 0;
    /// Throws ContractError after the episode is done or before reset.
    virtual EnvObservation step(const std::string& action) = 0;
    virtual std::string task_description() const = 0;
    /// Action used when the actor cannot produce one.
    virtual std::string noop_action() const = 0;
};

inline constexpr std::size_t kMaxEpisodeSteps = 40;

/// "minilab" or "minivault". Throws ConfigError for anything else.
std::unique_ptr<Environment> make_environment(std::string_view family);

struct RewardEntry {
    std::string subgoal;
    double reward;
};

/// Subgoal rewards of MiniLab; they sum to 100.
std::vector<RewardEntry> minilab_reward_schedule(const VariantSpec& variant);

/// Substance that a MiniLab variant asks the actor to melt.
std::string minilab_substance(std::uint64_t seed);

/// Serves `env` over the line-delimited JSON protocol until EOF:
///   {"type":"reset","family":F,"seed":N,"split":"train"|"test"}
///   {"type":"step","action":A}
/// Each request gets one reply line
///   {"text","templates","actions","reward","done","score","task","noop"}
/// or {"error": message, "kind": "contract"|"config"|"other"}.
void serve_environment(Environment& env, std::istream& in, std::ostream& out);

/// Client side of serve_environment: runs `argv` as a child process and talks
/// to it over its stdin/stdout.
class SubprocessEnvironment final : public Environment {
public:
    SubprocessEnvironment(std::vector<std::string> argv, std::string family);
    ~SubprocessEnvironment() override;

    SubprocessEnvironment(const SubprocessEnvironment&) = delete;
    SubprocessEnvironment& operator=(const SubprocessEnvironment&) = delete;

    std::string family() const override { return family_; }
    EnvObservation reset(const VariantSpec& variant) override;
    EnvObservation step(const std::string& action) override;
    std::string task_description() const override { return task_; }
    std::string noop_action() const override { return noop_; }

private:
    EnvObservation exchange(const std::string& request_line);

    std::string family_;
    std::string task_;
    std::string noop_ = "wait";
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

}  // namespace sso
