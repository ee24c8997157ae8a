#include <algorithm>
#include <array>
#include <cstdlib>

#include "env_internal.hpp"
#include "sso/errors.hpp"
#include "sso/text.hpp"

namespace sso {

namespace {

constexpr int kWidth = 9;
constexpr int kHeight = 5;
constexpr int kWallX = 5;

constexpr std::array<std::string_view, 6> kItems{"amulet", "wand", "ring", "scroll", "gem", "potion"};

struct Pos {
    int x = 0;
    int y = 0;
    friend bool operator==(const Pos&, const Pos&) = default;
};

class MiniVault final : public Environment {
public:
    std::string family() const override { return "minivault"; }
    std::string noop_action() const override { return "y"; }

    std::string task_description() const override {
        return "You are in a vault. Find the key, unlock the door in the wall, and pick up the " + item_ +
               ". Move with k (north), j (south), h (west), l (east). Use , to pick up, a to apply the key "
               "next to the door and y to confirm.";
    }

    EnvObservation reset(const VariantSpec& variant) override {
        if (variant.family != family()) throw ConfigError("minivault cannot serve family " + variant.family);
        detail::VariantRng rng(variant.seed);
        item_ = std::string(kItems[variant.seed % kItems.size()]);
        door_ = {kWallX, static_cast<int>(rng.below(kHeight))};
        agent_ = {static_cast<int>(rng.below(kWallX)), static_cast<int>(rng.below(kHeight))};
        do {
            key_ = {static_cast<int>(rng.below(kWallX)), static_cast<int>(rng.below(kHeight))};
        } while (key_ == agent_);
        item_pos_ = {kWallX + 1 + static_cast<int>(rng.below(kWidth - kWallX - 1)),
                     static_cast<int>(rng.below(kHeight))};
        has_key_ = false;
        unlocked_ = false;
        confirming_ = false;
        steps_ = 0;
        score_ = 0.0;
        done_ = false;
        live_ = true;
        return observe("You enter the vault.", 0.0);
    }

    EnvObservation step(const std::string& raw_action) override {
        if (!live_) throw ContractError("minivault step before reset");
        if (done_) throw ContractError("minivault step after the episode is done");
        ++steps_;
        const auto action = text::trim(raw_action);
        const bool was_confirming = confirming_;
        confirming_ = false;
        double reward = 0.0;
        std::string feedback;
        if (action == "k" || action == "j" || action == "h" || action == "l") {
            feedback = move(action[0]);
        } else if (action == ",") {
            if (!has_key_ && agent_ == key_) {
                has_key_ = true;
                reward = 20.0;
                feedback = "You pick up a key.";
            } else if (agent_ == item_pos_) {
                reward = 50.0;
                done_ = true;
                feedback = "You pick up the " + item_ + ".";
            } else {
                feedback = "There is nothing here to pick up.";
            }
        } else if (action == "a") {
            if (!has_key_) {
                feedback = "You don't have anything to apply.";
            } else if (!unlocked_ && next_to_door()) {
                confirming_ = true;
                feedback = "You apply the key to the door. Unlock it? [yn]";
            } else {
                feedback = "You see no locked door here.";
            }
        } else if (action == "y") {
            if (was_confirming) {
                unlocked_ = true;
                reward = 30.0;
                feedback = "You succeed in unlocking the door.";
            } else {
                feedback = "It's not clear how to do that.";
            }
        } else {
            feedback = "It's not clear how to do that.";
        }
        score_ += reward;
        if (steps_ >= kMaxEpisodeSteps) done_ = true;
        return observe(feedback, reward);
    }

private:
    bool next_to_door() const { return std::abs(agent_.x - door_.x) + std::abs(agent_.y - door_.y) == 1; }

    bool blocked(Pos p) const {
        if (p.x < 0 || p.y < 0 || p.x >= kWidth || p.y >= kHeight) return true;
        if (p.x == kWallX) return !(p == door_ && unlocked_);
        return false;
    }

    std::string move(char c) {
        Pos next = agent_;
        if (c == 'k') --next.y;
        if (c == 'j') ++next.y;
        if (c == 'h') --next.x;
        if (c == 'l') ++next.x;
        if (next == door_ && !unlocked_) return "This door is locked.";
        if (blocked(next)) return "It's solid stone.";
        agent_ = next;
        return "You move.";
    }

    static std::string relative(Pos from, Pos to) {
        if (from == to) return "here";
        std::vector<std::string> parts;
        if (to.y < from.y) parts.push_back(std::to_string(from.y - to.y) + " north");
        if (to.y > from.y) parts.push_back(std::to_string(to.y - from.y) + " south");
        if (to.x > from.x) parts.push_back(std::to_string(to.x - from.x) + " east");
        if (to.x < from.x) parts.push_back(std::to_string(from.x - to.x) + " west");
        return text::join(parts, " and ");
    }

    std::string render() const {
        std::vector<std::string> seen;
        if (!has_key_) seen.push_back("a key " + relative(agent_, key_));
        seen.push_back(std::string(unlocked_ ? "an open door " : "a locked door ") + relative(agent_, door_));
        if (unlocked_ || agent_.x > kWallX) seen.push_back("a " + item_ + " " + relative(agent_, item_pos_));
        std::string out = "You see " + text::join(seen, ", ") + ".";
        out += has_key_ ? " You are carrying a key." : " You are carrying nothing.";
        return out;
    }

    EnvObservation observe(const std::string& feedback, double reward) const {
        EnvObservation obs;
        obs.text = feedback + " " + render();
        obs.admissible_action_templates = {"k", "j", "h", "l", "a", "y", ","};
        if (!done_) obs.valid_actions = obs.admissible_action_templates;
        obs.reward = reward;
        obs.done = done_;
        obs.score = score_;
        return obs;
    }

    std::string item_;
    Pos agent_;
    Pos key_;
    Pos door_;
    Pos item_pos_;
    bool has_key_ = false;
    bool unlocked_ = false;
    bool confirming_ = false;
    std::size_t steps_ = 0;
    double score_ = 0.0;
    bool done_ = false;
    bool live_ = false;
};

}  // namespace

namespace detail {
std::unique_ptr<Environment> make_minivault() { return std::make_unique<MiniVault>(); }
}  // namespace detail

}  // namespace sso
