#include <algorithm>
#include <array>
#include <map>
#include <set>

#include "env_internal.hpp"
#include "sso/errors.hpp"
#include "sso/text.hpp"

namespace sso {

namespace {

constexpr std::array<std::string_view, 8> kSubstances{"gallium", "lead",   "tin", "chocolate",
                                                      "butter",  "ice",    "wax", "sodium"};

constexpr std::string_view kUnclear = "It's not clear how to do that.";

struct Room {
    std::string name;
    std::vector<std::string> doors;
    std::vector<std::string> fixtures;
};

// Surfaces that can hold items, and the room each one stands in.
const std::map<std::string, std::string>& surfaces() {
    static const std::map<std::string, std::string> s{
        {"stove", "kitchen"}, {"table", "kitchen"}, {"workbench", "workshop"}, {"shelf", "greenhouse"}};
    return s;
}

class MiniLab final : public Environment {
public:
    std::string family() const override { return "minilab"; }
    std::string noop_action() const override { return "wait"; }

    std::string task_description() const override {
        return "Your task is to measure the melting point of " + substance_ +
               ". First, focus on the thermometer. Then, focus on the " + substance_ +
               ", heat it on the stove, and read the thermometer once the " + substance_ + " has melted.";
    }

    EnvObservation reset(const VariantSpec& variant) override {
        if (variant.family != family()) throw ConfigError("minilab cannot serve family " + variant.family);
        detail::VariantRng rng(variant.seed);
        substance_ = minilab_substance(variant.seed);

        rooms_.clear();
        rooms_["hallway"] = {"hallway", {"kitchen", "workshop", "greenhouse"}, {"coat rack"}};
        rooms_["kitchen"] = {"kitchen", {"hallway"}, {"stove", "table", "sink", "chair"}};
        rooms_["workshop"] = {"workshop", {"hallway"}, {"workbench", "lamp"}};
        rooms_["greenhouse"] = {"greenhouse", {"hallway"}, {"shelf", "flower pot"}};
        static const std::array<std::pair<const char*, const char*>, 3> extra{
            {{"kitchen", "workshop"}, {"workshop", "greenhouse"}, {"kitchen", "greenhouse"}}};
        if (const auto pick = rng.below(4); pick < extra.size()) {
            rooms_[extra[pick].first].doors.push_back(extra[pick].second);
            rooms_[extra[pick].second].doors.push_back(extra[pick].first);
        }
        for (auto& [name, room] : rooms_) std::sort(room.doors.begin(), room.doors.end());

        static const std::array<const char*, 4> starts{"kitchen", "hallway", "workshop", "greenhouse"};
        room_ = starts[rng.below(starts.size())];

        // The task items share the kitchen table; distractors outside the kitchen move around.
        places_.clear();
        places_["thermometer"] = "table";
        places_[substance_] = "table";
        places_["soap"] = "kitchen";
        places_["hammer"] = rng.below(2) == 0 ? "workbench" : "workshop";
        places_["seed packet"] = rng.below(2) == 0 ? "greenhouse" : "shelf";

        stove_on_ = false;
        focus_.clear();
        heat_awarded_ = false;
        heat_steps_ = 0;
        melted_ = false;
        steps_ = 0;
        score_ = 0.0;
        done_ = false;
        live_ = true;
        return observe("You are in the " + room_ + ".", 0.0);
    }

    EnvObservation step(const std::string& raw_action) override {
        if (!live_) throw ContractError("minilab step before reset");
        if (done_) throw ContractError("minilab step after the episode is done");
        ++steps_;
        const auto action = text::collapse_whitespace(text::to_lower(raw_action));
        const auto valid = valid_actions();
        double reward = 0.0;
        std::string feedback;
        if (action != "look around" && action != "wait" && std::find(valid.begin(), valid.end(), action) == valid.end()) {
            feedback = std::string(kUnclear);
        } else {
            feedback = apply(action, reward);
        }

        // Heating rules run after every action.
        if (on_hot_stove(substance_)) {
            if (focus_.contains(substance_) && !heat_awarded_) {
                heat_awarded_ = true;
                reward += 30.0;
                feedback += " The " + substance_ + " begins to heat up.";
            }
            if (++heat_steps_ >= 2 && !melted_) {
                melted_ = true;
                feedback += " The " + substance_ + " melts.";
            }
        }

        score_ += reward;
        if (steps_ >= kMaxEpisodeSteps) done_ = true;
        return observe(feedback, reward);
    }

private:
    bool on_hot_stove(const std::string& item) const { return stove_on_ && places_.at(item) == "stove"; }

    std::string room_of(const std::string& place) const {
        if (auto it = surfaces().find(place); it != surfaces().end()) return it->second;
        return place;
    }

    bool item_visible(const std::string& item) const {
        const auto& place = places_.at(item);
        return place == "inventory" || room_of(place) == room_;
    }

    std::vector<std::string> visible_objects() const {
        std::vector<std::string> out = rooms_.at(room_).fixtures;
        for (const auto& [item, place] : places_)
            if (item_visible(item)) out.push_back(item);
        return out;
    }

    // "look around" and "wait" are always accepted but not listed.
    std::vector<std::string> valid_actions() const {
        std::vector<std::string> out;
        for (const auto& d : rooms_.at(room_).doors) out.push_back("go " + d);
        for (const auto& o : visible_objects()) out.push_back("focus on " + o);
        // Items on a lit stove stay there.
        for (const auto& [item, place] : places_) {
            if (!item_visible(item) || (place == "stove" && stove_on_)) continue;
            for (const auto& [surface, room] : surfaces())
                if (room == room_ && place != surface) out.push_back("move " + item + " to " + surface);
        }
        if (room_ == "kitchen" && !stove_on_) out.push_back("activate stove");
        if (item_visible("thermometer")) out.push_back("read thermometer");
        return out;
    }

    std::string apply(const std::string& action, double& reward) {
        if (action == "look around") return "You look around.";
        if (action == "wait") return "You wait.";
        if (action.rfind("go ", 0) == 0) {
            room_ = action.substr(3);
            return "You move to the " + room_ + ".";
        }
        if (action.rfind("focus on ", 0) == 0) {
            const auto target = action.substr(9);
            if (!focus_.insert(target).second) return "You are already focused on the " + target + ".";
            if (target == "thermometer") reward += 10.0;
            return "You focus on the " + target + ".";
        }
        if (action.rfind("move ", 0) == 0) {
            const auto sep = action.rfind(" to ");
            const auto item = action.substr(5, sep - 5);
            const auto surface = action.substr(sep + 4);
            places_[item] = surface;
            return "You move the " + item + " to the " + surface + ".";
        }
        if (action == "activate stove") {
            stove_on_ = true;
            return "The stove is now activated.";
        }
        if (action == "read thermometer") {
            if (!focus_.contains("thermometer")) return std::string(kUnclear);
            if (melted_ && heat_awarded_) {
                reward += 60.0;
                done_ = true;
                return "The thermometer reads " + std::to_string(melting_point()) + " degrees celsius. You have measured the melting point of " + substance_ + ".";
            }
            return "The thermometer reads " + std::to_string(temperature()) + " degrees celsius.";
        }
        return std::string(kUnclear);
    }

    int melting_point() const {
        static const std::map<std::string, int, std::less<>> mp{{"gallium", 30}, {"lead", 327}, {"tin", 232},
                                                                {"chocolate", 45}, {"butter", 35}, {"ice", 0},
                                                                {"wax", 60},      {"sodium", 98}};
        return mp.at(substance_);
    }

    int temperature() const { return heat_steps_ > 0 ? std::min(10 + 15 * heat_steps_, melting_point()) : 10; }

    std::string describe(const std::string& item) const {
        if (item == "thermometer") return "a thermometer";
        if (item == substance_) return melted_ ? "a substance called liquid " + substance_ : "a substance called " + substance_;
        return "a " + item;
    }

    std::string render_room() const {
        std::vector<std::string> seen{"the agent"};
        for (const auto& f : rooms_.at(room_).fixtures) {
            std::string d = "a " + f;
            if (f == "stove") d += stove_on_ ? " which is turned on" : " which is turned off";
            if (surfaces().contains(f)) {
                std::vector<std::string> on;
                for (const auto& [item, place] : places_)
                    if (place == f) on.push_back(describe(item));
                d += " with " + (on.empty() ? std::string("nothing") : text::join(on, " and ")) + " on it";
            }
            seen.push_back(std::move(d));
        }
        for (const auto& [item, place] : places_)
            if (place == room_) seen.push_back(describe(item));
        std::vector<std::string> doors;
        for (const auto& d : rooms_.at(room_).doors) doors.push_back("a door to the " + d);
        std::vector<std::string> inv;
        for (const auto& [item, place] : places_)
            if (place == "inventory") inv.push_back(describe(item));
        return "This room is called the " + room_ + ". In it, you see: " + text::join(seen, ", ") +
               ". You also see: " + text::join(doors, ", ") + ". In your inventory, you see: " +
               (inv.empty() ? std::string("nothing") : text::join(inv, ", ")) + ".";
    }

    EnvObservation observe(const std::string& feedback, double reward) const {
        EnvObservation obs;
        obs.text = feedback + " " + render_room();
        obs.admissible_action_templates = {"look around", "wait", "go LOC", "focus on OBJ", "move OBJ to OBJ",
                                           "activate OBJ", "read OBJ"};
        if (!done_) obs.valid_actions = valid_actions();
        obs.reward = reward;
        obs.done = done_;
        obs.score = score_;
        return obs;
    }

    std::string substance_;
    std::map<std::string, Room> rooms_;
    std::string room_;
    std::map<std::string, std::string> places_;
    std::set<std::string> focus_;
    bool stove_on_ = false;
    bool heat_awarded_ = false;
    int heat_steps_ = 0;
    bool melted_ = false;
    std::size_t steps_ = 0;
    double score_ = 0.0;
    bool done_ = false;
    bool live_ = false;
};

}  // namespace

std::string minilab_substance(std::uint64_t seed) { return std::string(kSubstances[seed % kSubstances.size()]); }

namespace detail {
std::unique_ptr<Environment> make_minilab() { return std::make_unique<MiniLab>(); }
}  // namespace detail

}  // namespace sso
