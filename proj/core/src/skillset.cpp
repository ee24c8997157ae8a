#include "sso/skillset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "sso/errors.hpp"
#include "sso/text.hpp"

namespace sso {

SkillSet::SkillSet(SSOConfig config) : config_(config) { config_.validate(); }

SkillId SkillSet::add_skill(SkillDraft draft, EmbeddingCache& cache, std::size_t created_iteration) {
    if (draft.instructions.empty()) throw ContractError("skill draft has no instructions");
    const std::vector<std::string> firsts{subtraj_states(draft.source_pair.a, trajectories_).front(),
                                         subtraj_states(draft.source_pair.b, trajectories_).front()};
    Skill skill;
    skill.id = SkillId{next_id_};
    skill.name = std::move(draft.name);
    skill.subgoal = std::move(draft.subgoal);
    skill.instructions = std::move(draft.instructions);
    skill.source_pair = std::move(draft.source_pair);
    for (const auto& e : cache.get_batch(firsts)) skill.initial_state_embeddings.push_back(*e);
    skill.created_iteration = created_iteration;
    return add_skill(std::move(skill));
}

SkillId SkillSet::add_skill(Skill skill) {
    if (skills_.contains(skill.id)) throw ContractError("duplicate skill id " + skill.id.str());
    if (skill.initial_state_embeddings.empty()) throw ContractError("skill has no initial state embeddings");
    const auto norm = text::normalize_subgoal(skill.subgoal);
    for (const auto& [id, s] : skills_)
        if (text::normalize_subgoal(s.subgoal) == norm)
            throw ContractError("subgoal already live in " + id.str() + ": " + skill.subgoal);
    const auto id = skill.id;
    next_id_ = std::max(next_id_, id.value + 1);
    add_sampled_pairs(std::span<const CandidatePair>(&skill.source_pair, 1));
    skills_.emplace(id, std::move(skill));
    ++epoch_;
    return id;
}

void SkillSet::remove(SkillId id) {
    if (skills_.erase(id)) ++epoch_;
}

const Skill* SkillSet::find(SkillId id) const {
    auto it = skills_.find(id);
    return it == skills_.end() ? nullptr : &it->second;
}

std::vector<std::string> SkillSet::live_subgoals() const {
    std::vector<std::string> out;
    for (const auto& [id, s] : skills_) out.push_back(s.subgoal);
    return out;
}

std::map<PairKey, SkillId> SkillSet::live_pair_index() const {
    std::map<PairKey, SkillId> out;
    for (const auto& [id, s] : skills_) out.emplace(PairKey::of(s.source_pair), id);
    return out;
}

std::vector<RetrievedSkill> SkillSet::retrieve(const std::string& state_text, std::size_t k,
                                               EmbeddingCache& cache) const {
    if (skills_.empty() || k == 0) return {};
    const auto query = cache.get(state_text);
    std::vector<RetrievedSkill> ranked;
    ranked.reserve(skills_.size());
    for (const auto& [id, s] : skills_) {
        double best = -1.0;
        for (const auto& e : s.initial_state_embeddings) best = std::max(best, cosine(e, *query));
        ranked.push_back({&s, best});
    }
    const auto n = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n), ranked.end(),
                      [](const RetrievedSkill& x, const RetrievedSkill& y) {
                          if (x.relevance != y.relevance) return x.relevance > y.relevance;
                          if (x.skill->created_iteration != y.skill->created_iteration)
                              return x.skill->created_iteration < y.skill->created_iteration;
                          return x.skill->id < y.skill->id;
                      });
    ranked.resize(n);
    return ranked;
}

std::optional<double> SkillSet::record_execution(SkillId id, const Trajectory& traj, std::size_t t, double gamma) {
    auto it = skills_.find(id);
    if (it == skills_.end()) {
        spdlog::debug("self-reported skill {} is not live; no credit recorded", id.str());
        return std::nullopt;
    }
    const double ret = discounted_return(traj, t, gamma);
    it->second.observed_value += ret;
    it->second.executed_count += 1;
    ++epoch_;
    return it->second.observed_value;
}

RefineResult SkillSet::refine(const Trajectory& traj) {
    RefineResult result;
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        const auto& reported = traj.steps[t].self_reported_skill;
        if (!reported) continue;
        const auto value = record_execution(*reported, traj, t, config_.gamma);
        if (!value) continue;
        result.executions.emplace_back(*reported, t);
        if (*value <= config_.epsilon) {
            remove(*reported);
            result.pruned.push_back(*reported);
        }
    }
    return result;
}

const Trajectory& SkillSet::archive(Trajectory traj) {
    ++epoch_;
    return trajectories_.add(std::move(traj));
}

void SkillSet::add_sampled_pairs(std::span<const CandidatePair> pairs) {
    for (const auto& p : pairs) {
        if (sampled_index_.emplace(PairKey::of(p), sampled_pairs_.size()).second) {
            sampled_pairs_.push_back(p);
            ++epoch_;
        }
    }
}

bool SkillSet::was_sampled(const CandidatePair& pair) const { return sampled_index_.contains(PairKey::of(pair)); }

void SkillSet::set_iteration(std::size_t it) {
    iteration_ = it;
    ++epoch_;
}

bool operator==(const SkillSet& x, const SkillSet& y) {
    return x.config_ == y.config_ && x.skills_ == y.skills_ && x.trajectories_ == y.trajectories_ &&
           x.sampled_pairs_ == y.sampled_pairs_ && x.iteration_ == y.iteration_ && x.next_id_ == y.next_id_;
}

// Persistence --------------------------------------------------------------

void to_json(nlohmann::json& j, const SubtrajRef& r) {
    j = {{"trajectory_id", r.trajectory_id}, {"start", r.start}, {"length", r.length}};
}

void to_json(nlohmann::json& j, const CandidatePair& p) {
    j = {{"a", p.a},
         {"b", p.b},
         {"state_sim", p.state_sim},
         {"action_sim", p.action_sim},
         {"reward_value", p.reward_value},
         {"score", p.score}};
}

namespace {

/// Field access that reports the JSON path of the first bad field.
class Field {
public:
    Field(const nlohmann::json& j, std::string path) : j_(&j), path_(std::move(path)) {}

    Field operator[](const std::string& key) const {
        const auto sub = path_.empty() ? key : path_ + "." + key;
        if (!j_->is_object()) throw LoadError(path_ + ": expected an object");
        auto it = j_->find(key);
        if (it == j_->end()) throw LoadError(sub + ": missing");
        return Field(*it, sub);
    }

    Field operator[](std::size_t i) const { return Field(j_->at(i), path_ + "[" + std::to_string(i) + "]"); }

    std::size_t size() const {
        if (!j_->is_array()) throw LoadError(path_ + ": expected an array");
        return j_->size();
    }

    template <typename T>
    T as() const {
        try {
            return j_->get<T>();
        } catch (const nlohmann::json::exception&) {
            throw LoadError(path_ + ": wrong type");
        }
    }

    const nlohmann::json& raw() const { return *j_; }
    const std::string& path() const { return path_; }

private:
    const nlohmann::json* j_;
    std::string path_;
};

SubtrajRef read_ref(const Field& f) {
    return {f["trajectory_id"].as<std::string>(), f["start"].as<std::size_t>(), f["length"].as<std::size_t>()};
}

CandidatePair read_pair(const Field& f) {
    CandidatePair p;
    p.a = read_ref(f["a"]);
    p.b = read_ref(f["b"]);
    p.state_sim = f["state_sim"].as<double>();
    p.action_sim = f["action_sim"].as<double>();
    p.reward_value = f["reward_value"].as<double>();
    p.score = f["score"].as<double>();
    return p;
}

std::filesystem::path archive_path_for(const std::filesystem::path& path) {
    return path.parent_path() / (path.stem().string() + ".trajectories.jsonl");
}

}  // namespace

void SkillSet::save(const std::filesystem::path& path) const {
    const auto archive = archive_path_for(path);
    nlohmann::json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["config"] = config_;
    doc["iteration"] = iteration_;
    doc["next_skill_id"] = next_id_;
    doc["trajectory_archive"] = archive.filename().string();
    auto& skills = doc["skills"] = nlohmann::json::array();
    for (const auto& [id, s] : skills_) {
        nlohmann::json emb = nlohmann::json::array();
        for (const auto& e : s.initial_state_embeddings)
            emb.push_back(std::vector<double>(e.values().begin(), e.values().end()));
        skills.push_back({{"id", id.str()},
                          {"name", s.name},
                          {"subgoal", s.subgoal},
                          {"instructions", s.instructions},
                          {"source_pair", s.source_pair},
                          {"initial_state_embeddings", std::move(emb)},
                          {"created_iteration", s.created_iteration},
                          {"executed_count", s.executed_count},
                          {"observed_value", s.observed_value}});
    }
    doc["sampled_pairs"] = sampled_pairs_;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write skill set " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw Error("write failed: " + path.string());
    write_trajectories_jsonl(archive, trajectories_.all());
}

SkillSet SkillSet::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open skill set " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
    const Field root(doc, "");
    const auto version = root["schema_version"].as<int>();
    if (version != kSchemaVersion) throw LoadError("schema_version: unsupported value " + std::to_string(version));

    SSOConfig config;
    try {
        config = root["config"].raw().get<SSOConfig>();
        config.validate();
    } catch (const ConfigError& e) {
        throw LoadError(std::string("config: ") + e.what());
    }
    SkillSet set(config);
    set.iteration_ = root["iteration"].as<std::size_t>();

    const auto archive_name = root["trajectory_archive"].as<std::string>();
    const auto archive = path.parent_path() / archive_name;
    if (std::filesystem::exists(archive))
        for (auto& t : read_trajectories_jsonl(archive)) set.trajectories_.add(std::move(t));
    else
        throw LoadError("trajectory_archive: file not found: " + archive.string());

    const auto pairs = root["sampled_pairs"];
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto p = read_pair(pairs[i]);
        set.add_sampled_pairs(std::span<const CandidatePair>(&p, 1));
    }

    const auto skills = root["skills"];
    for (std::size_t i = 0; i < skills.size(); ++i) {
        const auto f = skills[i];
        Skill s;
        const auto id_text = f["id"].as<std::string>();
        const auto id = SkillId::parse(id_text);
        if (!id) throw LoadError(f.path() + ".id: not a skill id: " + id_text);
        s.id = *id;
        s.name = f["name"].as<std::string>();
        s.subgoal = f["subgoal"].as<std::string>();
        s.instructions = f["instructions"].as<std::vector<std::string>>();
        if (s.instructions.empty()) throw LoadError(f.path() + ".instructions: empty");
        s.source_pair = read_pair(f["source_pair"]);
        const auto embs = f["initial_state_embeddings"];
        for (std::size_t e = 0; e < embs.size(); ++e) {
            try {
                s.initial_state_embeddings.emplace_back(embs[e].as<std::vector<double>>());
            } catch (const ContractError& err) {
                throw LoadError(embs[e].path() + ": " + err.what());
            }
        }
        s.created_iteration = f["created_iteration"].as<std::size_t>();
        s.executed_count = f["executed_count"].as<std::size_t>();
        s.observed_value = f["observed_value"].as<double>();
        try {
            set.add_skill(std::move(s));
        } catch (const ContractError& err) {
            throw LoadError(f.path() + ": " + err.what());
        }
    }
    set.next_id_ = std::max(set.next_id_, root["next_skill_id"].as<std::uint64_t>());
    set.epoch_ = 0;
    return set;
}

std::string SkillSet::export_markdown() const {
    std::ostringstream out;
    out << "# Skill set (iteration " << iteration_ << ", " << skills_.size() << " skills)\n";
    for (const auto& [id, s] : skills_) {
        out << "\n## " << id.str() << ": " << s.subgoal << "\n\n";
        out << "- name: " << s.name << "\n";
        out << "- created at iteration " << s.created_iteration << ", executed " << s.executed_count
            << " times, observed value " << s.observed_value << "\n\n";
        for (std::size_t i = 0; i < s.instructions.size(); ++i)
            out << i + 1 << ". " << s.instructions[i] << "\n";
    }
    return out.str();
}

}  // namespace sso
