#pragma once

// Straightforward re-implementations used as references by the property and
// acceptance tests. They favour obviousness over speed.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <cstdint>
#include <tuple>
#include <utility>
#include <vector>

#include "sso/core.hpp"
#include "sso/embedding.hpp"
#include "sso/skillset.hpp"

namespace sso::oracle {

/// sum_{i} r[t+i] * gamma^i with an explicit power per term.
inline double discounted_return(const std::vector<double>& rewards, std::size_t t, double gamma) {
    double total = 0.0;
    for (std::size_t i = 0; t + i < rewards.size(); ++i) total += rewards[t + i] * std::pow(gamma, static_cast<double>(i));
    return total;
}

inline std::vector<double> rewards_of(const Trajectory& t) {
    std::vector<double> r;
    for (const auto& s : t.steps) r.push_back(s.reward);
    return r;
}

inline double plain_cosine(std::span<const double> a, std::span<const double> b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

/// Cells are (trajectory id, action index).
inline std::set<std::pair<std::string, std::size_t>> cells(const CandidatePair& p) {
    std::set<std::pair<std::string, std::size_t>> out;
    for (const auto* r : {&p.a, &p.b})
        for (std::size_t i = r->start; i < r->start + r->length; ++i) out.emplace(r->trajectory_id, i);
    return out;
}

inline bool cells_overlap(const CandidatePair& p, const CandidatePair& q) {
    const auto x = cells(p);
    for (const auto& c : cells(q))
        if (x.contains(c)) return true;
    return false;
}

/// Every candidate pair by brute force: each window of `latest` against each
/// same-length window of each other trajectory, keeping the first strict
/// maximum of (state mean + action mean) / 2.
inline std::vector<CandidatePair> extract(const Trajectory& latest, const std::vector<const Trajectory*>& archive,
                                          const SSOConfig& config, EmbeddingCache& cache) {
    auto states_of = [&](const Trajectory& t) {
        std::vector<EmbeddingPtr> v;
        for (const auto& s : t.steps) v.push_back(cache.get(s.observation));
        v.push_back(cache.get(t.terminal_observation));
        return v;
    };
    auto actions_of = [&](const Trajectory& t) {
        std::vector<EmbeddingPtr> v;
        for (const auto& s : t.steps) v.push_back(cache.get(s.action));
        return v;
    };
    const auto ls = states_of(latest);
    const auto la = actions_of(latest);
    std::vector<CandidatePair> out;
    std::set<std::string> done;
    for (const auto* past : archive) {
        if (past->id == latest.id || done.contains(past->id)) continue;
        done.insert(past->id);
        const auto ps = states_of(*past);
        const auto pa = actions_of(*past);
        for (std::size_t len = config.min_len; len <= config.max_len; ++len) {
            for (std::size_t s = 0; s + len <= latest.steps.size(); ++s) {
                std::optional<std::tuple<double, std::size_t, double, double>> best;
                for (std::size_t q = 0; q + len <= past->steps.size(); ++q) {
                    double st = 0, ac = 0;
                    for (std::size_t k = 0; k <= len; ++k) st += cosine(*ls[s + k], *ps[q + k]);
                    for (std::size_t k = 0; k < len; ++k) ac += cosine(*la[s + k], *pa[q + k]);
                    st /= static_cast<double>(len + 1);
                    ac /= static_cast<double>(len);
                    const double combined = 0.5 * (st + ac);
                    if (!best || combined > std::get<0>(*best)) best = std::make_tuple(combined, q, st, ac);
                }
                if (!best) continue;
                CandidatePair p;
                p.a = {latest.id, s, len};
                p.b = {past->id, std::get<1>(*best), len};
                p.state_sim = std::get<2>(*best);
                p.action_sim = std::get<3>(*best);
                p.reward_value = 0.5 * (discounted_return(rewards_of(latest), s, config.gamma) +
                                        discounted_return(rewards_of(*past), p.b.start, config.gamma));
                out.push_back(p);
            }
        }
    }
    std::sort(out.begin(), out.end(),
              [](const CandidatePair& x, const CandidatePair& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
    return out;
}

/// Maximum total score over all pairwise non-overlapping subsets.
inline double best_subset_score(const std::vector<CandidatePair>& pairs) {
    const std::size_t n = pairs.size();
    double best = 0.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        double total = 0.0;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            if (!(mask >> i & 1U)) continue;
            for (std::size_t j = i + 1; j < n && ok; ++j)
                if ((mask >> j & 1U) && cells_overlap(pairs[i], pairs[j])) ok = false;
            total += pairs[i].score;
        }
        if (ok) best = std::max(best, total);
    }
    return best;
}

/// Take positive pairs in (score desc, a, b) order whenever they fit.
inline std::vector<CandidatePair> greedy(std::vector<CandidatePair> pairs) {
    std::sort(pairs.begin(), pairs.end(), [](const CandidatePair& x, const CandidatePair& y) {
        if (x.score != y.score) return x.score > y.score;
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    std::vector<CandidatePair> chosen;
    for (const auto& p : pairs) {
        if (p.score <= 0.0) continue;
        if (std::none_of(chosen.begin(), chosen.end(), [&](const CandidatePair& c) { return cells_overlap(c, p); }))
            chosen.push_back(p);
    }
    return chosen;
}

inline double greedy_total(const std::vector<CandidatePair>& pairs) {
    double t = 0.0;
    for (const auto& p : greedy(pairs)) t += p.score;
    return t;
}

/// Step-by-step replay of the refinement loop over an id -> value table.
struct RefineReplay {
    std::map<SkillId, double> values;
    std::map<SkillId, std::size_t> executions;

    void run(const Trajectory& traj, double gamma, double epsilon) {
        const auto rewards = rewards_of(traj);
        for (std::size_t t = 0; t < traj.steps.size(); ++t) {
            const auto& id = traj.steps[t].self_reported_skill;
            if (!id || !values.contains(*id)) continue;
            values[*id] += discounted_return(rewards, t, gamma);
            executions[*id] += 1;
            if (values[*id] <= epsilon) {
                values.erase(*id);
                executions.erase(*id);
            }
        }
    }
};

/// Full sort of every skill by (relevance desc, created_iteration, id).
inline std::vector<SkillId> retrieve(const SkillSet& set, const Embedding& query, std::size_t k) {
    std::vector<std::tuple<double, std::size_t, SkillId>> all;
    for (const auto& [id, s] : set.skills()) {
        double best = -2.0;
        for (const auto& e : s.initial_state_embeddings)
            best = std::max(best, plain_cosine(e.values(), query.values()));
        all.emplace_back(best, s.created_iteration, id);
    }
    std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
        if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
        return std::tie(std::get<1>(x), std::get<2>(x)) < std::tie(std::get<1>(y), std::get<2>(y));
    });
    std::vector<SkillId> out;
    for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(std::get<2>(all[i]));
    return out;
}

}  // namespace sso::oracle
