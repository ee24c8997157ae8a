#include "sso/extract.hpp"

#include <algorithm>
#include <set>

#include "sso/errors.hpp"

namespace sso {

std::vector<SubtrajRef> enumerate_subtrajs(const Trajectory& traj, std::size_t min_len, std::size_t max_len) {
    if (min_len < 1) throw ContractError("min_len must be >= 1");
    std::vector<SubtrajRef> refs;
    const auto steps = traj.steps.size();
    for (std::size_t len = min_len; len <= std::min(max_len, steps); ++len)
        for (std::size_t start = 0; start + len <= steps; ++start) refs.push_back({traj.id, start, len});
    return refs;
}

namespace {

/// Cosines between every state (and every action) of two trajectories.
struct CosineGrid {
    std::size_t state_cols = 0;
    std::size_t action_cols = 0;
    std::vector<double> states;
    std::vector<double> actions;

    CosineGrid(const TrajectoryEmbeddings& x, const TrajectoryEmbeddings& y)
        : state_cols(y.states.size()), action_cols(y.actions.size()) {
        states.reserve(x.states.size() * state_cols);
        for (const auto& sx : x.states)
            for (const auto& sy : y.states) states.push_back(cosine(*sx, *sy));
        actions.reserve(x.actions.size() * action_cols);
        for (const auto& ax : x.actions)
            for (const auto& ay : y.actions) actions.push_back(cosine(*ax, *ay));
    }

    Similarity window(std::size_t x_start, std::size_t y_start, std::size_t len) const {
        Similarity sim;
        for (std::size_t k = 0; k <= len; ++k) sim.state += states[(x_start + k) * state_cols + y_start + k];
        for (std::size_t k = 0; k < len; ++k) sim.action += actions[(x_start + k) * action_cols + y_start + k];
        sim.state /= static_cast<double>(len + 1);
        sim.action /= static_cast<double>(len);
        return sim;
    }

    std::optional<SubtrajMatch> best(const SubtrajRef& target, const Trajectory& past) const {
        if (past.steps.size() < target.length) return std::nullopt;
        std::optional<SubtrajMatch> found;
        for (std::size_t start = 0; start + target.length <= past.steps.size(); ++start) {
            const auto sim = window(target.start, start, target.length);
            if (!found || sim.combined() > found->sim.combined())
                found = SubtrajMatch{{past.id, start, target.length}, sim};
        }
        return found;
    }
};

}  // namespace

std::optional<SubtrajMatch> most_similar_subtraj(const SubtrajRef& target, const Trajectory& past,
                                                 const TrajectoryStore& store, EmbeddingCache& cache) {
    const auto& source = store.get(target.trajectory_id);
    if (target.length == 0 || target.end() > source.steps.size())
        throw ContractError("target subtrajectory exceeds its trajectory");
    const CosineGrid grid(TrajectoryEmbeddings::of(source, cache), TrajectoryEmbeddings::of(past, cache));
    return grid.best(target, past);
}

CandidateSet extract_candidates(const Trajectory& latest, std::span<const Trajectory* const> archive,
                                const SSOConfig& config, const TrajectoryStore& store,
                                EmbeddingCache& cache, std::size_t iteration) {
    if (!store.contains(latest.id)) throw ContractError("latest trajectory " + latest.id + " is not archived");
    CandidateSet out;
    out.source_iteration = iteration;
    const auto subtrajs = enumerate_subtrajs(latest, config.min_len, config.max_len);
    if (subtrajs.empty() || archive.empty()) return out;

    const auto latest_emb = TrajectoryEmbeddings::of(latest, cache);
    std::set<std::string> seen;
    for (const auto* past : archive) {
        if (past->id == latest.id || !seen.insert(past->id).second) continue;
        const CosineGrid grid(latest_emb, TrajectoryEmbeddings::of(*past, cache));
        for (const auto& sub : subtrajs) {
            auto match = grid.best(sub, *past);
            if (!match) continue;
            CandidatePair pair;
            pair.a = sub;
            pair.b = match->ref;
            pair.state_sim = match->sim.state;
            pair.action_sim = match->sim.action;
            pair.reward_value = 0.5 * (discounted_return(latest, sub.start, config.gamma) +
                                       discounted_return(*past, match->ref.start, config.gamma));
            out.pairs.push_back(std::move(pair));
        }
    }
    std::sort(out.pairs.begin(), out.pairs.end(), [](const CandidatePair& x, const CandidatePair& y) {
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    return out;
}

}  // namespace sso
