#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sso/core.hpp"
#include "sso/embedding.hpp"
#include "sso/trajectory_store.hpp"

namespace sso {

struct CandidateSet {
    std::vector<CandidatePair> pairs;
    std::size_t source_iteration = 0;
};

/// Every subtrajectory with length in [min_len, max_len], ordered by
/// (length, start). Trajectories shorter than min_len yield nothing.
std::vector<SubtrajRef> enumerate_subtrajs(const Trajectory& traj, std::size_t min_len,
                                           std::size_t max_len);

struct SubtrajMatch {
    SubtrajRef ref;
    Similarity sim;
};

/// Best same-length window of `past` by combined similarity to `target`;
/// ties go to the smallest start. Empty when `past` is too short.
std::optional<SubtrajMatch> most_similar_subtraj(const SubtrajRef& target, const Trajectory& past,
                                                 const TrajectoryStore& store, EmbeddingCache& cache);

/// Pairs each subtrajectory of `latest` with its best match in every archived
/// trajectory. Pairs carry similarities and reward_value (mean discounted
/// return of both members); `score` is left at 0. Output is sorted by (a, b).
CandidateSet extract_candidates(const Trajectory& latest, std::span<const Trajectory* const> archive,
                                const SSOConfig& config, const TrajectoryStore& store,
                                EmbeddingCache& cache, std::size_t iteration = 0);

}  // namespace sso
