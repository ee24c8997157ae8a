#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "sso/core.hpp"
#include "sso/extract.hpp"

namespace sso {

/// w_state*state_sim + w_action*action_sim + w_reward*reward_value + w_length*L.
double score_pair(const CandidatePair& p, const SSOConfig& config);

/// Writes score_pair into every pair's `score`.
void score_all(std::span<CandidatePair> pairs, const SSOConfig& config);

/// A set of mutually non-overlapping pairs.
struct SelectionState {
    std::vector<CandidatePair> chosen;
    double total_score = 0.0;
};

/// Beam search for a high-scoring non-overlapping subset of
/// candidates ∪ carryover.
///
/// Pairs are ranked by score (descending, ties by member a then b) and only
/// positive-score pairs are considered. A beam state is a feasible set; it is
/// expanded with every later-ranked compatible pair. Children that leave the
/// same remaining options open are merged, keeping the best total, and the
/// `config.beam_width` best children survive each round. The best state seen
/// in any round is returned, members in rank order. Width 1 reproduces the
/// greedy feasible set. Carryover entries win over candidates with the same
/// member refs.
SelectionState sample_skill_pairs(std::span<const CandidatePair> candidates,
                                  std::span<const CandidatePair> carryover, const SSOConfig& config);

struct SelectionPartition {
    /// Selected pairs with no live skill; these go to generation.
    std::vector<CandidatePair> new_pairs;
    /// Selected pairs already backing a live skill.
    std::vector<std::pair<CandidatePair, SkillId>> retained;
};

SelectionPartition partition_selection(const SelectionState& selection,
                                       const std::map<PairKey, SkillId>& existing_skill_pairs);

}  // namespace sso
