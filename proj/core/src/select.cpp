#include "sso/select.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <unordered_map>

namespace sso {

double score_pair(const CandidatePair& p, const SSOConfig& config) {
    return config.w_state * p.state_sim + config.w_action * p.action_sim +
           config.w_reward * p.reward_value + config.w_length * static_cast<double>(p.length());
}

void score_all(std::span<CandidatePair> pairs, const SSOConfig& config) {
    for (auto& p : pairs) p.score = score_pair(p, config);
}

namespace {

class Bitset {
public:
    explicit Bitset(std::size_t bits = 0) : words_((bits + 63) / 64, 0) {}

    void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
    bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }

    Bitset& operator|=(const Bitset& o) {
        for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= o.words_[w];
        return *this;
    }

    /// Complement restricted to bit positions strictly greater than `pos`.
    std::vector<std::uint64_t> free_after(std::size_t pos, std::size_t bits) const {
        std::vector<std::uint64_t> out(words_.size(), 0);
        for (std::size_t w = 0; w < words_.size(); ++w) out[w] = ~words_[w];
        const std::size_t first = pos + 1;
        for (std::size_t w = 0; w < first / 64 && w < out.size(); ++w) out[w] = 0;
        if (first / 64 < out.size() && first % 64) out[first / 64] &= ~std::uint64_t{0} << (first % 64);
        if (bits % 64 && !out.empty()) out.back() &= (std::uint64_t{1} << (bits % 64)) - 1;
        return out;
    }

private:
    std::vector<std::uint64_t> words_;
};

struct WordsHash {
    std::size_t operator()(const std::vector<std::uint64_t>& words) const noexcept {
        std::uint64_t h = 1469598103934665603ULL;
        for (auto w : words) {
            h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

struct BeamState {
    std::vector<std::size_t> members;  // positions in rank order
    double total = 0.0;
    std::ptrdiff_t last = -1;
    Bitset blocked;
};

bool ranks_before(const CandidatePair& x, const CandidatePair& y) {
    if (x.score != y.score) return x.score > y.score;
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
}

}  // namespace

SelectionState sample_skill_pairs(std::span<const CandidatePair> candidates,
                                  std::span<const CandidatePair> carryover, const SSOConfig& config) {
    std::vector<CandidatePair> pool;
    {
        std::map<PairKey, bool> seen;
        for (auto src : {carryover, candidates})
            for (const auto& p : src)
                if (p.score > 0.0 && seen.emplace(PairKey::of(p), true).second) pool.push_back(p);
    }
    std::sort(pool.begin(), pool.end(), ranks_before);
    const std::size_t n = pool.size();
    SelectionState best;
    if (n == 0) return best;

    std::vector<Bitset> conflicts(n, Bitset(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            if (overlaps(pool[i], pool[j])) {
                conflicts[i].set(j);
                conflicts[j].set(i);
            }

    const std::size_t width = std::max<std::size_t>(1, config.beam_width);
    std::vector<BeamState> beam{BeamState{{}, 0.0, -1, Bitset(n)}};
    std::optional<BeamState> top;

    while (!beam.empty()) {
        std::vector<BeamState> children;
        std::unordered_map<std::vector<std::uint64_t>, std::size_t, WordsHash> by_future;
        for (const auto& state : beam) {
            for (std::size_t pos = static_cast<std::size_t>(state.last + 1); pos < n; ++pos) {
                if (state.blocked.test(pos)) continue;
                BeamState child;
                child.total = state.total + pool[pos].score;
                child.blocked = state.blocked;
                child.blocked |= conflicts[pos];
                auto key = child.blocked.free_after(pos, n);
                auto [it, fresh] = by_future.try_emplace(std::move(key), children.size());
                if (!fresh && !(child.total > children[it->second].total)) continue;
                child.members = state.members;
                child.members.push_back(pos);
                child.last = static_cast<std::ptrdiff_t>(pos);
                if (fresh)
                    children.push_back(std::move(child));
                else
                    children[it->second] = std::move(child);
            }
        }
        std::stable_sort(children.begin(), children.end(), [](const BeamState& x, const BeamState& y) {
            if (x.total != y.total) return x.total > y.total;
            return x.members < y.members;
        });
        if (children.size() > width) children.resize(width);
        if (!children.empty() && (!top || children.front().total > top->total)) top = children.front();
        beam = std::move(children);
    }

    if (top) {
        for (auto pos : top->members) {
            best.chosen.push_back(pool[pos]);
            best.total_score += pool[pos].score;
        }
    }
    return best;
}

SelectionPartition partition_selection(const SelectionState& selection,
                                       const std::map<PairKey, SkillId>& existing_skill_pairs) {
    SelectionPartition out;
    for (const auto& p : selection.chosen) {
        if (auto it = existing_skill_pairs.find(PairKey::of(p)); it != existing_skill_pairs.end())
            out.retained.emplace_back(p, it->second);
        else
            out.new_pairs.push_back(p);
    }
    return out;
}

}  // namespace sso
