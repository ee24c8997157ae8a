#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sso/core.hpp"
#include "sso/trajectory_store.hpp"

namespace sso {

/// Dense text embedding with a cached L2 norm. Zero or empty vectors are
/// rejected at construction.
class Embedding {
public:
    explicit Embedding(std::vector<double> values);

    std::size_t dim() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    double norm() const { return norm_; }

    friend bool operator==(const Embedding& x, const Embedding& y) { return x.values_ == y.values_; }

private:
    std::vector<double> values_;
    double norm_;
};

using EmbeddingPtr = std::shared_ptr<const Embedding>;

/// dot(a, b) / (|a| |b|), clamped to [-1, 1]. Throws ContractError on a
/// dimension mismatch.
double cosine(const Embedding& a, const Embedding& b);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string model_id() const = 0;
    /// One embedding per input text, in order.
    virtual std::vector<Embedding> embed_batch(std::span<const std::string> texts) = 0;
};

/// Offline embedder: L2-normalized counts of hashed character trigrams.
///
/// Each trigram (or the whole text when it is shorter than three bytes) is
/// hashed with 64-bit FNV-1a whose offset basis is xor-ed with
/// kTestEmbedderSeed; the bucket is hash % dim. Pure function of the bytes.
inline constexpr std::uint64_t kTestEmbedderSeed = 0x9E3779B97F4A7C15ULL;
inline constexpr std::size_t kTestEmbedderDim = 256;

Embedding test_embed(std::string_view text, std::size_t dim = kTestEmbedderDim);

class TestEmbedder final : public EmbeddingProvider {
public:
    explicit TestEmbedder(std::size_t dim = kTestEmbedderDim) : dim_(dim) {}
    std::string model_id() const override;
    std::vector<Embedding> embed_batch(std::span<const std::string> texts) override;

private:
    std::size_t dim_;
};

/// Memoizing front-end for a provider, keyed by (model id, exact text bytes).
///
/// Lookups take a shared lock; provider calls run outside the lock and only
/// the insert is serialized. Can be persisted to a binary sidecar file.
class EmbeddingCache {
public:
    explicit EmbeddingCache(EmbeddingProvider& provider) : provider_(&provider) {}

    EmbeddingPtr get(const std::string& text);
    /// Sends each distinct uncached text to the provider exactly once, in a
    /// single batch.
    std::vector<EmbeddingPtr> get_batch(std::span<const std::string> texts);

    std::size_t size() const;
    std::size_t provider_calls() const { return provider_calls_; }
    std::size_t provider_texts() const { return provider_texts_; }
    const std::string& model_id() const;

    /// Layout: "SSOEMB01", u64 count, then per entry 32 raw SHA-256 bytes of
    /// model id + '\0' + text, u32 dim, dim little-endian f64 values.
    void save(const std::filesystem::path& path) const;
    /// Merges entries from a sidecar written by `save`.
    void load(const std::filesystem::path& path);

private:
    std::string key_for(const std::string& text) const;

    EmbeddingProvider* provider_;
    mutable std::string model_id_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, EmbeddingPtr> entries_;
    std::size_t provider_calls_ = 0;
    std::size_t provider_texts_ = 0;
};

struct Similarity {
    double state = 0.0;
    double action = 0.0;

    /// Equal-weight mean used wherever a single number is needed.
    double combined() const { return 0.5 * (state + action); }
};

/// Positional mean cosine over the L+1 aligned states and the L aligned
/// actions of two same-length subtrajectories.
Similarity subtraj_similarity(const SubtrajRef& a, const SubtrajRef& b,
                              const TrajectoryStore& store, EmbeddingCache& cache);

/// State (steps + terminal) and action embeddings of one trajectory.
struct TrajectoryEmbeddings {
    std::vector<EmbeddingPtr> states;
    std::vector<EmbeddingPtr> actions;

    static TrajectoryEmbeddings of(const Trajectory& traj, EmbeddingCache& cache);
};

}  // namespace sso
