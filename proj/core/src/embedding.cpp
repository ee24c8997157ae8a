#include "sso/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <unordered_set>

#include "sso/errors.hpp"
#include "sso/text.hpp"

namespace sso {

static_assert(std::endian::native == std::endian::little, "sidecar format assumes little-endian");

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw ContractError("embedding has zero dimensions");
    double sq = 0.0;
    for (double v : values_) {
        if (!std::isfinite(v)) throw ContractError("embedding has a non-finite component");
        sq += v * v;
    }
    norm_ = std::sqrt(sq);
    if (!(norm_ > 0.0)) throw ContractError("embedding has zero norm");
}

double cosine(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim())
        throw ContractError("embedding dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()));
    const auto x = a.values();
    const auto y = b.values();
    double dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
    return std::clamp(dot / (a.norm() * b.norm()), -1.0, 1.0);
}

namespace {

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ kTestEmbedderSeed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

Embedding test_embed(std::string_view text, std::size_t dim) {
    if (text.empty()) throw ContractError("cannot embed empty text");
    if (dim == 0) throw ContractError("embedding dimension must be positive");
    std::vector<double> counts(dim, 0.0);
    if (text.size() < 3) {
        counts[fnv1a(text) % dim] += 1.0;
    } else {
        for (std::size_t i = 0; i + 3 <= text.size(); ++i) counts[fnv1a(text.substr(i, 3)) % dim] += 1.0;
    }
    double sq = 0.0;
    for (double c : counts) sq += c * c;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& c : counts) c *= inv;
    return Embedding(std::move(counts));
}

std::string TestEmbedder::model_id() const { return "test-trigram-" + std::to_string(dim_); }

std::vector<Embedding> TestEmbedder::embed_batch(std::span<const std::string> texts) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(test_embed(t, dim_));
    return out;
}

const std::string& EmbeddingCache::model_id() const {
    if (model_id_.empty()) model_id_ = provider_->model_id();
    return model_id_;
}

std::string EmbeddingCache::key_for(const std::string& text) const {
    std::string material = model_id();
    material.push_back('\0');
    material += text;
    return text::sha256_hex(material);
}

EmbeddingPtr EmbeddingCache::get(const std::string& text) {
    return get_batch(std::span<const std::string>(&text, 1)).front();
}

std::vector<EmbeddingPtr> EmbeddingCache::get_batch(std::span<const std::string> texts) {
    std::vector<std::string> keys;
    keys.reserve(texts.size());
    for (const auto& t : texts) {
        if (t.empty()) throw ContractError("cannot embed empty text");
        keys.push_back(key_for(t));
    }

    std::vector<EmbeddingPtr> out(texts.size());
    std::vector<std::string> missing;
    std::vector<std::string> missing_keys;
    {
        std::shared_lock lock(mutex_);
        std::unordered_set<std::string> queued;
        for (std::size_t i = 0; i < texts.size(); ++i) {
            if (auto it = entries_.find(keys[i]); it != entries_.end()) {
                out[i] = it->second;
            } else if (queued.insert(keys[i]).second) {
                missing.push_back(texts[i]);
                missing_keys.push_back(keys[i]);
            }
        }
    }

    if (!missing.empty()) {
        std::vector<Embedding> fresh;
        try {
            fresh = provider_->embed_batch(missing);
        } catch (const TransportError& e) {
            throw EmbeddingError(std::string("embedding provider failed: ") + e.what());
        }
        if (fresh.size() != missing.size())
            throw EmbeddingError("embedding provider returned " + std::to_string(fresh.size()) +
                                 " vectors for " + std::to_string(missing.size()) + " texts");
        std::unique_lock lock(mutex_);
        ++provider_calls_;
        provider_texts_ += missing.size();
        for (std::size_t i = 0; i < fresh.size(); ++i)
            entries_.try_emplace(missing_keys[i], std::make_shared<const Embedding>(std::move(fresh[i])));
        for (std::size_t i = 0; i < texts.size(); ++i)
            if (!out[i]) out[i] = entries_.at(keys[i]);
    }
    return out;
}

std::size_t EmbeddingCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

namespace {

constexpr char kMagic[8] = {'S', 'S', 'O', 'E', 'M', 'B', '0', '1'};

std::string hex_to_raw(const std::string& hex) {
    std::string raw(hex.size() / 2, '\0');
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = static_cast<char>(std::stoi(hex.substr(2 * i, 2), nullptr, 16));
    return raw;
}

std::string raw_to_hex(const char* raw, std::size_t n) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        auto b = static_cast<unsigned char>(raw[i]);
        out.push_back(kHex[b >> 4]);
        out.push_back(kHex[b & 0xF]);
    }
    return out;
}

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::istream& in, const std::filesystem::path& path) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw LoadError("truncated embedding cache " + path.string());
    return v;
}

}  // namespace

void EmbeddingCache::save(const std::filesystem::path& path) const {
    std::shared_lock lock(mutex_);
    std::vector<std::pair<std::string, EmbeddingPtr>> sorted(entries_.begin(), entries_.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write embedding cache " + path.string());
    out.write(kMagic, sizeof kMagic);
    put<std::uint64_t>(out, sorted.size());
    for (const auto& [key, emb] : sorted) {
        out.write(hex_to_raw(key).data(), 32);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(emb->dim()));
        out.write(reinterpret_cast<const char*>(emb->values().data()),
                  static_cast<std::streamsize>(emb->dim() * sizeof(double)));
    }
    if (!out) throw Error("write failed: " + path.string());
}

void EmbeddingCache::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open embedding cache " + path.string());
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw LoadError("not an embedding cache: " + path.string());
    const auto count = take<std::uint64_t>(in, path);
    std::unique_lock lock(mutex_);
    for (std::uint64_t i = 0; i < count; ++i) {
        char raw[32];
        if (!in.read(raw, sizeof raw)) throw LoadError("truncated embedding cache " + path.string());
        const auto dim = take<std::uint32_t>(in, path);
        std::vector<double> values(dim);
        if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(dim * sizeof(double))))
            throw LoadError("truncated embedding cache " + path.string());
        entries_.try_emplace(raw_to_hex(raw, sizeof raw), std::make_shared<const Embedding>(std::move(values)));
    }
}

Similarity subtraj_similarity(const SubtrajRef& a, const SubtrajRef& b, const TrajectoryStore& store,
                              EmbeddingCache& cache) {
    if (a.length != b.length)
        throw ContractError("subtrajectory length mismatch: " + std::to_string(a.length) + " vs " +
                            std::to_string(b.length));
    const auto sa = cache.get_batch(subtraj_states(a, store));
    const auto sb = cache.get_batch(subtraj_states(b, store));
    const auto aa = cache.get_batch(subtraj_actions(a, store));
    const auto ab = cache.get_batch(subtraj_actions(b, store));

    Similarity sim;
    for (std::size_t i = 0; i < sa.size(); ++i) sim.state += cosine(*sa[i], *sb[i]);
    for (std::size_t i = 0; i < aa.size(); ++i) sim.action += cosine(*aa[i], *ab[i]);
    sim.state /= static_cast<double>(sa.size());
    sim.action /= static_cast<double>(aa.size());
    return sim;
}

TrajectoryEmbeddings TrajectoryEmbeddings::of(const Trajectory& traj, EmbeddingCache& cache) {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    states.reserve(traj.steps.size() + 1);
    actions.reserve(traj.steps.size());
    for (const auto& s : traj.steps) {
        states.push_back(s.observation);
        actions.push_back(s.action);
    }
    states.push_back(traj.terminal_observation);
    return {cache.get_batch(states), cache.get_batch(actions)};
}

}  // namespace sso
