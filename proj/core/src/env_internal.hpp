#pragma once

#include <cstdint>
#include <memory>

#include "sso/env.hpp"

namespace sso::detail {

/// splitmix64; fixed so variants replay identically on every platform.
class VariantRng {
public:
    explicit VariantRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }

private:
    std::uint64_t state_;
};

std::unique_ptr<Environment> make_minilab();
std::unique_ptr<Environment> make_minivault();

}  // namespace sso::detail
