#pragma once

#include <cstdint>
#include <string_view>

namespace wakesteer {

// Counter-based random stream. A (seed, label) pair fixes the key; every
// draw consumes one counter value, so the full generator state is the pair
// (key, counter) and checkpointing reduces to storing the counter.
class StreamRng {
public:
    StreamRng(std::uint64_t seed, std::string_view label)
        : key_(derive_key(seed, label)) {}

    std::uint64_t next_u64() { return mix(key_ + golden * ++counter_); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal; consumes exactly two counter values
    double normal();

    std::uint64_t counter() const { return counter_; }
    void set_counter(std::uint64_t c) { counter_ = c; }
    std::uint64_t key() const { return key_; }

private:
    static constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ull;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static std::uint64_t derive_key(std::uint64_t seed, std::string_view label) {
        // FNV-1a over the label, folded with the mixed seed
        std::uint64_t h = 0xCBF29CE484222325ull;
        for (char c : label) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001B3ull;
        }
        return mix(h ^ mix(seed + golden));
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace wakesteer
