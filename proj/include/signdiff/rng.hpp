#pragma once

#include <cstdint>
#include <vector>

namespace signdiff {

// Counter-based generator: every draw is a finalizer hash of (key, counter).
// Streams split without sharing state, and any draw can be replayed from the
// recorded seed alone. Layout of draws is independent of call-site order as
// long as callers split a fresh stream per logical unit.
class CounterRng {
  public:
    CounterRng() : CounterRng(0) {}
    explicit CounterRng(uint64_t seed, uint64_t stream = 0)
        : key_(mix(seed + 0x9e3779b97f4a7c15ULL) ^ mix(stream + 0xd1b54a32d192ed03ULL)) {}

    // Derives an independent stream; the parent is not advanced.
    CounterRng split(uint64_t tag) const {
        CounterRng r;
        r.key_ = mix(key_ + mix(tag + 0x8cb92ba72f3d8dd7ULL));
        r.counter_ = 0;
        return r;
    }

    uint64_t next_u64() {
        counter_ += 0x9e3779b97f4a7c15ULL;
        return mix(key_ ^ counter_);
    }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [0, n), unbiased via rejection.
    uint64_t next_below(uint64_t n) {
        if (n <= 1) {
            return 0;
        }
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            const uint64_t r = next_u64();
            if (r >= threshold) {
                return r % n;
            }
        }
    }

    // Uniform in [lo, hi).
    double next_range(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Stateless hash usable for order-independent tie-breaking.
    static uint64_t hash(uint64_t seed, uint64_t value) {
        return mix(mix(seed + 0x9e3779b97f4a7c15ULL) ^ (value + 0xd1b54a32d192ed03ULL));
    }

  private:
    static uint64_t mix(uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    uint64_t key_ = 0;
    uint64_t counter_ = 0;
};

}  // namespace signdiff
