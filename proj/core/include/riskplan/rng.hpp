#pragma once

#include <cstdint>
#include <vector>

namespace riskplan {

// Counter-based generator: every draw is a pure function of (key, counter),
// so streams are reproducible across platforms and independent of execution
// order. The mixer is splitmix64.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (mix64(b) + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    int next_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

    // Samples an index from an (unnormalized is tolerated) discrete distribution.
    int sample(const std::vector<double>& probs) {
        double total = 0.0;
        for (double p : probs) total += p;
        double u = next_double() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size()) - 1;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace riskplan
