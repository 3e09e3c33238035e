#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace attnkd {

struct RandomSeed {
    uint64_t value = 0;
};

// Deterministic generator. Distributions are implemented here rather than via
// <random> distributions so streams are identical across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : engine_(seed) {}
    explicit Rng(RandomSeed seed) : engine_(seed.value) {}

    uint64_t next_u64() { return engine_(); }
    double uniform();                               // [0,1)
    float uniform(float lo, float hi);              // [lo,hi)
    double normal();                                // standard normal, Box-Muller
    uint64_t below(uint64_t n);                     // [0,n), rejection sampled
    bool bernoulli(double p) { return uniform() < p; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::string serialize() const;
    static Rng deserialize(const std::string& s);

    friend bool operator==(const Rng& a, const Rng& b) {
        return a.engine_ == b.engine_ && a.has_spare_ == b.has_spare_ && a.spare_ == b.spare_;
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Derives an independent stream seed from a base seed and a tag.
uint64_t derive_seed(uint64_t base, uint64_t tag);
uint64_t derive_seed(uint64_t base, const std::string& tag);

// Process-global generator for callers that do not thread an Rng explicitly.
void seed_all(RandomSeed seed);
Rng& global_rng();

}  // namespace attnkd
