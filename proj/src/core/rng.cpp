#include "attnkd/core/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace attnkd {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

float Rng::uniform(float lo, float hi) { return lo + static_cast<float>(uniform()) * (hi - lo); }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

uint64_t Rng::below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
}

std::string Rng::serialize() const {
    std::ostringstream os;
    os << engine_ << ' ' << (has_spare_ ? 1 : 0) << ' ';
    os.precision(17);
    os << std::hexfloat << spare_;
    return os.str();
}

Rng Rng::deserialize(const std::string& s) {
    std::istringstream is(s);
    Rng r;
    int spare_flag = 0;
    std::string spare_text;
    is >> r.engine_ >> spare_flag >> spare_text;
    if (!is && !is.eof()) throw std::runtime_error("malformed rng state");
    r.has_spare_ = spare_flag != 0;
    r.spare_ = std::strtod(spare_text.c_str(), nullptr);
    return r;
}

uint64_t derive_seed(uint64_t base, uint64_t tag) {
    // splitmix64 finalizer over the combined value
    uint64_t z = base + 0x9E3779B97F4A7C15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

uint64_t derive_seed(uint64_t base, const std::string& tag) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : tag) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return derive_seed(base, h);
}

namespace {
Rng& global_instance() {
    static Rng rng(0);
    return rng;
}
}  // namespace

void seed_all(RandomSeed seed) { global_instance() = Rng(seed); }

Rng& global_rng() { return global_instance(); }

}  // namespace attnkd
