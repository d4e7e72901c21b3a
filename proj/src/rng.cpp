#include "prodmat/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace prodmat {

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1));
    std::uint32_t words[8];
    for (int i = 0; i < 4; ++i) {
        std::uint64_t w = splitmix64(s);
        words[2 * i] = static_cast<std::uint32_t>(w);
        words[2 * i + 1] = static_cast<std::uint32_t>(w >> 32);
    }
    std::seed_seq seq(words, words + 8);
    eng_.seed(seq);
}

double RngStream::uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::complex<double> RngStream::complex_normal() {
    const double inv_sqrt2 = 0.70710678118654752440;
    double re = normal();
    double im = normal();
    return {re * inv_sqrt2, im * inv_sqrt2};
}

std::vector<RngStream> seed_plan(std::uint64_t master_seed, std::size_t replicas) {
    if (replicas < 1) throw std::invalid_argument("seed_plan: replicas must be >= 1");
    std::vector<RngStream> plan;
    plan.reserve(replicas);
    for (std::size_t r = 0; r < replicas; ++r) plan.emplace_back(master_seed, r);
    return plan;
}

}  // namespace prodmat
