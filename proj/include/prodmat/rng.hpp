#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace prodmat {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic stream of draws: the same (seed, stream_id) reproduces the
// draws bit for bit, distinct stream_ids give decorrelated streams. Normals
// come from an explicit Box-Muller so results never depend on library
// internals.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() { return eng_(); }
    double uniform();                       // [0, 1)
    double normal();                        // N(0, 1)
    std::complex<double> complex_normal();  // standard complex Gaussian, E|g|^2 = 1

  private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// One stream per replica, stream_id = replica index, independent of how many
// workers later consume them.
std::vector<RngStream> seed_plan(std::uint64_t master_seed, std::size_t replicas);

}  // namespace prodmat
