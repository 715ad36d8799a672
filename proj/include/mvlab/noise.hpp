#ifndef MVLAB_NOISE_HPP
#define MVLAB_NOISE_HPP

#include <cstdint>

namespace mvlab {

// 64-bit avalanche mix (SplitMix64 finalizer).
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based Gaussian source. Stateless per draw: the increment at a given
// (seed, stream, particle, step, component) address is a pure function of the
// address, so results are independent of evaluation order and thread count.
class NoiseStream {
  public:
    explicit NoiseStream(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream), base_(mix64(mix64(seed) ^ stream)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    // Derived stream for a replica / subsystem; collision-resistant in id.
    NoiseStream substream(std::uint64_t id) const {
        return NoiseStream(seed_, mix64(stream_ ^ mix64(id + 0x5851f42d4c957f2dULL)));
    }

    // Uniform on (0,1), open at both ends.
    double uniform(std::uint64_t particle, std::uint64_t step, std::uint32_t component) const {
        return to_unit(bits(particle, step, component, 0));
    }

    // Standard normal via Box-Muller (cosine branch).
    double gaussian(std::uint64_t particle, std::uint64_t step, std::uint32_t component) const;

  private:
    std::uint64_t bits(std::uint64_t particle, std::uint64_t step, std::uint64_t component,
                       std::uint64_t phase) const {
        std::uint64_t h = mix64(base_ ^ particle);
        h = mix64(h ^ step);
        return mix64(h ^ ((component << 1) | phase));
    }

    static double to_unit(std::uint64_t h) {
        // 53 mantissa bits; offset keeps the value strictly inside (0,1).
        return static_cast<double>(h >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t base_;
};

}  // namespace mvlab

#endif
