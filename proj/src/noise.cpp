#include "mvlab/noise.hpp"

#include <cmath>

namespace mvlab {

double NoiseStream::gaussian(std::uint64_t particle, std::uint64_t step,
                             std::uint32_t component) const {
    const double u1 = to_unit(bits(particle, step, component, 0));
    const double u2 = to_unit(bits(particle, step, component, 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace mvlab
