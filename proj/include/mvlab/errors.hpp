#ifndef MVLAB_ERRORS_HPP
#define MVLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mvlab {

struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ModelEvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MollifyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Carries the first offending particle and the simulation time.
struct BlowUpError : std::runtime_error {
    BlowUpError(int particle, double time)
        : std::runtime_error("particle state became non-finite (particle " +
                             std::to_string(particle) + ", t = " + std::to_string(time) + ")"),
          particle(particle),
          time(time) {}
    int particle;
    double time;
};

struct RightInverseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CenteringError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientSignalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StatisticalPowerError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mvlab

#endif
