#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stocbo {

// Root of every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid parameters or configuration values (bad box, negative step, ...).
struct ConfigError : Error {
  using Error::Error;
};

// A call that violates an operation's preconditions (empty input, R > N, ...).
struct UsageError : Error {
  using Error::Error;
};

// Non-finite or otherwise malformed data (NaN objective values, ...).
struct DataError : Error {
  using Error::Error;
};

// A quadrature grid that would be too large to allocate.
struct ResourceError : Error {
  using Error::Error;
};

// The operation needs a property the random law does not have (e.g. a density on a box).
struct UnsupportedLaw : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// An Euler-Maruyama step produced a non-finite coordinate.
class NumericalBlowup : public Error {
 public:
  NumericalBlowup(std::size_t step, std::size_t particle)
      : Error("numerical blow-up at step " + std::to_string(step) + " (particle " +
              std::to_string(particle) + ")"),
        step_(step),
        particle_(particle) {}

  std::size_t step() const noexcept { return step_; }
  std::size_t particle() const noexcept { return particle_; }

 private:
  std::size_t step_;
  std::size_t particle_;
};

}  // namespace stocbo
