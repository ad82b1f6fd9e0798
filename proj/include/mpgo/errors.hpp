#pragma once

#include <stdexcept>
#include <string>

namespace mpgo {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularMetric : Error { using Error::Error; };
struct StencilOutOfDomain : Error { using Error::Error; };
struct DegeneratePhase : Error { using Error::Error; };
struct EikonalViolated : Error { using Error::Error; };
struct InvalidDirection : Error { using Error::Error; };
struct NullDirectionUnsolvable : Error { using Error::Error; };
struct InvalidSeed : Error { using Error::Error; };
struct InvalidScale : Error { using Error::Error; };
struct AliasedWords : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct Diverged : Error { using Error::Error; };

struct NotInRange : Error {
  double residual;
  NotInRange(const std::string& msg, double r) : Error(msg), residual(r) {}
};

}  // namespace mpgo
