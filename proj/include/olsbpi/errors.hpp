#ifndef OLSBPI_ERRORS_HPP
#define OLSBPI_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace olsbpi {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define OLSBPI_DEFINE_ERROR(name)                                   \
  struct name : Error {                                             \
    explicit name(const std::string& msg) : Error(#name ": " + msg) {} \
  }

OLSBPI_DEFINE_ERROR(DimensionMismatch);
OLSBPI_DEFINE_ERROR(AsymmetricInput);
OLSBPI_DEFINE_ERROR(BadLength);
OLSBPI_DEFINE_ERROR(InvalidArgument);
OLSBPI_DEFINE_ERROR(NotPositiveDefinite);
OLSBPI_DEFINE_ERROR(SingularGuu);
OLSBPI_DEFINE_ERROR(SingularInner);
OLSBPI_DEFINE_ERROR(SingularOperator);
OLSBPI_DEFINE_ERROR(NotAdmissible);
OLSBPI_DEFINE_ERROR(NotHurwitz);
OLSBPI_DEFINE_ERROR(NoConvergence);
OLSBPI_DEFINE_ERROR(OracleDiverged);
OLSBPI_DEFINE_ERROR(Blowup);
OLSBPI_DEFINE_ERROR(TooFewSamples);
OLSBPI_DEFINE_ERROR(OdeUnstable);
OLSBPI_DEFINE_ERROR(MissingABData);
OLSBPI_DEFINE_ERROR(ParseError);
OLSBPI_DEFINE_ERROR(EmptyReport);

#undef OLSBPI_DEFINE_ERROR

// Config validation reports every problem at once, not just the first.
struct ValidationError : Error {
  std::vector<std::string> issues;
  explicit ValidationError(std::vector<std::string> problems)
      : Error("ValidationError: " + join(problems)), issues(std::move(problems)) {}

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }
};

// Wraps a module error with experiment context (seed, iteration, phase).
struct RunError : Error {
  std::string phase;
  long long seed = -1;
  int iteration = -1;
  RunError(const std::string& phase_, long long seed_, int iteration_,
           const std::string& what_)
      : Error("RunError[phase=" + phase_ + " seed=" + std::to_string(seed_) +
              " iteration=" + std::to_string(iteration_) + "]: " + what_),
        phase(phase_), seed(seed_), iteration(iteration_) {}
};

}  // namespace olsbpi

#endif
