#pragma once

#include <stdexcept>
#include <string>

namespace mems4 {

enum class Errc {
  domain,            // argument outside (-1, inf) or another mathematical domain
  invalid_argument,  // malformed parameters or sizes
  singular,          // zero pivot in a factorization
  no_convergence,    // iteration limit reached
  stall,             // step size underflow in continuation or time stepping
  not_applicable,    // a bound's precondition does not hold
  no_fold,           // no sign change of dLambda/ds in the computed range
};

inline const char* to_string(Errc c) {
  switch (c) {
    case Errc::domain: return "domain";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::singular: return "singular";
    case Errc::no_convergence: return "no_convergence";
    case Errc::stall: return "stall";
    case Errc::not_applicable: return "not_applicable";
    case Errc::no_fold: return "no_fold";
  }
  return "unknown";
}

/// Recoverable solver error. Callers that can react (damping a Newton step,
/// perturbing a shift, shrinking a continuation step) catch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool cond, Errc code, const char* what) {
  if (!cond) throw Error(code, what);
}

}  // namespace mems4
