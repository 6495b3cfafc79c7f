#pragma once

#include <stdexcept>
#include <string>

namespace eqlab {

/// Failure categories. The CLI maps each one to an exit code.
enum class ErrorKind {
  Configuration,     ///< bad resolution, inadmissible parameters, malformed config
  Usage,             ///< caller broke a precondition (lineage mismatch, too few points)
  Domain,            ///< mathematical domain violation (chart change at a pole)
  InvalidField,      ///< NaN or non-finite samples in a field
  InadmissibleWeight,///< weight that does not extend continuously to P^1
  Conditioning,      ///< Gram matrix beyond double precision
  Numeric,           ///< overflow or breakdown inside a numeric kernel
  SolverQuality,     ///< solver output violates a certified bound
  IllConditionedSample,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double gram_cond)
      : Error(ErrorKind::Conditioning, what), gram_cond_(gram_cond) {}
  double gram_cond() const noexcept { return gram_cond_; }

 private:
  double gram_cond_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace eqlab
