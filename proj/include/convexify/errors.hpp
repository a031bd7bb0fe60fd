#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace convexify {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or grid mismatch between operands, or an ill-formed grid.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (k <= 0, lambda <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A field violates the boundary conditions an operation requires.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Noise level outside the range where a parameter schedule is defined.
class ScheduleError : public Error {
 public:
  using Error::Error;
};

/// An iterative linear solver failed to reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double final_residual,
              std::vector<double> residual_history = {})
      : Error(what), final_residual_(final_residual), history_(std::move(residual_history)) {}

  double final_residual() const noexcept { return final_residual_; }
  const std::vector<double>& residual_history() const noexcept { return history_; }

 private:
  double final_residual_;
  std::vector<double> history_;
};

/// |w| vanished at some sample so log w is undefined.
class DegenerateAmplitudeError : public Error {
 public:
  DegenerateAmplitudeError(const std::string& what, int j, int s, int k_index)
      : Error(what), j_(j), s_(s), k_index_(k_index) {}
  int j() const noexcept { return j_; }
  int s() const noexcept { return s_; }
  int k_index() const noexcept { return k_index_; }

 private:
  int j_, s_, k_index_;
};

/// Phase unwrapping left a jump of at least pi between adjacent samples.
class UnwrapError : public Error {
 public:
  using Error::Error;
};

/// An extension field failed its boundary-condition verification.
class ConstructionError : public Error {
 public:
  ConstructionError(const std::string& what, std::string face, double max_defect)
      : Error(what), face_(std::move(face)), max_defect_(max_defect) {}
  const std::string& face() const noexcept { return face_; }
  double max_defect() const noexcept { return max_defect_; }

 private:
  std::string face_;
  double max_defect_;
};

/// Gradient projection kept increasing the functional after every step halving.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<double> j_history)
      : Error(what), j_history_(std::move(j_history)) {}
  const std::vector<double>& j_history() const noexcept { return j_history_; }

 private:
  std::vector<double> j_history_;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written, or its contents are malformed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Failure inside one pipeline stage; the original message follows the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace convexify
