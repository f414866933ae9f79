#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace disa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Stacked per-agent vectors: column i holds agent i's block.
using AgentBlocks = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class DisconnectedGraph : public Error {
 public:
  using Error::Error;
};

class InvalidMixingMatrix : public Error {
 public:
  using Error::Error;
};

class StepSizeViolation : public Error {
 public:
  StepSizeViolation(std::size_t agent, const std::string& what)
      : Error(what), agent_(agent) {}
  std::size_t agent() const { return agent_; }

 private:
  std::size_t agent_;
};

class FactorizationFailure : public Error {
 public:
  using Error::Error;
};

class NegativeForm : public Error {
 public:
  using Error::Error;
};

class UnsupportedWitness : public Error {
 public:
  using Error::Error;
};

class InnerSolverStall : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class SizeGuard : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IndexError : public ParseError {
 public:
  using ParseError::ParseError;
};

class BadLabels : public Error {
 public:
  using Error::Error;
};

class ZeroReference : public Error {
 public:
  using Error::Error;
};

class MissingSeries : public Error {
 public:
  using Error::Error;
};

class TooShort : public Error {
 public:
  using Error::Error;
};

class StrictRegimeRequired : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Largest number of stacked unknowns m·(n+p) the dense verification and
// baseline paths will accept.
inline constexpr std::size_t kDenseSizeLimit = 5000;

}  // namespace disa
