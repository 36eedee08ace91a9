#pragma once

#include <stdexcept>
#include <string>

namespace lapcert {

// All library failures carry the name of the module that raised them.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error("[" + module + "] " + what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

class OperatorSpecError : public Error {
 public:
  explicit OperatorSpecError(const std::string& w) : Error("operators", w) {}
};

class CapacityError : public Error {
 public:
  CapacityError(const std::string& module, const std::string& w) : Error(module, w) {}
};

class SolverError : public Error {
 public:
  explicit SolverError(const std::string& w) : Error("eigensolver", w) {}
};

class ModelError : public Error {
 public:
  explicit ModelError(const std::string& w) : Error("model", w) {}
};

class EvaluationError : public Error {
 public:
  explicit EvaluationError(const std::string& w) : Error("posterior", w) {}
};

class OptimizationError : public Error {
 public:
  explicit OptimizationError(const std::string& w) : Error("posterior", w) {}
};

class LinearAlgebraError : public Error {
 public:
  explicit LinearAlgebraError(const std::string& w) : Error("certification", w) {}
};

class ParameterError : public Error {
 public:
  ParameterError(const std::string& module, const std::string& w) : Error(module, w) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& w) : Error("cli", w) {}
};

}  // namespace lapcert
