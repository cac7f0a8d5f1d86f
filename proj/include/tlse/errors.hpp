#pragma once

#include <stdexcept>
#include <string>

namespace tlse {

enum class ErrorKind {
  Input,       // malformed or inconsistent arguments
  Rank,        // a factor that must be nonsingular is rank deficient
  Numerical,   // a factorization broke down
  Resource,    // an explicit Kronecker product would exceed the memory guard
  IllPosed,    // genericity violated, the problem has no unique solution
  NonGeneric,  // singular vector with (numerically) vanishing last component
  Undefined,   // quantity undefined for this input (e.g. relative condition at x = 0)
  Misuse       // operation called outside its domain (e.g. TLS formulas with p > 0)
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return "input error";
    case ErrorKind::Rank: return "rank error";
    case ErrorKind::Numerical: return "numerical error";
    case ErrorKind::Resource: return "resource error";
    case ErrorKind::IllPosed: return "ill-posed problem";
    case ErrorKind::NonGeneric: return "non-generic solution";
    case ErrorKind::Undefined: return "undefined condition";
    case ErrorKind::Misuse: return "misuse";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace tlse
