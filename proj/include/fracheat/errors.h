#pragma once

#include <stdexcept>
#include <string>

namespace fracheat {

  // Error kinds map one-to-one onto the C API status codes.
  enum class ErrorKind { Domain = 1, Config = 2, Admissibility = 3, Divergence = 4,
                         Invariant = 5, Io = 6, Argument = 7 };

  class Error : public std::runtime_error {
  public:
    Error(ErrorKind k, const std::string& msg) : std::runtime_error(msg), m_kind(k) {}
    ErrorKind kind() const noexcept { return m_kind; }
  private:
    ErrorKind m_kind;
  };

  struct DomainError : Error { explicit DomainError(const std::string& m) : Error(ErrorKind::Domain, m) {} };
  struct ConfigError : Error { explicit ConfigError(const std::string& m) : Error(ErrorKind::Config, m) {} };
  struct AdmissibilityError : Error { explicit AdmissibilityError(const std::string& m) : Error(ErrorKind::Admissibility, m) {} };
  struct DivergenceError : Error { explicit DivergenceError(const std::string& m) : Error(ErrorKind::Divergence, m) {} };
  struct InvariantError : Error { explicit InvariantError(const std::string& m) : Error(ErrorKind::Invariant, m) {} };
  struct IoError : Error { explicit IoError(const std::string& m) : Error(ErrorKind::Io, m) {} };
  struct ArgumentError : Error { explicit ArgumentError(const std::string& m) : Error(ErrorKind::Argument, m) {} };

}
