#ifndef PREFGEO_COMMON_HPP
#define PREFGEO_COMMON_HPP

#include <stdexcept>
#include <string>

namespace prefgeo {

inline constexpr const char* kVersion = "0.1.0";

/// Thrown when a linear-algebra step cannot be completed (failed
/// factorization, overflowing intensity, degenerate system).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown on malformed input files; carries the offending line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace prefgeo

#endif
