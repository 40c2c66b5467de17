#ifndef MCTS2R_ERRORS_HPP
#define MCTS2R_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mcts2r {

// Input that violates an operation's precondition (bad shape, label range, NaN).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inconsistent or infeasible configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed on-disk data. Carries the byte offset where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace mcts2r

#endif  // MCTS2R_ERRORS_HPP
