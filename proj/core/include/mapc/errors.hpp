#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mapc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a formula (e.g. d <= 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// Raised when an MCS without a nominal rate (index 14) is used for transmission.
class UnsupportedMcsError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SchedulingError : public Error {
 public:
  using Error::Error;
};

class InvalidActionError : public Error {
 public:
  using Error::Error;
};

class EpisodeAbort : public Error {
 public:
  EpisodeAbort(std::size_t txop, const std::string& what)
      : Error("episode aborted at TXOP " + std::to_string(txop) + ": " + what),
        txop_(txop) {}

  std::size_t txop() const noexcept { return txop_; }

 private:
  std::size_t txop_;
};

}  // namespace mapc
