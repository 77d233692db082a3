#pragma once

#include <stdexcept>
#include <string>

namespace ligs {

// Bad configuration value or missing key; key() names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Violated operation precondition (shape mismatch, empty batch, bad fixture, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf detected in a loss, gradient or logit vector.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Illegal environment usage (stepping a finished episode, wrong joint action size).
class EnvError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace ligs
