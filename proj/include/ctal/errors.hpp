#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace ctal {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape/dimension disagreement between operands.
class DimensionError : public Error {
public:
  using Error::Error;
};

// A softmax row with no unmasked entry, or attention over an empty key set.
class DegenerateAttentionError : public Error {
public:
  using Error::Error;
};

// NaN/Inf where a finite value is required (loss, gradient, features).
class NumericError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

// Undefined metric (absent class for UA, zero variance for Corr, ...).
class MetricError : public Error {
public:
  using Error::Error;
};

inline void log_warn(const std::string& msg) {
  std::fprintf(stderr, "[warn] %s\n", msg.c_str());
}

inline void log_info(const std::string& msg) {
  std::fprintf(stderr, "[info] %s\n", msg.c_str());
}

}  // namespace ctal
