#pragma once

#include <stdexcept>
#include <string>

namespace kinvfp {

// Bad configuration or precondition; maps to CLI exit code 1.
class InvalidInput : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// A checked property failed; exit code 2.
class AssertionFailure : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// NaN/Inf or divergence during a computation; exit code 3.
class NumericalAbort : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw InvalidInput(what);
}

}  // namespace kinvfp
