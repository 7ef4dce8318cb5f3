#ifndef INVERSEVIS_ERRORS_HPP
#define INVERSEVIS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace inversevis {

// The three families map onto the CLI exit codes 2, 3 and 4.

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace inversevis

#endif  // INVERSEVIS_ERRORS_HPP
