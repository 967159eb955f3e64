#pragma once

#include <stdexcept>

namespace rabf {

/// Invalid sizes or parameters supplied by the caller.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A selection contract was violated, e.g. an empty subset where a nonempty
/// one is required.
class SelectionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A selected device has zero equivalent gain; no finite transmit design
/// exists for it.
class DegenerateChannelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rabf
