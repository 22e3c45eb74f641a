#pragma once

#include <stdexcept>
#include <string>

namespace tisim {

// Raised for contract violations across the library. The message text is part
// of the public surface: the CLI echoes it verbatim.
class SimError : public std::runtime_error {
 public:
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tisim
