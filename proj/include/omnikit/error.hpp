#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace omnikit {

// Every recoverable failure carries a stable machine-readable name
// (e.g. "BehindCamera", "Disconnected") next to the human message.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

[[noreturn]] inline void fail(std::string name, const std::string& what) {
  throw Error(std::move(name), what);
}

}  // namespace omnikit
