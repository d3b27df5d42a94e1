#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace uplif {

using Key = std::uint64_t;
using Value = std::uint64_t;

struct KeyValue {
  Key key;
  Value value;

  friend bool operator==(const KeyValue&, const KeyValue&) = default;
};

// Every contract violation surfaces as an Error carrying a short reason.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace uplif
