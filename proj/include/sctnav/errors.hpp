#pragma once

#include <stdexcept>
#include <string>

namespace sctnav {

/// Malformed input: bad map file, out-of-range parameter, unknown episode.
class InvalidInput : public std::invalid_argument {
  public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// The goal is unreachable (sealed room, exhausted planner iterations).
class NoPath : public std::runtime_error {
  public:
    explicit NoPath(const std::string& what) : std::runtime_error(what) {}
};

/// A fastest-time reference was required but not present in the plan cache.
class MissingCache : public std::runtime_error {
  public:
    explicit MissingCache(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sctnav
