#pragma once
// Error taxonomy.
//
// InvalidConfig      -- a user-supplied configuration is malformed or violates
//                       a documented precondition (CLI exits with code 2).
// InvalidInput       -- a programmatic argument is out of contract.
// DegenerateGeometry -- a geometric construction has no valid result for the
//                       given parameters (e.g. empty transversal pair).

#include <stdexcept>
#include <string>

namespace parawave {

struct InvalidConfig : std::runtime_error {
  explicit InvalidConfig(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidInput : std::runtime_error {
  explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateGeometry : std::runtime_error {
  explicit DegenerateGeometry(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace parawave
