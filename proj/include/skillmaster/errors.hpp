#pragma once

#include <stdexcept>
#include <string>

namespace skillmaster {

// Each failure the public API can raise has its own type so callers can
// map them to exit codes or reward penalties without string matching.

class MalformedBank : public std::runtime_error {
 public:
  explicit MalformedBank(const std::string& reason)
      : std::runtime_error("malformed bank: " + reason) {}
};

class UnknownFamily : public std::runtime_error {
 public:
  explicit UnknownFamily(const std::string& family)
      : std::runtime_error("unknown family: " + family) {}
};

class UnknownSkillId : public std::runtime_error {
 public:
  explicit UnknownSkillId(const std::string& id)
      : std::runtime_error("unknown skill id: " + id), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class InsufficientProbes : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GroupTooSmall : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StepAfterDone : public std::runtime_error {
 public:
  StepAfterDone() : std::runtime_error("step called on a finished episode") {}
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an internal contract is violated by the caller (e.g. asking
// for probe evaluation of a keep_skill call).
class ProgrammingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace skillmaster
