#pragma once

#include <stdexcept>
#include <string>

namespace midc {

// Config text could not be read as a document of the expected shape.
// Messages carry the field path (e.g. "adjacents[2].lcc.p_nom").
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A structural rule of the model is violated. Messages name the rule and
// the offending entity.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation precondition does not hold for otherwise valid inputs
// (zero frequency target, unknown fault id, infeasible requirement, ...).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iteration hit its round budget without meeting the stop criteria.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace midc
