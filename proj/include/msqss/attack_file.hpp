#pragma once

#include <stdexcept>
#include <string>

#include "msqss/adversary.hpp"

namespace msqss {

// Raised for any defect in an attack matrix file: unreadable path, malformed
// line, duplicate or missing entry, or a matrix failing the unitarity check.
// Messages carry the path plus the line number or offending coordinates.
struct AttackFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Text format for an entangle-measure attack:
//   header line:  d p
//   (d*p)^2 lines `row col re im` for the forward unitary, any order, each
//   cell exactly once; the same again for the backward unitary; then p lines
//   `re im` for the initial probe state. Blank lines and text after `#` are
//   ignored.
AttackModel load_attack_file(const std::string& path);

void save_attack_file(const std::string& path, const AttackModel& model);

}  // namespace msqss
