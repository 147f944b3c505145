#pragma once

#include <stdexcept>
#include <string>

namespace rhd {

enum class ErrorKind {
  input,         // malformed documents, out-of-range values
  contract,      // precondition on process structure violated
  degenerate,    // conditioning on a zero-mass block
  structural,    // division by a vanishing survival quantity on a reachable cell
  inadmissible,  // parameter or strategy outside its admissible set
  unsupported,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rhd
