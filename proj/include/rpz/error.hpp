#pragma once

#include <stdexcept>
#include <string>

namespace rpz {

enum class ErrorKind {
  Syntax,
  Name,
  Kind,
  Type,
  Schedule,
  Eval,
  Density,
  Degenerate,
  Budget,
  Config,
};

const char* error_kind_name(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(error_kind_name(kind)) + " error: " + msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct SrcLoc {
  int line = 0;
  int col = 0;
  std::string str() const { return std::to_string(line) + ":" + std::to_string(col); }
};

}  // namespace rpz
