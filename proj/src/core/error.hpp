#pragma once

#include <stdexcept>
#include <string>

namespace trifocal {

enum class ErrorCode {
  kInvalidArgument = 1,
  kDegenerate,
  kNumerical,
  kIo,
  kParse,
  kUncertified,
  kUnreliable,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

}  // namespace trifocal
