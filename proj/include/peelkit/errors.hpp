#pragma once

#include <stdexcept>
#include <string>

namespace peelkit {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define PEELKIT_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
  }

PEELKIT_DEFINE_ERROR(EmptyMesh);
PEELKIT_DEFINE_ERROR(EmptySet);
PEELKIT_DEFINE_ERROR(DimensionMismatch);
PEELKIT_DEFINE_ERROR(ResolutionMismatch);
PEELKIT_DEFINE_ERROR(NonPositiveScale);
PEELKIT_DEFINE_ERROR(InvertedRange);
PEELKIT_DEFINE_ERROR(TooFewPoints);
PEELKIT_DEFINE_ERROR(IoError);
PEELKIT_DEFINE_ERROR(ParseError);

#undef PEELKIT_DEFINE_ERROR

}  // namespace peelkit
