// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <stdexcept>
#include <string>

namespace pse {

// Base of every error raised by the toolkit. The CLI maps subclasses onto
// its exit-code contract.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PSE_DEFINE_ERROR(Name)            \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  };

PSE_DEFINE_ERROR(InvalidInput)
PSE_DEFINE_ERROR(InvalidParams)
PSE_DEFINE_ERROR(InvalidState)
PSE_DEFINE_ERROR(ShapeError)
PSE_DEFINE_ERROR(InvalidReference)
PSE_DEFINE_ERROR(RoleConflict)
PSE_DEFINE_ERROR(InsufficientEnrollment)
PSE_DEFINE_ERROR(CompositionError)
PSE_DEFINE_ERROR(IOError)
PSE_DEFINE_ERROR(EmptyManifest)
PSE_DEFINE_ERROR(CheckpointError)
PSE_DEFINE_ERROR(ConfigError)

#undef PSE_DEFINE_ERROR

// Raised when a NaN/Inf shows up; `where` names the layer or parameter.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& where, const std::string& what)
      : Error(where + ": " + what), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

}  // namespace pse
