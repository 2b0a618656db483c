#pragma once

#include <stdexcept>
#include <string>

namespace landscape {

/// Base of every error the toolkit throws. name() is the stable identifier the
/// CLI prints so scripts can tell failures apart.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(what), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

#define LANDSCAPE_DEFINE_ERROR(Type)                                     \
  class Type : public Error {                                            \
   public:                                                               \
    explicit Type(const std::string& what) : Error(#Type, what) {}       \
  };

LANDSCAPE_DEFINE_ERROR(DimensionError)
LANDSCAPE_DEFINE_ERROR(PreconditionError)
LANDSCAPE_DEFINE_ERROR(NonFiniteError)
LANDSCAPE_DEFINE_ERROR(DecompositionError)
LANDSCAPE_DEFINE_ERROR(GapViolationError)
LANDSCAPE_DEFINE_ERROR(SizeError)
LANDSCAPE_DEFINE_ERROR(NotLayerwiseMinimumError)
LANDSCAPE_DEFINE_ERROR(ConstructionError)
LANDSCAPE_DEFINE_ERROR(CertificationError)
LANDSCAPE_DEFINE_ERROR(DivergenceError)
LANDSCAPE_DEFINE_ERROR(GenerationError)
LANDSCAPE_DEFINE_ERROR(IoError)

#undef LANDSCAPE_DEFINE_ERROR

}  // namespace landscape
