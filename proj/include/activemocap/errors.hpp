#pragma once

#include <stdexcept>
#include <string>

namespace activemocap {

// Base class for every error raised by the library. Catch this to handle any
// failure from a module without caring which one.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ACTIVEMOCAP_DEFINE_ERROR(Name)      \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  };

ACTIVEMOCAP_DEFINE_ERROR(NonPositiveDepth)
ACTIVEMOCAP_DEFINE_ERROR(DegenerateLookAt)
ACTIVEMOCAP_DEFINE_ERROR(ParseError)
ACTIVEMOCAP_DEFINE_ERROR(TopologyError)
ACTIVEMOCAP_DEFINE_ERROR(SubjectNotVisible)
ACTIVEMOCAP_DEFINE_ERROR(DegenerateDetection)
ACTIVEMOCAP_DEFINE_ERROR(DivergedError)
ACTIVEMOCAP_DEFINE_ERROR(InsufficientViews)
ACTIVEMOCAP_DEFINE_ERROR(NumericalFailure)
ACTIVEMOCAP_DEFINE_ERROR(NoVisibleCandidate)
ACTIVEMOCAP_DEFINE_ERROR(DegenerateLog)
ACTIVEMOCAP_DEFINE_ERROR(ConfigError)
ACTIVEMOCAP_DEFINE_ERROR(IoError)

#undef ACTIVEMOCAP_DEFINE_ERROR

}  // namespace activemocap
