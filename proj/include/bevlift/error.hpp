#pragma once

#include <stdexcept>
#include <string>

namespace bevlift {

// Base type for everything this library throws.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define BEVLIFT_DEFINE_ERROR(Name)                  \
  struct Name : Error {                             \
    using Error::Error;                             \
  }

BEVLIFT_DEFINE_ERROR(NonPositiveDepth);
BEVLIFT_DEFINE_ERROR(BehindCamera);
BEVLIFT_DEFINE_ERROR(DegenerateOrientation);
BEVLIFT_DEFINE_ERROR(InvalidSpec);
BEVLIFT_DEFINE_ERROR(IndexOutOfRange);
BEVLIFT_DEFINE_ERROR(ShapeMismatch);
BEVLIFT_DEFINE_ERROR(SpecMismatch);
BEVLIFT_DEFINE_ERROR(HorizonRay);
BEVLIFT_DEFINE_ERROR(AboveCamera);
BEVLIFT_DEFINE_ERROR(ParseError);
BEVLIFT_DEFINE_ERROR(EmptyCloud);
BEVLIFT_DEFINE_ERROR(NoVisibleObjects);
BEVLIFT_DEFINE_ERROR(IoError);

#undef BEVLIFT_DEFINE_ERROR

}  // namespace bevlift
