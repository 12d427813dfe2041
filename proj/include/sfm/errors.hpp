#pragma once

#include <stdexcept>
#include <string>

namespace sfm {

class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define SFM_DEFINE_ERROR(Name)                                          \
    class Name : public Error {                                         \
      public:                                                           \
        explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
    }

// kitti_io
SFM_DEFINE_ERROR(MissingKey);
SFM_DEFINE_ERROR(MalformedNumber);
SFM_DEFINE_ERROR(TruncatedRecord);
SFM_DEFINE_ERROR(NonFiniteValue);
SFM_DEFINE_ERROR(MalformedLine);
SFM_DEFINE_ERROR(DegenerateBox);
SFM_DEFINE_ERROR(SinkFailure);
SFM_DEFINE_ERROR(IndexOutOfRange);

// calib_geometry
SFM_DEFINE_ERROR(SingularIntrinsics);
SFM_DEFINE_ERROR(DegenerateLine);

// frustum
SFM_DEFINE_ERROR(EmptyAfterClip);
SFM_DEFINE_ERROR(BothEmpty);

// patch_similarity
SFM_DEFINE_ERROR(EmptyPatch);
SFM_DEFINE_ERROR(ZeroVariance);

// synth
SFM_DEFINE_ERROR(PlacementFailure);

// eval_bench
SFM_DEFINE_ERROR(EmptyDenominator);

#undef SFM_DEFINE_ERROR

}  // namespace sfm
