#ifndef KTL_ERROR_HPP
#define KTL_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace ktl {

enum class Errc {
  UnknownMagic,
  TruncatedPayload,
  BadChannelLayout,
  DimensionMismatch,
  CholeskyFailure,
  SingularTransform,
  NonFiniteObjective,
  SampleCapExceeded,
  RankExceedsN,
  NotPositiveSemidefinite,
  EmptyTrainingSet,
  LengthMismatch,
  EmptyInput,
  BadMagic,
  VersionUnsupported,
  CorruptLength,
  InvalidArgument,
  Io,
};

constexpr std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::UnknownMagic: return "UnknownMagic";
    case Errc::TruncatedPayload: return "TruncatedPayload";
    case Errc::BadChannelLayout: return "BadChannelLayout";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::CholeskyFailure: return "CholeskyFailure";
    case Errc::SingularTransform: return "SingularTransform";
    case Errc::NonFiniteObjective: return "NonFiniteObjective";
    case Errc::SampleCapExceeded: return "SampleCapExceeded";
    case Errc::RankExceedsN: return "RankExceedsN";
    case Errc::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case Errc::EmptyTrainingSet: return "EmptyTrainingSet";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionUnsupported: return "VersionUnsupported";
    case Errc::CorruptLength: return "CorruptLength";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

// Every failure in the library surfaces as ktl::Error; code() identifies the
// condition so callers (and tests) can branch on it without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace ktl

#endif  // KTL_ERROR_HPP
