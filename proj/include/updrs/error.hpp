#pragma once

#include <stdexcept>
#include <string>

namespace updrs {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// dataset
struct MissingFile : Error { using Error::Error; };
struct HeaderMismatch : Error { using Error::Error; };
struct RowParseError : Error { using Error::Error; };
struct NonFiniteValue : Error { using Error::Error; };
struct InvalidStageConfig : Error { using Error::Error; };
struct EmptyGroup : Error { using Error::Error; };
struct KTooLarge : Error { using Error::Error; };

// preprocess
struct EmptyTable : Error { using Error::Error; };
struct UnknownColumn : Error { using Error::Error; };
struct TooFewMinoritySamples : Error { using Error::Error; };

// featsel
struct SingleClass : Error { using Error::Error; };
struct EmptyCandidates : Error { using Error::Error; };
struct DegenerateTarget : Error { using Error::Error; };

// models
struct ShapeMismatch : Error { using Error::Error; };
struct NonFiniteInput : Error { using Error::Error; };
struct NonFiniteObjective : Error { using Error::Error; };
struct EmptyWindow : Error { using Error::Error; };
struct NoEligibleSubjects : Error { using Error::Error; };
struct WindowTooLong : Error { using Error::Error; };

// eval
struct LengthMismatch : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct ZeroVariance : Error { using Error::Error; };
struct FoldError : Error { using Error::Error; };

}  // namespace updrs
