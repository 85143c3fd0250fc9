#pragma once
#include <stdexcept>
#include <string>

namespace vqcpc {

// Base for every error thrown by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonIntegerDecimation : Error { using Error::Error; };
struct ZeroVariance : Error { using Error::Error; };
struct TooFewParticipants : Error { using Error::Error; };
struct WindowTooShort : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct SequenceTooShort : Error { using Error::Error; };
struct EmptySplit : Error { using Error::Error; };
struct EmptyCorpus : Error { using Error::Error; };
struct NonDivisibleLength : Error { using Error::Error; };
struct VocabMismatch : Error { using Error::Error; };
struct MissingInput : Error { using Error::Error; };
struct SchemaVersion : Error { using Error::Error; };

}  // namespace vqcpc
