#pragma once

#include <stdexcept>
#include <string>

namespace tqe {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeMismatch : Error {
    using Error::Error;
};
struct NonFiniteValue : Error {
    using Error::Error;
};
struct NotScalarRoot : Error {
    using Error::Error;
};
struct DetachedRoot : Error {
    using Error::Error;
};
struct StepOutOfRange : Error {
    using Error::Error;
};
struct InvalidConfig : Error {
    using Error::Error;
};

// data / file errors
struct IoFailure : Error {
    using Error::Error;
};
struct MissingColumn : Error {
    using Error::Error;
};
struct MalformedRow : Error {
    MalformedRow(const std::string& msg, long line) : Error(msg), line_number(line) {}
    long line_number;
};
struct EmptyFile : Error {
    using Error::Error;
};
struct EmptyCorpus : Error {
    using Error::Error;
};
struct DegenerateVariance : Error {
    using Error::Error;
};
struct TooFew : Error {
    using Error::Error;
};
struct LengthMismatch : Error {
    using Error::Error;
};
struct IndexMismatch : Error {
    using Error::Error;
};
struct DuplicateIndex : Error {
    using Error::Error;
};
struct EmptyInput : Error {
    using Error::Error;
};

// model / checkpoint errors
struct SequenceTooLong : Error {
    using Error::Error;
};
struct IdOutOfRange : Error {
    using Error::Error;
};
struct VersionMismatch : Error {
    using Error::Error;
};
struct CorruptCheckpoint : Error {
    using Error::Error;
};
struct AllMasked : Error {
    using Error::Error;
};
struct ZeroVector : Error {
    using Error::Error;
};
struct CorpusTooSmall : Error {
    using Error::Error;
};
struct EmptyTrain : Error {
    using Error::Error;
};
struct TooFewExamples : Error {
    using Error::Error;
};

}  // namespace tqe
