#pragma once

#include <stdexcept>
#include <string>

namespace replay_bench {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file header (wrong magic, wrong dimension count).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Payload shorter than the header promises, or undecodable compression.
class CorruptionError : public Error {
public:
    using Error::Error;
};

/// Well-formed input whose content violates a domain rule (label out of range).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Images and labels that do not pair up.
class PairingError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A replay/training protocol precondition was violated.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// Operation invoked on the wrong generator family.
class KindError : public Error {
public:
    using Error::Error;
};

/// Evaluation grids of two logs do not line up.
class AlignmentError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Non-finite loss or gradient, labelled with where it happened.
class TrainingError : public Error {
public:
    TrainingError(std::string strategy, int subtask, int epoch, const std::string& what)
        : Error(what + " [strategy=" + strategy + " subtask=" + std::to_string(subtask) +
                " epoch=" + std::to_string(epoch) + "]"),
          strategy_(std::move(strategy)),
          subtask_(subtask),
          epoch_(epoch) {}

    const std::string& strategy() const noexcept { return strategy_; }
    int subtask() const noexcept { return subtask_; }
    int epoch() const noexcept { return epoch_; }

private:
    std::string strategy_;
    int subtask_;
    int epoch_;
};

}  // namespace replay_bench
