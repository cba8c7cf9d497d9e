#pragma once

#include <stdexcept>
#include <string>

namespace nrt {

// Shape or dimension mismatch in a numeric operation. Messages always name
// the offending shapes.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

// An operation was called outside its stated preconditions, e.g. negotiating
// on a schedule that has already frozen.
class ContractError : public std::logic_error {
public:
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

// Invalid layer/network/training configuration.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Dataset file problems. `kind` makes the error taxonomy machine-checkable.
class DataError : public std::runtime_error {
public:
    enum class Kind {
        missing_file,
        bad_magic,
        truncated,
        count_mismatch,
        bad_record_size,
        bad_label,
        digest_mismatch,
    };

    DataError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

// Runtime training failure (divergence, non-finite loss or gradient).
class TrainError : public std::runtime_error {
public:
    explicit TrainError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nrt
