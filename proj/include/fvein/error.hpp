#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fvein {

enum class ErrorKind {
    InvalidInput,
    Numeric,
    Io,
    EmptyDataset,
    Corruption,
    UnsupportedVersion,
    State,
    Config,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a category so the CLI can map
// it onto an exit status without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
    if (!condition) fail(ErrorKind::InvalidInput, message);
}

}  // namespace fvein
