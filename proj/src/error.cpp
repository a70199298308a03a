#include "fvein/error.hpp"

namespace fvein {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "invalid-input";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Io: return "io";
        case ErrorKind::EmptyDataset: return "empty-dataset";
        case ErrorKind::Corruption: return "corruption";
        case ErrorKind::UnsupportedVersion: return "unsupported-version";
        case ErrorKind::State: return "state";
        case ErrorKind::Config: return "config";
    }
    return "unknown";
}

}  // namespace fvein
