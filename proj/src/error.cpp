#include "yunet/error.hpp"

namespace yunet {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::shape: return "shape";
    case ErrorKind::numeric_input: return "numeric-input";
    case ErrorKind::data: return "data";
    case ErrorKind::state: return "state";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::io: return "io";
    case ErrorKind::missing_file: return "missing-file";
    case ErrorKind::corrupt_container: return "corrupt-container";
    case ErrorKind::spec_mismatch: return "spec-mismatch";
    case ErrorKind::no_overlap: return "no-overlap";
    }
    return "unknown";
}

} // namespace yunet
