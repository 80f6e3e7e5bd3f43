#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace yunet {

enum class ErrorKind {
    config,
    shape,
    numeric_input,
    data,
    state,
    numeric,
    io,
    missing_file,
    corrupt_container,
    spec_mismatch,
    no_overlap,
};

std::string_view to_string(ErrorKind kind);

/// Base of every exception thrown by the toolkit. The kind drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define YUNET_DEFINE_ERROR(Name, Kind)                                         \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& message) : Error(Kind, message) {}   \
    }

YUNET_DEFINE_ERROR(ConfigError, ErrorKind::config);
YUNET_DEFINE_ERROR(ShapeError, ErrorKind::shape);
YUNET_DEFINE_ERROR(NumericInputError, ErrorKind::numeric_input);
YUNET_DEFINE_ERROR(DataError, ErrorKind::data);
YUNET_DEFINE_ERROR(StateError, ErrorKind::state);
YUNET_DEFINE_ERROR(NumericError, ErrorKind::numeric);
YUNET_DEFINE_ERROR(IoError, ErrorKind::io);
YUNET_DEFINE_ERROR(MissingFileError, ErrorKind::missing_file);
YUNET_DEFINE_ERROR(CorruptContainerError, ErrorKind::corrupt_container);
YUNET_DEFINE_ERROR(SpecMismatchError, ErrorKind::spec_mismatch);
YUNET_DEFINE_ERROR(NoOverlapError, ErrorKind::no_overlap);

#undef YUNET_DEFINE_ERROR

} // namespace yunet
