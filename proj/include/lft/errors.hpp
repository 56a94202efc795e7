#pragma once

#include <stdexcept>
#include <string>

namespace lft {

/// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Matrix shape mismatch (wrong operand shapes, non-square where square is required).
struct DimensionError : Error {
    using Error::Error;
};

/// Out-of-range coordinate, direction or site index.
struct DomainError : Error {
    using Error::Error;
};

/// Invalid setup: bad rank counts, duplicate ranks, zero-sized elements, ...
struct ConfigError : Error {
    using Error::Error;
};

/// Numerically singular matrix (pivot below threshold).
struct SingularError : Error {
    using Error::Error;
};

/// Site access outside the local + halo region of a field.
struct LocalityError : Error {
    using Error::Error;
};

/// Peer unreachable, handshake timeout or connection dropped.
struct ConnectionError : Error {
    using Error::Error;
};

/// Malformed frame or unexpected message size on an established channel.
struct ProtocolError : Error {
    using Error::Error;
};

/// Bad magic, version, shape or truncation in a field file.
struct FormatError : Error {
    using Error::Error;
};

/// Local filesystem failure (open/read/write).
struct FileError : Error {
    using Error::Error;
};

} // namespace lft
