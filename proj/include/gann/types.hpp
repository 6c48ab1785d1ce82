#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace gann {

using VertexId = std::uint32_t;

inline constexpr VertexId kInvalidVertex = std::numeric_limits<VertexId>::max();

/// Raised when an on-disk file does not match the expected layout.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a file cannot be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gann
