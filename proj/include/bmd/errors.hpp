#pragma once

#include <stdexcept>
#include <string>

namespace bmd {

// Shape mismatch anywhere in the tensor algebra: construction, slicing,
// products, factor validation.
class dim_error : public std::invalid_argument {
public:
    explicit dim_error(const std::string& what) : std::invalid_argument(what) {}
};

// An iterative solver produced a non-finite objective or otherwise lost the
// plot numerically.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// Failure classes for the binary tensor container and the image codecs.
// Each failure mode gets its own code so callers and tests can tell a bad
// magic from a checksum mismatch.
enum class io_errc {
    open_failed = 1,
    bad_magic,
    bad_version,
    bad_order,
    truncated,
    crc_mismatch,
    dims_overflow,
    bad_header,
    unsupported_pixel_format,
};

class io_error : public std::runtime_error {
public:
    io_error(io_errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    io_errc code() const noexcept { return code_; }

private:
    io_errc code_;
};

}  // namespace bmd
