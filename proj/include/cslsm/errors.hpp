#pragma once

#include <stdexcept>
#include <string>

namespace cslsm {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read, or written.
class io_error : public error {
public:
    using error::error;
};

/// A file was readable but its contents do not match the expected format.
class format_error : public error {
public:
    enum class kind {
        bad_magic,
        bad_version,
        truncated,     // payload length does not match the header
        invalid_mask,  // mask byte other than 0x00/0x01
        invalid_data,  // non-finite or otherwise impossible payload value
    };

    format_error(kind k, const std::string& msg) : error(msg), kind_(k) {}
    kind which() const { return kind_; }

private:
    kind kind_;
};

/// Invalid configuration value or violated precondition.
class config_error : public error {
public:
    using error::error;
};

/// The solver produced a non-finite iterate.
class divergence_error : public error {
public:
    divergence_error(int iteration, const std::string& msg)
        : error(msg), iteration_(iteration) {}
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

} // namespace cslsm
