#pragma once

#include <stdexcept>
#include <string>

namespace uclearn {

// Error taxonomy shared by the C++ core, the C API status codes and the
// CLI exit codes. Param/config/format problems are caller mistakes
// (CLI exit 2); io/numeric/training are runtime failures (CLI exit 3).
enum class ErrorKind {
    param,
    config,
    format,
    io,
    numeric,
    training,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_param(const std::string& msg) { throw Error(ErrorKind::param, msg); }
[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(ErrorKind::config, msg); }
[[noreturn]] inline void throw_format(const std::string& msg) { throw Error(ErrorKind::format, msg); }
[[noreturn]] inline void throw_io(const std::string& msg) { throw Error(ErrorKind::io, msg); }
[[noreturn]] inline void throw_numeric(const std::string& msg) { throw Error(ErrorKind::numeric, msg); }
[[noreturn]] inline void throw_training(const std::string& msg) { throw Error(ErrorKind::training, msg); }

} // namespace uclearn
