#pragma once

#include <stdexcept>
#include <string>

namespace lava {

enum class ErrorKind {
    InvalidArgument,
    Format,       // malformed container or file contents
    Unsupported,  // well-formed but outside the supported subset
    NoSpeech,
    Io,
    Stage,        // a pipeline stage failed at runtime
};

inline const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Unsupported: return "unsupported format";
    case ErrorKind::NoSpeech: return "no speech";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::Stage: return "stage failure";
    }
    return "error";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what)
{
    throw Error(kind, what);
}

inline void require(bool cond, const std::string& what)
{
    if (!cond) {
        throw Error(ErrorKind::InvalidArgument, what);
    }
}

} // namespace lava
