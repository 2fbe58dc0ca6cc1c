#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pntk {

enum class ErrorKind {
    InvalidMatrix,
    ShapeMismatch,
    SingularKernel,
    InvalidSpec,
    Unsupported,
    OutOfRange,
    Diverged,
    MemoryCap,
    DegenerateKernel,
    InvalidSweep,
    FormatError,
    EmptySet,
    CountMismatch,
    InsufficientData,
    ConfigError,
    IoError,
    InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

// Every failure surfaced by the library is an Error carrying a kind, so the
// CLI can map it to a structured message and callers can branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class SingularKernelError : public Error {
public:
    SingularKernelError(const std::string& what, double attempted_jitter)
        : Error(ErrorKind::SingularKernel,
                what + " (last attempted jitter " + std::to_string(attempted_jitter) + ")"),
          jitter_(attempted_jitter) {}

    double attempted_jitter() const noexcept { return jitter_; }

private:
    double jitter_;
};

class MemoryCapError : public Error {
public:
    MemoryCapError(const std::string& what, std::uint64_t required_bytes, std::uint64_t cap_bytes)
        : Error(ErrorKind::MemoryCap, what + " (needs " + std::to_string(required_bytes) +
                                          " bytes, cap " + std::to_string(cap_bytes) + ")"),
          required_(required_bytes), cap_(cap_bytes) {}

    std::uint64_t required_bytes() const noexcept { return required_; }
    std::uint64_t cap_bytes() const noexcept { return cap_; }

private:
    std::uint64_t required_;
    std::uint64_t cap_;
};

class DivergedError : public Error {
public:
    DivergedError(const std::string& what, std::size_t epoch)
        : Error(ErrorKind::Diverged, what + " at epoch " + std::to_string(epoch)), epoch_(epoch) {}

    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

}  // namespace pntk
