#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace aerotele {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// so3
class NotSkew : public Error {
public:
    NotSkew() : Error("matrix is not skew-symmetric") {}
};

class Degenerate : public Error {
public:
    explicit Degenerate(const std::string& what) : Error(what) {}
};

// impedance
class Singular : public Error {
public:
    explicit Singular(const std::string& what) : Error(what) {}
};

// contact world
class NothingInRange : public Error {
public:
    NothingInRange() : Error("no grippable body within latch distance") {}
};

// configuration
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::string field, const std::string& msg)
        : Error("line " + std::to_string(line) + (field.empty() ? "" : " [" + field + "]") + ": " + msg),
          line_(line),
          field_(std::move(field)) {}

    std::size_t line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& invariant)
        : Error("validation failed: " + invariant), invariant_(invariant) {}

    const std::string& invariant() const { return invariant_; }

private:
    std::string invariant_;
};

// statistics
class StatsError : public Error {
public:
    using Error::Error;
};

class MissingRun : public StatsError {
public:
    explicit MissingRun(int run) : StatsError("no responses for design run " + std::to_string(run)), run_(run) {}
    int run() const { return run_; }

private:
    int run_;
};

class NonPositive : public StatsError {
public:
    NonPositive() : StatsError("larger-is-better SNR requires strictly positive responses") {}
};

class DegenerateCells : public StatsError {
public:
    explicit DegenerateCells(const std::string& what) : StatsError(what) {}
};

class UnsupportedDf : public StatsError {
public:
    explicit UnsupportedDf(const std::string& what) : StatsError(what) {}
};

class ConstantSample : public StatsError {
public:
    ConstantSample() : StatsError("sample is constant") {}
};

class SizeOutOfRange : public StatsError {
public:
    explicit SizeOutOfRange(std::size_t n)
        : StatsError("sample size " + std::to_string(n) + " outside [3, 2000]") {}
};

class DegenerateMedian : public StatsError {
public:
    DegenerateMedian() : StatsError("no observations above the grand median") {}
};

// protocol and logs
class MalformedFrame : public Error {
public:
    MalformedFrame(std::size_t offset, const std::string& msg)
        : Error("malformed frame at byte " + std::to_string(offset) + ": " + msg), offset_(offset) {}

    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class ProtocolError : public Error {
public:
    explicit ProtocolError(const std::string& what) : Error(what) {}
};

class ChecksumMismatch : public Error {
public:
    ChecksumMismatch(std::uint64_t tick, std::uint64_t expected, std::uint64_t actual)
        : Error("state checksum mismatch at tick " + std::to_string(tick)),
          tick_(tick),
          expected_(expected),
          actual_(actual) {}

    std::uint64_t tick() const { return tick_; }
    std::uint64_t expected() const { return expected_; }
    std::uint64_t actual() const { return actual_; }

private:
    std::uint64_t tick_;
    std::uint64_t expected_;
    std::uint64_t actual_;
};

}  // namespace aerotele
