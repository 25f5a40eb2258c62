#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace affect {

// Root of every error the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data, bad configuration values, unreadable files. CLI exit code 1.
class DataError : public Error {
public:
    using Error::Error;
};

// Structural problem with a whole file (missing header, wrong magic, truncation).
class FormatError : public DataError {
public:
    using DataError::DataError;
};

// A single data row failed validation. `line` is the 1-based line number in the file.
class RowError : public DataError {
public:
    RowError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Bad command-line usage. CLI exit code 2.
class UsageError : public Error {
public:
    using Error::Error;
};

// Non-finite values that escaped into the numerics (NaN gradient and similar).
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace affect
