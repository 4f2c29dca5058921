#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rankfs {

// Base for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input files. Row and column are 1-based positions
// in the offending file; 0 means "not applicable".
class LoadError : public Error {
public:
    LoadError(std::string file, std::size_t row, std::size_t column, const std::string& what);

    const std::string& file() const noexcept { return file_; }
    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::string file_;
    std::size_t row_;
    std::size_t column_;
};

// A caller broke an operation's precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

} // namespace rankfs
