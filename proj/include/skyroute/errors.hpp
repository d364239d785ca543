#pragma once

#include <stdexcept>
#include <string>

namespace skyroute {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file; carries file and 1-based line number.
class ParseError : public Error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

    const std::string& file() const { return file_; }
    std::size_t line() const { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

// Inputs parsed fine but violate a domain invariant (duplicate ids,
// dangling endpoints, missing weather, infeasible parameters, ...).
class DataError : public Error {
public:
    using Error::Error;
};

} // namespace skyroute
