#ifndef NERAE_ERROR_HPP
#define NERAE_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nerae {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform for a differentiable primitive.
class ShapeError : public Error
{
public:
    using Error::Error;
};

/// Malformed input text. Carries the 1-based line number when known.
class ParseError : public Error
{
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line)
    {
    }

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ConfigError : public Error
{
public:
    using Error::Error;
};

/// A NaN or Inf appeared where finite values are required.
class NumericError : public Error
{
public:
    using Error::Error;
};

} // namespace nerae

#endif // NERAE_ERROR_HPP
