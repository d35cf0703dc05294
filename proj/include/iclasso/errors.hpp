#pragma once

#include <stdexcept>
#include <string>

namespace iclasso {

/// Bad user-supplied configuration (dimensions, ranges, flags).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite values, failed factorizations and similar numerical breakdowns.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A column with zero norm makes the unpenalized coordinate problem ill-posed.
class DegenerateColumnError : public NumericError {
public:
    DegenerateColumnError(std::size_t column)
        : NumericError("column " + std::to_string(column) + " has zero norm and lambda is 0"),
          column_(column) {}
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

} // namespace iclasso
