#pragma once

#include <stdexcept>
#include <string>

namespace capest {

// Argument outside a function's mathematical domain.
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& msg) : std::invalid_argument(msg) {}
};

// An iterative scheme exhausted its iteration budget.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& msg, int iterations)
        : std::runtime_error(msg + " after " + std::to_string(iterations) + " iterations"),
          iterations_(iterations) {}

    int iterations() const noexcept { return iterations_; }

private:
    int iterations_;
};

// Malformed or inconsistent input data (files, labels, embeddings).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace capest
