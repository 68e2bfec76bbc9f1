#pragma once

#include <stdexcept>
#include <string>

namespace regbal {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative fit stopped before reaching its gradient tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double gradient_norm)
        : Error(what), gradient_norm_(gradient_norm) {}

    double gradient_norm() const noexcept { return gradient_norm_; }

private:
    double gradient_norm_;
};

}  // namespace regbal
