#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace regbal {

/// Neumaier-compensated accumulator. Terms must be added in a fixed order
/// for results to be reproducible.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            carry_ += (sum_ - t) + x;
        } else {
            carry_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    double value() const noexcept { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

/// Sum of term(i) for i = 0..n-1 in ascending index order.
template <class Term>
double compensated_sum(std::ptrdiff_t n, Term&& term) {
    CompensatedSum acc;
    for (std::ptrdiff_t i = 0; i < n; ++i) acc.add(term(i));
    return acc.value();
}

template <class Term>
double compensated_mean(std::ptrdiff_t n, Term&& term) {
    return compensated_sum(n, term) / static_cast<double>(n);
}

inline double compensated_sum(std::span<const double> xs) {
    CompensatedSum acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

}  // namespace regbal
