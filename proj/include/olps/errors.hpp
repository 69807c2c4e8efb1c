#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace olps {

/// Malformed input data (bad cell, ragged row, unreadable file).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t row = 0, std::size_t column = 0)
        : std::runtime_error(what), row_(row), column_(column) {}

    /// 1-based position of the offending cell; 0 when not applicable.
    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

/// An iterative solver ran out of iterations. Carries the best iterate found.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, Eigen::VectorXd best)
        : std::runtime_error(what), best_iterate_(std::move(best)) {}

    const Eigen::VectorXd& best_iterate() const noexcept { return best_iterate_; }

private:
    Eigen::VectorXd best_iterate_;
};

/// A strategy broke the backtest contract (infeasible portfolio, bad shape).
class ContractViolation : public std::runtime_error {
public:
    ContractViolation(const std::string& what, std::size_t period)
        : std::runtime_error(what + " (period " + std::to_string(period) + ")"),
          period_(period) {}

    std::size_t period() const noexcept { return period_; }

private:
    std::size_t period_;
};

}  // namespace olps
