#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "olps/errors.hpp"
#include "olps/market_data.hpp"

namespace olps {

namespace simplex_detail {
constexpr double kWeightFloor = -1e-12;  // tolerated negative rounding noise
constexpr double kSumTol = 1e-9;
}  // namespace simplex_detail

/// A point on the probability simplex: non-negative weights summing to one.
/// Construction validates and then cleans up rounding noise (clamps tiny
/// negatives, renormalizes), so a Portfolio in hand is always feasible.
class Portfolio {
public:
    explicit Portfolio(Vector weights) : w_(std::move(weights)) {
        if (w_.size() < 1) throw std::invalid_argument("portfolio must have at least 1 asset");
        double sum = 0.0;
        for (Eigen::Index i = 0; i < w_.size(); ++i) {
            const double v = w_(i);
            if (!std::isfinite(v)) throw std::invalid_argument("portfolio weight not finite");
            if (v < simplex_detail::kWeightFloor)
                throw std::invalid_argument("portfolio weight " + std::to_string(v) +
                                            " below zero");
            sum += v;
        }
        if (std::abs(sum - 1.0) > simplex_detail::kSumTol)
            throw std::invalid_argument("portfolio weights sum to " + std::to_string(sum) +
                                        ", expected 1");
        w_ = w_.cwiseMax(0.0);
        w_ /= w_.sum();
    }

    static Portfolio uniform(Eigen::Index m) {
        return Portfolio(Vector::Constant(m, 1.0 / static_cast<double>(m)));
    }

    /// All capital on asset i.
    static Portfolio vertex(Eigen::Index m, Eigen::Index i) {
        Vector w = Vector::Zero(m);
        w(i) = 1.0;
        return Portfolio(std::move(w));
    }

    Eigen::Index size() const { return w_.size(); }
    const Vector& weights() const { return w_; }
    double operator[](Eigen::Index i) const { return w_(i); }

    template <typename Derived>
    double dot(const Eigen::MatrixBase<Derived>& x) const {
        return w_.dot(x.derived());
    }

    bool operator==(const Portfolio& other) const { return w_ == other.w_; }

private:
    Vector w_;
};

/// Holdings after the market moves: b weighted by x and renormalized. This is
/// the portfolio one actually owns just before rebalancing.
template <typename Derived>
inline Portfolio price_adjusted(const Portfolio& b, const Eigen::MatrixBase<Derived>& x) {
    Vector h(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) h(i) = b[i] * x.derived()(i);
    return Portfolio(h / h.sum());
}

/// Euclidean projection onto the simplex (the usual sort-and-threshold rule).
/// Unique minimizer of ||w - v|| over feasible w.
inline Portfolio project_to_simplex(const Vector& v) {
    const Eigen::Index m = v.size();
    if (m < 1) throw std::invalid_argument("project_to_simplex: empty vector");
    for (Eigen::Index i = 0; i < m; ++i)
        if (!std::isfinite(v(i)))
            throw std::invalid_argument("project_to_simplex: non-finite input");

    std::vector<double> u(v.data(), v.data() + m);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double csum = 0.0;
    double theta = 0.0;
    Eigen::Index rho = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
        csum += u[static_cast<std::size_t>(j)];
        const double cand = (csum - 1.0) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] - cand > 0.0) {
            rho = j + 1;
            theta = cand;
        }
    }
    (void)rho;
    Vector w = (v.array() - theta).cwiseMax(0.0);
    return Portfolio(w / w.sum());
}

/// A discrete distribution over next-period price relatives: scenarios x_i
/// with probabilities p_i. This is the input to the expected-log maximizer.
class ScenarioSet {
public:
    ScenarioSet(Matrix scenarios, Vector probabilities)
        : x_(std::move(scenarios)), p_(std::move(probabilities)) {
        if (x_.rows() < 1) throw std::invalid_argument("scenario set must be non-empty");
        if (p_.size() != x_.rows())
            throw std::invalid_argument("scenario/probability count mismatch");
        double sum = 0.0;
        for (Eigen::Index i = 0; i < p_.size(); ++i) {
            if (p_(i) < 0.0) throw std::invalid_argument("scenario probability < 0");
            sum += p_(i);
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("scenario probabilities must sum to 1");
        for (Eigen::Index i = 0; i < x_.rows(); ++i)
            for (Eigen::Index j = 0; j < x_.cols(); ++j)
                if (!(x_(i, j) > 0.0) || !std::isfinite(x_(i, j)))
                    throw std::invalid_argument("scenario entries must be positive and finite");
    }

    /// Equal-probability scenarios taken from observed market rows.
    static ScenarioSet uniform_over(const MarketWindow& window) {
        if (window.empty()) throw std::invalid_argument("scenario set must be non-empty");
        Matrix x(window.rows(), window.assets());
        for (Eigen::Index i = 0; i < window.rows(); ++i) x.row(i) = window.row(i);
        return ScenarioSet(std::move(x),
                           Vector::Constant(window.rows(), 1.0 / static_cast<double>(window.rows())));
    }

    Eigen::Index count() const { return x_.rows(); }
    Eigen::Index assets() const { return x_.cols(); }
    auto scenario(Eigen::Index i) const { return x_.row(i); }
    double probability(Eigen::Index i) const { return p_(i); }
    const Matrix& scenarios() const { return x_; }
    const Vector& probabilities() const { return p_; }

private:
    Matrix x_;
    Vector p_;
};

struct SolveOptions {
    double tol = 1e-10;
    int max_iter = 10000;
};

struct SolveResult {
    Vector x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Projected gradient ascent with backtracking over the simplex. Shared by
/// the Kelly solver, the regularized-leader objective, the pattern-matching
/// utilities, and the ONS generalized projection. Starts at the uniform
/// portfolio, which doubles as the tie-break: on flat objectives the iterate
/// simply never moves.
inline SolveResult maximize_on_simplex(const std::function<double(const Vector&)>& value,
                                       const std::function<Vector(const Vector&)>& gradient,
                                       Eigen::Index m, SolveOptions opts = {}) {
    SolveResult res;
    res.x = Vector::Constant(m, 1.0 / static_cast<double>(m));
    res.value = value(res.x);
    double step = 1.0;
    int stall = 0;
    for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
        const Vector g = gradient(res.x);
        double trial = step * 2.0;
        bool moved = false;
        while (trial > 1e-18) {
            const Vector cand = project_to_simplex(res.x + trial * g).weights();
            const double dist2 = (cand - res.x).squaredNorm();
            if (dist2 == 0.0) break;  // stationary under this step size
            const double cand_value = value(cand);
            if (cand_value >= res.value + 1e-4 * dist2 / trial) {
                const double gain = cand_value - res.value;
                res.x = cand;
                res.value = cand_value;
                step = trial;
                moved = true;
                stall = gain <= opts.tol * (1.0 + std::abs(res.value)) ? stall + 1 : 0;
                break;
            }
            trial *= 0.5;
        }
        if (!moved || stall >= 3) {
            res.converged = true;
            ++res.iterations;
            break;
        }
    }
    return res;
}

/// Weighted log-optimal (Kelly) portfolio: argmax over the simplex of
/// sum_i p_i log(b . x_i). Concave and smooth on the interior, so projected
/// gradient ascent from uniform does the job.
inline Portfolio log_optimal(const ScenarioSet& scen, double tol = 1e-10, int max_iter = 10000) {
    const Eigen::Index m = scen.assets();
    const auto value = [&scen](const Vector& b) {
        double obj = 0.0;
        for (Eigen::Index i = 0; i < scen.count(); ++i) {
            double r = scen.scenario(i).dot(b);
            r = std::max(r, 1e-12);  // interior guard; r > 0 on the simplex anyway
            obj += scen.probability(i) * std::log(r);
        }
        return obj;
    };
    const auto gradient = [&scen, m](const Vector& b) {
        Vector g = Vector::Zero(m);
        for (Eigen::Index i = 0; i < scen.count(); ++i) {
            double r = scen.scenario(i).dot(b);
            r = std::max(r, 1e-12);
            g += (scen.probability(i) / r) * scen.scenario(i).transpose();
        }
        return g;
    };
    SolveOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    const SolveResult res = maximize_on_simplex(value, gradient, m, opts);
    if (!res.converged)
        throw ConvergenceError("log_optimal: no convergence in " + std::to_string(max_iter) +
                                   " iterations",
                               res.x);
    return Portfolio(res.x);
}

/// Wealth of holding a fixed portfolio through a window, rebalancing every
/// period: product over t of b . x_t, starting from 1.
inline double crp_wealth(const Portfolio& b, const MarketWindow& window) {
    if (!window.empty() && window.assets() != b.size())
        throw std::invalid_argument("crp_wealth: dimension mismatch");
    double wealth = 1.0;
    for (Eigen::Index t = 0; t < window.rows(); ++t) wealth *= window.row(t).dot(b.weights());
    return wealth;
}

inline double crp_wealth(const Portfolio& b, const PriceRelativeSequence& seq) {
    return crp_wealth(b, MarketWindow::prefix(seq, seq.periods()));
}

/// Exponential growth rate (1/n) log S_n.
inline double growth_rate(double wealth, Eigen::Index n) {
    if (!(wealth > 0.0)) throw std::invalid_argument("growth_rate: wealth must be > 0");
    if (n < 1) throw std::invalid_argument("growth_rate: n must be >= 1");
    return std::log(wealth) / static_cast<double>(n);
}

}  // namespace olps
