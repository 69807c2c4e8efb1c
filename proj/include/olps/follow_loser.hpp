#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "olps/errors.hpp"
#include "olps/market_data.hpp"
#include "olps/simplex_math.hpp"
#include "olps/strategy.hpp"

namespace olps {

// ---------------------------------------------------------------------------
// Anticor: bet on positive lagged cross-correlation and negative
// auto-correlation between two adjacent windows of log relatives.
// ---------------------------------------------------------------------------

/// Transfer-claim matrix from two consecutive w x m windows of log relatives.
/// claim(i,j) > 0 proposes moving wealth from i to j; it fires only when i
/// out-performed j in the recent window and the lagged correlation is
/// positive. Zero-variance columns contribute zero correlation.
inline Matrix anticor_claims(const Matrix& y1, const Matrix& y2) {
    if (y1.rows() != y2.rows() || y1.cols() != y2.cols())
        throw std::invalid_argument("anticor_claims: window shapes differ");
    const Eigen::Index w = y1.rows();
    const Eigen::Index m = y1.cols();
    if (w < 2) throw std::invalid_argument("anticor_claims: window must have w >= 2");

    // Column means via a plain loop: identical columns must compare exactly
    // equal, which vectorized reductions do not guarantee.
    Vector mu1 = Vector::Zero(m);
    Vector mu2 = Vector::Zero(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index r = 0; r < w; ++r) {
            mu1(i) += y1(r, i);
            mu2(i) += y2(r, i);
        }
        mu1(i) /= static_cast<double>(w);
        mu2(i) /= static_cast<double>(w);
    }
    Matrix c1 = y1.rowwise() - mu1.transpose();
    Matrix c2 = y2.rowwise() - mu2.transpose();
    const Matrix mcov = (c1.transpose() * c2) / static_cast<double>(w - 1);
    const Vector sd1 = (c1.array().square().colwise().sum() / static_cast<double>(w - 1))
                           .sqrt()
                           .matrix()
                           .transpose();
    const Vector sd2 = (c2.array().square().colwise().sum() / static_cast<double>(w - 1))
                           .sqrt()
                           .matrix()
                           .transpose();

    Matrix mcor = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            if (sd1(i) > 0.0 && sd2(j) > 0.0) mcor(i, j) = mcov(i, j) / (sd1(i) * sd2(j));

    Matrix claims = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            if (i == j) continue;
            if (mu2(i) > mu2(j) && mcor(i, j) > 0.0)
                claims(i, j) =
                    mcor(i, j) - std::min(0.0, mcor(i, i)) - std::min(0.0, mcor(j, j));
        }
    return claims;
}

/// Apply the claims to the price-adjusted holdings: each asset splits its
/// outgoing transfer across its claims, so total outflow never exceeds the
/// holding itself.
inline Portfolio anticor_update(const Portfolio& b_hat, const Matrix& claims) {
    const Eigen::Index m = b_hat.size();
    if (claims.rows() != m || claims.cols() != m)
        throw std::invalid_argument("anticor_update: claim matrix of wrong size");
    Vector next = b_hat.weights();
    for (Eigen::Index i = 0; i < m; ++i) {
        const double row_sum = claims.row(i).sum();
        if (row_sum <= 0.0) continue;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (claims(i, j) <= 0.0) continue;
            const double transfer = b_hat[i] * claims(i, j) / row_sum;
            next(i) -= transfer;
            next(j) += transfer;
        }
    }
    return Portfolio(std::move(next));
}

class AnticorStrategy : public Strategy {
public:
    explicit AnticorStrategy(Eigen::Index window) : window_(window) {
        if (window < 2) throw std::invalid_argument("anticor: window must be >= 2");
    }

    void reset(Eigen::Index m) override {
        holdings_ = Portfolio::uniform(m);
        seen_ = 0;
    }

    Portfolio decide(const MarketWindow& past) override {
        while (seen_ < past.rows()) {
            holdings_ = price_adjusted(holdings_, past.row(seen_));
            ++seen_;
            if (seen_ >= 2 * window_) {
                Matrix y1(window_, past.assets());
                Matrix y2(window_, past.assets());
                for (Eigen::Index r = 0; r < window_; ++r) {
                    y1.row(r) = past.row(seen_ - 2 * window_ + r).array().log().matrix();
                    y2.row(r) = past.row(seen_ - window_ + r).array().log().matrix();
                }
                holdings_ = anticor_update(holdings_, anticor_claims(y1, y2));
            }
        }
        return holdings_;
    }

    std::string name() const override { return "anticor"; }

private:
    Eigen::Index window_;
    Portfolio holdings_ = Portfolio::uniform(1);
    Eigen::Index seen_ = 0;
};

// ---------------------------------------------------------------------------
// PAMR: passive-aggressive step away from last period's winners.
// ---------------------------------------------------------------------------

struct ReversionSpec {
    double epsilon = 0.5;
    Eigen::Index window = 5;    // OLMAR / RMR
    double aggressiveness = 0;  // PAMR slack trade-off C; 0 disables the variants
    int pamr_variant = 0;       // 0 plain, 1 tau capped at C, 2 soft denominator
};

/// epsilon-insensitive loss: zero while the expected return stays at or below
/// the reversion threshold, linear above it.
template <typename Derived>
inline double pamr_loss(const Portfolio& b, const Eigen::MatrixBase<Derived>& x, double eps) {
    if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("pamr: epsilon must be in [0,1]");
    const double ret = b.dot(x);
    return ret <= eps ? 0.0 : ret - eps;
}

template <typename Derived>
inline Portfolio pamr_update(const Portfolio& b, const Eigen::MatrixBase<Derived>& x,
                             const ReversionSpec& spec) {
    const Eigen::Index m = b.size();
    const double loss = pamr_loss(b, x, spec.epsilon);
    if (loss == 0.0) return b;

    Vector xv(m);
    for (Eigen::Index i = 0; i < m; ++i) xv(i) = x.derived()(i);
    const Vector dev = (xv.array() - xv.mean()).matrix();
    const double denom = dev.squaredNorm();
    if (denom == 0.0) return b;  // all assets moved together, no direction

    double tau;
    switch (spec.pamr_variant) {
        case 1:
            tau = std::min(spec.aggressiveness, loss / denom);
            break;
        case 2:
            tau = loss / (denom + 1.0 / (2.0 * spec.aggressiveness));
            break;
        default:
            tau = loss / denom;
    }
    return project_to_simplex(b.weights() - tau * dev);
}

class PamrStrategy : public Strategy {
public:
    explicit PamrStrategy(ReversionSpec spec) : spec_(spec) {
        if (spec.epsilon < 0.0 || spec.epsilon > 1.0)
            throw std::invalid_argument("pamr: epsilon must be in [0,1]");
        if (spec.pamr_variant != 0 && !(spec.aggressiveness > 0.0))
            throw std::invalid_argument("pamr: variants need aggressiveness C > 0");
    }

    void reset(Eigen::Index m) override {
        current_ = Portfolio::uniform(m);
        seen_ = 0;
    }

    Portfolio decide(const MarketWindow& past) override {
        while (seen_ < past.rows()) {
            current_ = pamr_update(current_, past.row(seen_), spec_);
            ++seen_;
        }
        return current_;
    }

    std::string name() const override { return "pamr"; }

private:
    ReversionSpec spec_;
    Portfolio current_ = Portfolio::uniform(1);
    Eigen::Index seen_ = 0;
};

// ---------------------------------------------------------------------------
// CWMR: Gaussian belief over the portfolio, tightened whenever the return
// confidence bound violates the reversion threshold.
// ---------------------------------------------------------------------------

/// Mean and diagonal covariance of the portfolio belief.
struct GaussianPortfolio {
    Vector mu;
    Vector sigma;  // diagonal entries, variance units

    static GaussianPortfolio initial(Eigen::Index m) {
        GaussianPortfolio g;
        g.mu = Vector::Constant(m, 1.0 / static_cast<double>(m));
        g.sigma = Vector::Constant(m, 1.0 / static_cast<double>(m * m));
        return g;
    }
};

template <typename Derived>
inline GaussianPortfolio cwmr_update(const GaussianPortfolio& g,
                                     const Eigen::MatrixBase<Derived>& x, double eps,
                                     double phi) {
    if (phi < 0.0) throw std::invalid_argument("cwmr: phi must be >= 0");
    const Eigen::Index m = g.mu.size();
    Vector xv(m);
    for (Eigen::Index i = 0; i < m; ++i) xv(i) = x.derived()(i);

    // Confidence-weighted average return and the update direction.
    const double xbar = g.sigma.dot(xv) / g.sigma.sum();
    const Vector dir = (g.sigma.array() * (xv.array() - xbar)).matrix();

    const auto residual = [&](double lambda) {
        const Vector mu = g.mu - lambda * dir;
        double quad = 0.0;
        for (Eigen::Index i = 0; i < m; ++i)
            quad += xv(i) * xv(i) / (1.0 / g.sigma(i) + 2.0 * lambda * phi * xv(i) * xv(i));
        return eps - mu.dot(xv) - phi * quad;
    };

    GaussianPortfolio next = g;
    if (dir.lpNorm<Eigen::Infinity>() < 1e-15) {
        // All assets moved together after weighting; nothing to revert against.
        return next;
    }
    if (residual(0.0) < 0.0) {
        // The residual is monotone increasing in lambda, so the root is found
        // by bisection. The bracket starts at 1e6 and doubles as needed: once
        // the variances have shrunk the tight-constraint multiplier can grow
        // far beyond any fixed bound.
        double lo = 0.0, hi = 1e6;
        while (residual(hi) < 0.0 && hi < 1e18) hi *= 2.0;
        if (residual(hi) < 0.0)
            throw ConvergenceError("cwmr_update: constraint not attainable", g.mu);
        for (int iter = 0; iter < 200 && hi - lo > 1e-14 * (1.0 + hi); ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (residual(mid) < 0.0)
                lo = mid;
            else
                hi = mid;
        }
        const double lambda = 0.5 * (lo + hi);
        next.mu = g.mu - lambda * dir;
        for (Eigen::Index i = 0; i < m; ++i)
            next.sigma(i) = std::max(
                1.0 / (1.0 / g.sigma(i) + 2.0 * lambda * phi * xv(i) * xv(i)), 1e-12);
    }
    next.mu = project_to_simplex(next.mu).weights();
    return next;
}

class CwmrStrategy : public Strategy {
public:
    CwmrStrategy(double eps, double phi) : eps_(eps), phi_(phi) {
        if (phi < 0.0) throw std::invalid_argument("cwmr: phi must be >= 0");
    }

    void reset(Eigen::Index m) override {
        state_ = GaussianPortfolio::initial(m);
        seen_ = 0;
    }

    Portfolio decide(const MarketWindow& past) override {
        while (seen_ < past.rows()) {
            state_ = cwmr_update(state_, past.row(seen_), eps_, phi_);
            ++seen_;
        }
        return Portfolio(state_.mu);
    }

    std::string name() const override { return "cwmr"; }

private:
    double eps_;
    double phi_;
    GaussianPortfolio state_ = GaussianPortfolio::initial(1);
    Eigen::Index seen_ = 0;
};

// ---------------------------------------------------------------------------
// OLMAR / RMR: predict the next price relative (moving average or L1-median,
// both expressed off the latest price), then take a passive-aggressive step
// toward the prediction.
// ---------------------------------------------------------------------------

/// Moving-average price prediction expressed as a relative of the latest
/// price: component-wise (1/w) * (1 + 1/x_t + 1/(x_t x_{t-1}) + ...). Uses at
/// most w-1 trailing relatives; shorter histories use what exists.
inline Vector olmar_predict(const MarketWindow& recent, Eigen::Index w) {
    if (w < 1) throw std::invalid_argument("olmar_predict: w must be >= 1");
    const Eigen::Index m = recent.assets();
    const Eigen::Index available = std::min<Eigen::Index>(w - 1, recent.rows());
    Vector xhat = Vector::Ones(m);  // k = 0 term
    Vector running = Vector::Ones(m);
    for (Eigen::Index k = 1; k <= available; ++k) {
        running = running.cwiseProduct(recent.row(recent.rows() - k).transpose());
        xhat += running.cwiseInverse();
    }
    return xhat / static_cast<double>(available + 1);
}

/// Passive-aggressive step toward a predicted relative: keep the portfolio if
/// it already clears the threshold, otherwise move just far enough along the
/// de-meaned prediction and project back.
inline Portfolio reversion_pa_step(const Portfolio& b, const Vector& xhat, double eps) {
    const double projected_return = b.dot(xhat);
    if (projected_return >= eps) return b;
    const Vector dev = (xhat.array() - xhat.mean()).matrix();
    const double denom = dev.squaredNorm();
    if (denom == 0.0) return b;
    const double tau = (eps - projected_return) / denom;
    return project_to_simplex(b.weights() + tau * dev);
}

struct L1MedianResult {
    Vector point;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;
};

inline double l1_objective(const std::vector<Vector>& points, const Vector& mu) {
    double obj = 0.0;
    for (const auto& p : points) obj += (p - mu).norm();
    return obj;
}

/// Geometric median by the modified Weiszfeld iteration, started from the
/// coordinate-wise mean. Distances below 1e-12 are floored at 1e-10 so an
/// iterate sitting on a data point cannot divide by zero.
inline L1MedianResult l1_median(const std::vector<Vector>& points, double tol = 1e-9,
                                int max_iter = 2000) {
    if (points.empty()) throw std::invalid_argument("l1_median: no points");
    const Eigen::Index m = points.front().size();

    L1MedianResult res;
    res.point = Vector::Zero(m);
    for (const auto& p : points) res.point += p;
    res.point /= static_cast<double>(points.size());
    res.objective_trace.push_back(l1_objective(points, res.point));

    for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
        Vector num = Vector::Zero(m);
        double den = 0.0;
        for (const auto& p : points) {
            double d = (p - res.point).norm();
            if (d < 1e-12) d += 1e-10;
            num += p / d;
            den += 1.0 / d;
        }
        const Vector next = num / den;
        const double step = (next - res.point).norm();
        res.point = next;
        res.objective_trace.push_back(l1_objective(points, res.point));
        if (step < tol) {
            res.converged = true;
            ++res.iterations;
            break;
        }
    }
    if (!res.converged)
        throw ConvergenceError("l1_median: no convergence in " + std::to_string(max_iter) +
                                   " iterations",
                               res.point);
    return res;
}

/// Median-based price prediction as a relative of the latest price. Prices
/// are reconstructed from the trailing relatives and normalized so the latest
/// price is 1; the L1-median is positively homogeneous, so the ratio is
/// unchanged.
inline Vector rmr_predict(const MarketWindow& recent, Eigen::Index w, double tol = 1e-9,
                          int max_iter = 2000) {
    if (w < 2) throw std::invalid_argument("rmr_predict: w must be >= 2");
    const Eigen::Index m = recent.assets();
    const Eigen::Index available = std::min<Eigen::Index>(w - 1, recent.rows());
    std::vector<Vector> prices;
    prices.reserve(static_cast<std::size_t>(available) + 1);
    prices.push_back(Vector::Ones(m));  // latest price, normalized
    Vector running = Vector::Ones(m);
    for (Eigen::Index k = 1; k <= available; ++k) {
        running = running.cwiseProduct(recent.row(recent.rows() - k).transpose());
        prices.push_back(running.cwiseInverse());
    }
    return l1_median(prices, tol, max_iter).point;
}

enum class ReversionPredictor { moving_average, l1_median };

/// OLMAR and RMR share everything except the predictor.
class MovingReversionStrategy : public Strategy {
public:
    MovingReversionStrategy(ReversionPredictor predictor, double eps, Eigen::Index window)
        : predictor_(predictor), eps_(eps), window_(window) {
        if (eps < 1.0) throw std::invalid_argument("reversion threshold must be >= 1");
        if (window < 2) throw std::invalid_argument("window must be >= 2");
    }

    void reset(Eigen::Index m) override {
        current_ = Portfolio::uniform(m);
        seen_ = 0;
    }

    Portfolio decide(const MarketWindow& past) override {
        while (seen_ < past.rows()) {
            ++seen_;
            if (seen_ < window_) continue;  // warm-up: stay uniform
            const MarketWindow upto = past.head(seen_);
            const Vector xhat = predictor_ == ReversionPredictor::moving_average
                                    ? olmar_predict(upto, window_)
                                    : rmr_predict(upto, window_);
            current_ = reversion_pa_step(current_, xhat, eps_);
        }
        return current_;
    }

    std::string name() const override {
        return predictor_ == ReversionPredictor::moving_average ? "olmar" : "rmr";
    }

private:
    ReversionPredictor predictor_;
    double eps_;
    Eigen::Index window_;
    Portfolio current_ = Portfolio::uniform(1);
    Eigen::Index seen_ = 0;
};

}  // namespace olps
