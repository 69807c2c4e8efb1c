#pragma once

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "olps/errors.hpp"
#include "olps/market_data.hpp"
#include "olps/simplex_math.hpp"
#include "olps/strategy.hpp"

namespace olps {

// ---------------------------------------------------------------------------
// Universal portfolio: buy and hold a population of CRP managers and report
// their wealth-weighted average portfolio.
// ---------------------------------------------------------------------------

struct UPSpec {
    enum class Mode { grid, monte_carlo };
    enum class Prior { uniform, dirichlet_half };

    Mode mode = Mode::grid;
    double grid_step = 0.05;
    Eigen::Index samples = 10000;
    std::uint64_t seed = 20120704;
    Prior prior = Prior::uniform;
    std::vector<Vector> custom_nodes;  // overrides mode/step when non-empty

    void validate() const {
        if (grid_step <= 0.0 || grid_step > 1.0)
            throw std::invalid_argument("up: grid_step must lie in (0, 1]");
        if (samples < 1) throw std::invalid_argument("up: samples must be >= 1");
    }
};

namespace up_detail {

/// All lattice points (k_1/K, ..., k_m/K) with sum k_i = K.
inline std::vector<Vector> simplex_grid(Eigen::Index m, double step) {
    const int k = std::max(1, static_cast<int>(std::lround(1.0 / step)));
    std::vector<Vector> nodes;
    std::vector<int> counts(static_cast<std::size_t>(m), 0);
    const std::function<void(Eigen::Index, int)> recurse = [&](Eigen::Index coord, int left) {
        if (coord == m - 1) {
            counts[static_cast<std::size_t>(coord)] = left;
            Vector b(m);
            for (Eigen::Index i = 0; i < m; ++i)
                b(i) = static_cast<double>(counts[static_cast<std::size_t>(i)]) / k;
            nodes.push_back(std::move(b));
            return;
        }
        for (int c = 0; c <= left; ++c) {
            counts[static_cast<std::size_t>(coord)] = c;
            recurse(coord + 1, left - c);
        }
    };
    recurse(0, k);
    return nodes;
}

inline std::vector<Vector> dirichlet_draws(Eigen::Index m, Eigen::Index count, double alpha,
                                           std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> gamma(alpha, 1.0);
    std::vector<Vector> nodes;
    nodes.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index s = 0; s < count; ++s) {
        Vector b(m);
        double sum = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            b(i) = std::max(gamma(rng), 1e-300);
            sum += b(i);
        }
        nodes.push_back(b / sum);
    }
    return nodes;
}

inline std::vector<Vector> make_nodes(Eigen::Index m, const UPSpec& spec) {
    if (!spec.custom_nodes.empty()) {
        for (const auto& node : spec.custom_nodes)
            if (node.size() != m) throw std::invalid_argument("up: custom node of wrong size");
        return spec.custom_nodes;
    }
    if (spec.mode == UPSpec::Mode::grid) {
        if (spec.prior == UPSpec::Prior::dirichlet_half)
            throw std::invalid_argument("up: dirichlet prior needs monte_carlo mode");
        return simplex_grid(m, spec.grid_step);
    }
    const double alpha = spec.prior == UPSpec::Prior::dirichlet_half ? 0.5 : 1.0;
    return dirichlet_draws(m, spec.samples, alpha, spec.seed);
}

}  // namespace up_detail

/// Wealth-weighted mixture over the CRP population after the given history.
/// Wealth is tracked in log space so long histories cannot underflow.
inline Portfolio up_decide(const MarketWindow& history, const UPSpec& spec) {
    spec.validate();
    const Eigen::Index m = history.assets();
    if (m < 1) throw std::invalid_argument("up_decide: window has no asset count");
    if (history.empty()) return Portfolio::uniform(m);

    const auto nodes = up_detail::make_nodes(m, spec);
    std::vector<double> logw(nodes.size(), 0.0);
    for (std::size_t k = 0; k < nodes.size(); ++k)
        for (Eigen::Index t = 0; t < history.rows(); ++t)
            logw[k] += std::log(std::max(history.row(t).dot(nodes[k]), 1e-300));

    const double peak = *std::max_element(logw.begin(), logw.end());
    Vector mix = Vector::Zero(m);
    double total = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double w = std::exp(logw[k] - peak);
        mix += w * nodes[k];
        total += w;
    }
    if (!(total > 0.0)) throw std::runtime_error("up_decide: all manager wealths underflowed");
    return Portfolio(mix / total);
}

/// Average of the CRP managers' final wealth. Under zero transaction costs
/// this equals the backtested wealth of the mixture strategy exactly.
inline double up_wealth_identity(const MarketWindow& history, const UPSpec& spec) {
    spec.validate();
    const Eigen::Index m = history.assets();
    const auto nodes = up_detail::make_nodes(m, spec);
    std::vector<double> logw(nodes.size(), 0.0);
    for (std::size_t k = 0; k < nodes.size(); ++k)
        for (Eigen::Index t = 0; t < history.rows(); ++t)
            logw[k] += std::log(std::max(history.row(t).dot(nodes[k]), 1e-300));
    const double peak = *std::max_element(logw.begin(), logw.end());
    double total = 0.0;
    for (double lw : logw) total += std::exp(lw - peak);
    return std::exp(peak) * total / static_cast<double>(nodes.size());
}

class UniversalPortfolioStrategy : public Strategy {
public:
    /// auto_mode picks the discretization per market size at reset: the grid
    /// for m <= 3, Monte Carlo draws from the prior otherwise.
    explicit UniversalPortfolioStrategy(UPSpec spec, bool auto_mode = false)
        : spec_(spec), auto_mode_(auto_mode) {
        spec_.validate();
    }

    void reset(Eigen::Index m) override {
        if (auto_mode_)
            spec_.mode = m <= 3 ? UPSpec::Mode::grid : UPSpec::Mode::monte_carlo;
        nodes_ = up_detail::make_nodes(m, spec_);
        logw_.assign(nodes_.size(), 0.0);
        seen_ = 0;
    }

    Portfolio decide(const MarketWindow& past) override {
        const Eigen::Index m = past.assets() ? past.assets() : nodes_.front().size();
        while (seen_ < past.rows()) {
            for (std::size_t k = 0; k < nodes_.size(); ++k)
                logw_[k] += std::log(std::max(past.row(seen_).dot(nodes_[k]), 1e-300));
            ++seen_;
        }
        if (seen_ == 0) return Portfolio::uniform(m);
        const double peak = *std::max_element(logw_.begin(), logw_.end());
        Vector mix = Vector::Zero(m);
        double total = 0.0;
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            const double w = std::exp(logw_[k] - peak);
            mix += w * nodes_[k];
            total += w;
        }
        return Portfolio(mix / total);
    }

    std::string name() const override { return "up"; }

private:
    UPSpec spec_;
    bool auto_mode_ = false;
    std::vector<Vector> nodes_;
    std::vector<double> logw_;
    Eigen::Index seen_ = 0;
};

// ---------------------------------------------------------------------------
// First-order updates driven by last period's return gradient x / (b.x).
// ---------------------------------------------------------------------------

enum class GradientMode { EG, GP, EM };

/// One step of the exponential-gradient family. EG is multiplicative and
/// stays feasible by itself; GP and EM are additive first-order versions and
/// get projected back when a weight dips below zero.
template <typename Derived>
inline Portfolio gradient_family_update(const Portfolio& b, const Eigen::MatrixBase<Derived>& x,
                                        double eta, GradientMode mode) {
    if (!(eta > 0.0)) throw std::invalid_argument("gradient update: eta must be > 0");
    const Eigen::Index m = b.size();
    const double ret = b.dot(x);
    if (!(ret > 0.0)) throw std::invalid_argument("gradient update: b.x must be > 0");

    Vector g(m);
    for (Eigen::Index i = 0; i < m; ++i) g(i) = x.derived()(i) / ret;

    Vector next(m);
    switch (mode) {
        case GradientMode::EG: {
            for (Eigen::Index i = 0; i < m; ++i) next(i) = b[i] * std::exp(eta * g(i));
            return Portfolio(next / next.sum());
        }
        case GradientMode::GP: {
            const double mean = g.mean();
            for (Eigen::Index i = 0; i < m; ++i) next(i) = b[i] + eta * (g(i) - mean);
            break;
        }
        case GradientMode::EM: {
            for (Eigen::Index i = 0; i < m; ++i) next(i) = b[i] * (eta * (g(i) - 1.0) + 1.0);
            break;
        }
    }
    if (next.minCoeff() < 0.0) return project_to_simplex(next);
    return Portfolio(next / next.sum());
}

class GradientFamilyStrategy : public Strategy {
public:
    GradientFamilyStrategy(GradientMode mode, double eta) : mode_(mode), eta_(eta) {
        if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
    }

    void reset(Eigen::Index m) override {
        current_ = Portfolio::uniform(m);
        seen_ = 0;
    }

    Portfolio decide(const MarketWindow& past) override {
        while (seen_ < past.rows()) {
            current_ = gradient_family_update(current_, past.row(seen_), eta_, mode_);
            ++seen_;
        }
        return current_;
    }

    std::string name() const override {
        switch (mode_) {
            case GradientMode::EG: return "eg";
            case GradientMode::GP: return "gp";
            default: return "em";
        }
    }

private:
    GradientMode mode_;
    double eta_;
    Portfolio current_ = Portfolio::uniform(1);
    Eigen::Index seen_ = 0;
};

// ---------------------------------------------------------------------------
// Follow-the-leader family: chase the hindsight CRP of the data so far.
// ---------------------------------------------------------------------------

struct FTLVariant {
    enum class Kind { FTL, SCRP, WSCRP, VRP, MixedOrdentlich };

    Kind kind = Kind::FTL;
    double gamma = 0.5;        // WSCRP blend toward the previous portfolio
    Eigen::Index window = 10;  // VRP sliding window

    void validate() const {
        if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("wscrp: gamma in [0,1]");
        if (window < 1) throw std::invalid_argument("vrp: window must be >= 1");
    }
};

/// Portfolio for the next period given full history and the previous
/// decision. Empty history falls back to uniform.
inline Portfolio follow_leader_decide(const MarketWindow& history, const FTLVariant& variant,
                                      const Portfolio& prev) {
    variant.validate();
    const Eigen::Index m = prev.size();
    if (history.empty()) return Portfolio::uniform(m);

    const auto leader = [&](const MarketWindow& win) {
        return log_optimal(ScenarioSet::uniform_over(win));
    };

    switch (variant.kind) {
        case FTLVariant::Kind::FTL:
        case FTLVariant::Kind::SCRP:
            return leader(history);
        case FTLVariant::Kind::WSCRP: {
            const Vector star = leader(history).weights();
            return Portfolio((1.0 - variant.gamma) * star + variant.gamma * prev.weights());
        }
        case FTLVariant::Kind::VRP:
            return leader(history.tail(variant.window));
        case FTLVariant::Kind::MixedOrdentlich: {
            const double t = static_cast<double>(history.rows());
            const Vector star = leader(history).weights();
            const Vector uni = Vector::Constant(m, 1.0 / static_cast<double>(m));
            return Portfolio((t / (t + 1.0)) * star + (1.0 / (t + 1.0)) * uni);
        }
    }
    throw std::logic_error("unreachable");
}

class FollowLeaderStrategy : public Strategy {
public:
    FollowLeaderStrategy(FTLVariant variant, std::string name)
        : variant_(variant), name_(std::move(name)) {
        variant_.validate();
    }

    void reset(Eigen::Index m) override { prev_ = Portfolio::uniform(m); }

    Portfolio decide(const MarketWindow& past) override {
        prev_ = follow_leader_decide(past, variant_, prev_);
        return prev_;
    }

    std::string name() const override { return name_; }

private:
    FTLVariant variant_;
    Portfolio prev_ = Portfolio::uniform(1);
    std::string name_;
};

// ---------------------------------------------------------------------------
// Online Newton step: second-order statistics plus a generalized projection.
// ---------------------------------------------------------------------------

struct ONSState {
    Matrix A;  // I + sum of xx^T / (b.x)^2, symmetric positive definite
    Vector p;  // (1 + 1/beta) * sum of x / (b.x)
    double beta = 1.0;
    double delta = 0.125;

    void init(Eigen::Index m) {
        A = Matrix::Identity(m, m);
        p = Vector::Zero(m);
    }
};

/// Projection of y onto the simplex in the norm induced by SPD matrix A:
/// argmin over q of (q - y)^T A (q - y).
inline Portfolio generalized_projection(const Matrix& A, const Vector& y, double tol = 1e-10,
                                        int max_iter = 10000) {
    const Eigen::Index m = y.size();
    const auto value = [&](const Vector& q) {
        const Vector d = q - y;
        return -d.dot(A * d);
    };
    const auto gradient = [&](const Vector& q) { return Vector(-2.0 * (A * (q - y))); };
    SolveOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    const SolveResult res = maximize_on_simplex(value, gradient, m, opts);
    if (!res.converged)
        throw ConvergenceError("generalized_projection: no convergence", res.x);
    return Portfolio(res.x);
}

/// Accumulate one revealed period into the Newton statistics and produce the
/// next portfolio.
template <typename Derived>
inline std::pair<ONSState, Portfolio> ons_update(ONSState state, const Portfolio& b,
                                                 const Eigen::MatrixBase<Derived>& x) {
    const Eigen::Index m = b.size();
    Vector xv(m);
    for (Eigen::Index i = 0; i < m; ++i) xv(i) = x.derived()(i);
    const double ret = b.dot(xv);
    if (!(ret > 0.0)) throw std::invalid_argument("ons_update: b.x must be > 0");

    state.A += (xv * xv.transpose()) / (ret * ret);
    state.p += (1.0 + 1.0 / state.beta) * xv / ret;

    const Vector target = state.delta * state.A.ldlt().solve(state.p);
    Portfolio next = generalized_projection(state.A, target);
    return {std::move(state), std::move(next)};
}

class OnlineNewtonStepStrategy : public Strategy {
public:
    OnlineNewtonStepStrategy(double beta, double delta) : beta_(beta), delta_(delta) {
        if (!(beta > 0.0)) throw std::invalid_argument("ons: beta must be > 0");
        if (!(delta > 0.0)) throw std::invalid_argument("ons: delta must be > 0");
    }

    void reset(Eigen::Index m) override {
        state_.beta = beta_;
        state_.delta = delta_;
        state_.init(m);
        current_ = Portfolio::uniform(m);
        seen_ = 0;
    }

    Portfolio decide(const MarketWindow& past) override {
        while (seen_ < past.rows()) {
            auto [next_state, next] = ons_update(std::move(state_), current_, past.row(seen_));
            state_ = std::move(next_state);
            current_ = std::move(next);
            ++seen_;
        }
        return current_;
    }

    std::string name() const override { return "ons"; }

private:
    double beta_;
    double delta_;
    ONSState state_;
    Portfolio current_ = Portfolio::uniform(1);
    Eigen::Index seen_ = 0;
};

// ---------------------------------------------------------------------------
// Follow-the-regularized-leader with an L2 term, solved directly each period.
// ---------------------------------------------------------------------------

/// argmax over the simplex of sum_tau log(b . x_tau) - 0.5 ||b||^2.
inline Portfolio expconcave_ftl_decide(const MarketWindow& history, double tol = 1e-10,
                                       int max_iter = 10000) {
    const Eigen::Index m = history.assets();
    if (history.empty()) return Portfolio::uniform(m);
    const auto value = [&](const Vector& b) {
        double obj = -0.5 * b.squaredNorm();
        for (Eigen::Index t = 0; t < history.rows(); ++t)
            obj += std::log(std::max(history.row(t).dot(b), 1e-12));
        return obj;
    };
    const auto gradient = [&](const Vector& b) {
        Vector g = -b;
        for (Eigen::Index t = 0; t < history.rows(); ++t) {
            const double r = std::max(history.row(t).dot(b), 1e-12);
            g += history.row(t).transpose() / r;
        }
        return g;
    };
    SolveOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    const SolveResult res = maximize_on_simplex(value, gradient, m, opts);
    if (!res.converged) throw ConvergenceError("expconcave_ftl: no convergence", res.x);
    return Portfolio(res.x);
}

class ExpConcaveFTLStrategy : public Strategy {
public:
    void reset(Eigen::Index m) override { m_ = m; }
    Portfolio decide(const MarketWindow& past) override {
        if (past.empty()) return Portfolio::uniform(m_);
        return expconcave_ftl_decide(past);
    }
    std::string name() const override { return "expconcave_ftl"; }

private:
    Eigen::Index m_ = 1;
};

// ---------------------------------------------------------------------------
// Switching portfolios: geometric switching prior collapses to an affine pull
// toward uniform.
// ---------------------------------------------------------------------------

inline Portfolio switching_portfolio_update(const Portfolio& b, double gamma) {
    const Eigen::Index m = b.size();
    if (m < 2) throw std::invalid_argument("switching portfolio needs at least 2 assets");
    if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("sp: gamma must be in [0,1)");
    const double shift = gamma / static_cast<double>(m - 1);
    Vector next = (1.0 - gamma - shift) * b.weights() + Vector::Constant(m, shift);
    return Portfolio(std::move(next));
}

class SwitchingPortfolioStrategy : public Strategy {
public:
    explicit SwitchingPortfolioStrategy(double gamma) : gamma_(gamma) {
        if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("sp: gamma must be in [0,1)");
    }

    void reset(Eigen::Index m) override {
        current_ = Portfolio::uniform(m);
        seen_ = 0;
    }

    Portfolio decide(const MarketWindow& past) override {
        // The update is applied to the decision portfolio each period, as the
        // survey states it; the original formulation adjusts holdings first.
        while (seen_ < past.rows()) {
            current_ = switching_portfolio_update(current_, gamma_);
            ++seen_;
        }
        return current_;
    }

    std::string name() const override { return "sp"; }

private:
    double gamma_;
    Portfolio current_ = Portfolio::uniform(1);
    Eigen::Index seen_ = 0;
};

}  // namespace olps
