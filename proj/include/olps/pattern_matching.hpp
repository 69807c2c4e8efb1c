#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "olps/backtest.hpp"
#include "olps/errors.hpp"
#include "olps/market_data.hpp"
#include "olps/simplex_math.hpp"
#include "olps/strategy.hpp"

namespace olps {

// ---------------------------------------------------------------------------
// Step 1: find historical periods whose preceding window looks like the
// latest one.
// ---------------------------------------------------------------------------

/// Periods whose price relatives are treated as samples of the next one,
/// with their sampling probabilities.
struct SimilaritySet {
    std::vector<Eigen::Index> indices;  // 1-based, strictly increasing, each in (w, t]
    Vector probabilities;

    bool empty() const { return indices.empty(); }
    std::size_t size() const { return indices.size(); }
};

struct SelectorSpec {
    enum class Method { histogram, kernel, nearest_neighbor, correlation };

    Method method = Method::kernel;
    Eigen::Index w = 5;
    Eigen::Index bins = 4;        // histogram
    double radius = 1.0;          // kernel
    Eigen::Index neighbors = 10;  // nearest neighbor
    double rho = 0.1;             // correlation

    void validate() const {
        if (w < 1) throw std::invalid_argument("selector: w must be >= 1");
        switch (method) {
            case Method::histogram:
                if (bins < 1) throw std::invalid_argument("selector: bins must be >= 1");
                break;
            case Method::kernel:
                if (!(radius > 0.0)) throw std::invalid_argument("selector: radius must be > 0");
                break;
            case Method::nearest_neighbor:
                if (neighbors < 1)
                    throw std::invalid_argument("selector: neighbors must be >= 1");
                break;
            case Method::correlation:
                if (rho <= -1.0 || rho > 1.0)
                    throw std::invalid_argument("selector: rho must lie in (-1, 1]");
                break;
        }
    }
};

namespace pm_detail {

/// Concatenated rows [first, first+w) of the observed history.
inline Vector flatten(const MarketWindow& history, Eigen::Index first, Eigen::Index w) {
    const Eigen::Index m = history.assets();
    Vector flat(w * m);
    for (Eigen::Index r = 0; r < w; ++r)
        flat.segment(r * m, m) = history.row(first + r).transpose();
    return flat;
}

inline double pearson(const Vector& a, const Vector& b) {
    const double ma = a.mean(), mb = b.mean();
    const Vector ca = (a.array() - ma).matrix();
    const Vector cb = (b.array() - mb).matrix();
    const double sa = ca.norm(), sb = cb.norm();
    if (sa == 0.0 || sb == 0.0) return 0.0;
    return ca.dot(cb) / (sa * sb);
}

/// Per-coordinate bin index against edges at the empirical d-quantiles of all
/// observed entries. The partition is recomputed as data accrues, so it only
/// ever sees the past.
inline std::vector<int> histogram_key(const MarketWindow& history, Eigen::Index first,
                                      Eigen::Index w, const std::vector<double>& edges) {
    const Eigen::Index m = history.assets();
    std::vector<int> key;
    key.reserve(static_cast<std::size_t>(w * m));
    for (Eigen::Index r = 0; r < w; ++r)
        for (Eigen::Index i = 0; i < m; ++i) {
            const double v = history.row(first + r)(i);
            const auto it = std::upper_bound(edges.begin(), edges.end(), v);
            key.push_back(static_cast<int>(it - edges.begin()));
        }
    return key;
}

inline std::vector<double> quantile_edges(const MarketWindow& history, Eigen::Index bins) {
    std::vector<double> all;
    all.reserve(static_cast<std::size_t>(history.rows() * history.assets()));
    for (Eigen::Index r = 0; r < history.rows(); ++r)
        for (Eigen::Index i = 0; i < history.assets(); ++i) all.push_back(history.row(r)(i));
    std::sort(all.begin(), all.end());
    std::vector<double> edges;
    for (Eigen::Index k = 1; k < bins; ++k) {
        const std::size_t pos = static_cast<std::size_t>(
            (static_cast<double>(k) * static_cast<double>(all.size())) /
            static_cast<double>(bins));
        edges.push_back(all[std::min(pos, all.size() - 1)]);
    }
    return edges;
}

}  // namespace pm_detail

/// Scan i = w+1..t and keep the periods whose preceding w-row window matches
/// the latest one under the chosen predicate. Too little history (t <= w+1)
/// yields the empty set. Probabilities are uniform over the matches.
inline SimilaritySet select_samples(const MarketWindow& history, const SelectorSpec& spec) {
    spec.validate();
    SimilaritySet out;
    const Eigen::Index t = history.rows();
    const Eigen::Index w = spec.w;
    if (t <= w + 1) return out;

    const Vector latest = pm_detail::flatten(history, t - w, w);

    if (spec.method == SelectorSpec::Method::nearest_neighbor) {
        std::vector<std::pair<double, Eigen::Index>> ranked;
        for (Eigen::Index i = w + 1; i <= t; ++i) {
            const Vector win = pm_detail::flatten(history, i - w - 1, w);
            ranked.emplace_back((win - latest).norm(), i);
        }
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return a.first < b.first || (a.first == b.first && a.second < b.second);
        });
        const std::size_t keep =
            std::min<std::size_t>(static_cast<std::size_t>(spec.neighbors), ranked.size());
        for (std::size_t k = 0; k < keep; ++k) out.indices.push_back(ranked[k].second);
        std::sort(out.indices.begin(), out.indices.end());
    } else if (spec.method == SelectorSpec::Method::histogram) {
        const auto edges = pm_detail::quantile_edges(history, spec.bins);
        const auto target = pm_detail::histogram_key(history, t - w, w, edges);
        for (Eigen::Index i = w + 1; i <= t; ++i)
            if (pm_detail::histogram_key(history, i - w - 1, w, edges) == target)
                out.indices.push_back(i);
    } else {
        for (Eigen::Index i = w + 1; i <= t; ++i) {
            const Vector win = pm_detail::flatten(history, i - w - 1, w);
            const bool match = spec.method == SelectorSpec::Method::kernel
                                   ? (win - latest).norm() <= spec.radius
                                   : pm_detail::pearson(win, latest) >= spec.rho;
            if (match) out.indices.push_back(i);
        }
    }

    if (!out.indices.empty())
        out.probabilities =
            Vector::Constant(static_cast<Eigen::Index>(out.indices.size()),
                             1.0 / static_cast<double>(out.indices.size()));
    return out;
}

// ---------------------------------------------------------------------------
// Step 2: optimize a utility over the sampled scenarios.
// ---------------------------------------------------------------------------

struct UtilitySpec {
    enum class Kind { log_optimal, semi_log, markowitz, gv };

    Kind kind = Kind::log_optimal;
    double lambda = 0.5;  // markowitz risk weight
    CostSpec costs;       // gv transaction-cost rates

    void validate() const {
        if (lambda < 0.0) throw std::invalid_argument("utility: lambda must be >= 0");
    }
};

/// Second-order expansion of log z around 1; the semi-log kernel.
inline double semi_log_kernel(double z) { return z - 1.0 - 0.5 * (z - 1.0) * (z - 1.0); }

/// Maximize the chosen utility over the scenarios named by the similarity
/// set. An empty set means no evidence, so the uniform portfolio comes back.
inline Portfolio optimize_utility(const SimilaritySet& c, const MarketWindow& history,
                                  const UtilitySpec& u, const Portfolio& b_prev) {
    u.validate();
    const Eigen::Index m = history.assets();
    if (c.empty()) return Portfolio::uniform(m);

    Matrix scen(static_cast<Eigen::Index>(c.size()), m);
    for (std::size_t k = 0; k < c.size(); ++k) {
        const Eigen::Index i = c.indices[k];
        if (i < 1 || i > history.rows())
            throw std::invalid_argument("optimize_utility: similarity index out of history");
        scen.row(static_cast<Eigen::Index>(k)) = history.row(i - 1);
    }
    const Vector& p = c.probabilities;

    switch (u.kind) {
        case UtilitySpec::Kind::log_optimal:
            return log_optimal(ScenarioSet(scen, p));

        case UtilitySpec::Kind::semi_log: {
            const auto value = [&](const Vector& b) {
                double obj = 0.0;
                for (Eigen::Index k = 0; k < scen.rows(); ++k)
                    obj += p(k) * semi_log_kernel(scen.row(k).dot(b));
                return obj;
            };
            const auto gradient = [&](const Vector& b) {
                Vector g = Vector::Zero(m);
                for (Eigen::Index k = 0; k < scen.rows(); ++k)
                    g += p(k) * (2.0 - scen.row(k).dot(b)) * scen.row(k).transpose();
                return g;
            };
            const auto res = maximize_on_simplex(value, gradient, m);
            if (!res.converged) throw ConvergenceError("semi_log: no convergence", res.x);
            return Portfolio(res.x);
        }

        case UtilitySpec::Kind::markowitz: {
            const Vector xbar = scen.transpose() * p;
            const auto value = [&](const Vector& b) {
                double mean = 0.0, second = 0.0;
                for (Eigen::Index k = 0; k < scen.rows(); ++k) {
                    const double r = scen.row(k).dot(b);
                    mean += p(k) * r;
                    second += p(k) * r * r;
                }
                return mean - u.lambda * (second - mean * mean);
            };
            const auto gradient = [&](const Vector& b) {
                double mean = 0.0;
                Vector weighted = Vector::Zero(m);
                for (Eigen::Index k = 0; k < scen.rows(); ++k) {
                    const double r = scen.row(k).dot(b);
                    mean += p(k) * r;
                    weighted += p(k) * r * scen.row(k).transpose();
                }
                return Vector(xbar - u.lambda * (2.0 * weighted - 2.0 * mean * xbar));
            };
            const auto res = maximize_on_simplex(value, gradient, m);
            if (!res.converged) throw ConvergenceError("markowitz: no convergence", res.x);
            return Portfolio(res.x);
        }

        case UtilitySpec::Kind::gv: {
            // log return plus the log of the cost factor of actually moving
            // from b_prev under each sampled scenario. The cost factor comes
            // from the backtest solver; gradients are finite differences.
            const auto value = [&](const Vector& raw) {
                Vector clean = raw.cwiseMax(1e-12);
                clean /= clean.sum();
                const Portfolio b{clean};
                double obj = 0.0;
                for (Eigen::Index k = 0; k < scen.rows(); ++k) {
                    const Vector x = scen.row(k).transpose();
                    obj += p(k) * (std::log(scen.row(k).dot(clean)) +
                                   std::log(cost_factor(b_prev, x, b, u.costs)));
                }
                return obj;
            };
            const auto gradient = [&](const Vector& b) {
                Vector g(m);
                const double h = 1e-6;
                for (Eigen::Index i = 0; i < m; ++i) {
                    Vector up = b, down = b;
                    up(i) += h;
                    down(i) -= h;
                    g(i) = (value(up) - value(down)) / (2.0 * h);
                }
                return g;
            };
            SolveOptions opts;
            opts.tol = 1e-9;
            opts.max_iter = 2000;
            const auto res = maximize_on_simplex(value, gradient, m, opts);
            if (!res.converged) throw ConvergenceError("gv: no convergence", res.x);
            return Portfolio(res.x);
        }
    }
    throw std::logic_error("unreachable");
}

/// Both steps composed: sample selection, then utility maximization.
inline Portfolio pm_strategy_decide(const MarketWindow& history, const SelectorSpec& selector,
                                    const UtilitySpec& utility, const Portfolio& b_prev) {
    return optimize_utility(select_samples(history, selector), history, utility, b_prev);
}

class PatternMatchingStrategy : public Strategy {
public:
    PatternMatchingStrategy(SelectorSpec selector, UtilitySpec utility, std::string name)
        : selector_(selector), utility_(utility), name_(std::move(name)) {
        selector_.validate();
        utility_.validate();
    }

    void reset(Eigen::Index m) override { prev_ = Portfolio::uniform(m); }

    Portfolio decide(const MarketWindow& past) override {
        if (past.empty()) return prev_;
        prev_ = pm_strategy_decide(past, selector_, utility_, prev_);
        return prev_;
    }

    std::string name() const override { return name_; }

    const SelectorSpec& selector() const { return selector_; }

private:
    SelectorSpec selector_;
    UtilitySpec utility_;
    Portfolio prev_ = Portfolio::uniform(1);
    std::string name_;
};

/// One strategy per grid value of the chosen selector parameter, ready to be
/// pooled by a combination layer.
enum class PmGridParam { window, neighbors, correlation };

inline std::vector<StrategyPtr> pm_expert_family(const SelectorSpec& base,
                                                 const UtilitySpec& utility, PmGridParam which,
                                                 const std::vector<double>& values,
                                                 const std::string& name_prefix = "pm") {
    if (values.empty()) throw std::invalid_argument("pm_expert_family: empty parameter grid");
    std::vector<StrategyPtr> experts;
    experts.reserve(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        SelectorSpec spec = base;
        switch (which) {
            case PmGridParam::window:
                spec.w = static_cast<Eigen::Index>(values[k]);
                break;
            case PmGridParam::neighbors:
                spec.neighbors = static_cast<Eigen::Index>(values[k]);
                break;
            case PmGridParam::correlation:
                spec.rho = values[k];
                break;
        }
        experts.push_back(std::make_unique<PatternMatchingStrategy>(
            spec, utility, name_prefix + "#" + std::to_string(k)));
    }
    return experts;
}

}  // namespace olps
