#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "olps/backtest.hpp"
#include "olps/market_data.hpp"
#include "olps/simplex_math.hpp"
#include "olps/strategy.hpp"

namespace olps {

/// One Buy-And-Hold step: the manager never trades, so the decision for the
/// next period is simply the current holdings drifted by the market.
template <typename Derived>
inline Portfolio bah_decide(const Portfolio& holdings, const Eigen::MatrixBase<Derived>& x_prev) {
    return price_adjusted(holdings, x_prev);
}

/// Vertex of the best-performing asset in hindsight (largest cumulative
/// product of its column). Ties go to the lowest index.
inline Portfolio best_stock(const PriceRelativeSequence& seq) {
    const Eigen::Index m = seq.assets();
    Eigen::Index best = 0;
    double best_log = -1e300;
    for (Eigen::Index i = 0; i < m; ++i) {
        double lw = 0.0;
        for (Eigen::Index t = 0; t < seq.periods(); ++t) lw += std::log(seq.matrix()(t, i));
        if (lw > best_log + 1e-15) {
            best_log = lw;
            best = i;
        }
    }
    return Portfolio::vertex(m, best);
}

/// Best constant rebalanced portfolio in hindsight: the Kelly optimum with
/// uniform probability over the observed rows.
inline Portfolio bcrp(const PriceRelativeSequence& seq, double tol = 1e-10,
                      int max_iter = 10000) {
    return log_optimal(ScenarioSet::uniform_over(MarketWindow::prefix(seq, seq.periods())), tol,
                       max_iter);
}

/// log(bcrp wealth) - log(alg wealth); negative values mean the algorithm
/// beat the hindsight CRP.
inline double regret(double alg_wealth, double bcrp_wealth) {
    if (!(alg_wealth > 0.0) || !(bcrp_wealth > 0.0))
        throw std::invalid_argument("regret: wealths must be > 0");
    return std::log(bcrp_wealth) - std::log(alg_wealth);
}

/// Buy once, never rebalance. The emitted decisions track the drifting
/// holdings, so the cost factor stays exactly 1.
class BuyAndHoldStrategy : public Strategy {
public:
    explicit BuyAndHoldStrategy(std::optional<Portfolio> initial = std::nullopt)
        : initial_(std::move(initial)) {}

    void reset(Eigen::Index m) override {
        if (initial_ && initial_->size() != m)
            throw std::invalid_argument("bah: initial portfolio has wrong size");
        holdings_ = initial_ ? *initial_ : Portfolio::uniform(m);
        seen_ = 0;
    }

    Portfolio decide(const MarketWindow& past) override {
        while (seen_ < past.rows()) {
            holdings_ = bah_decide(holdings_, past.row(seen_));
            ++seen_;
        }
        return holdings_;
    }

    std::string name() const override { return "bah"; }

private:
    std::optional<Portfolio> initial_;
    Portfolio holdings_ = Portfolio::uniform(1);
    Eigen::Index seen_ = 0;
};

/// Rebalance to the same fixed portfolio every period.
class ConstantRebalancedStrategy : public Strategy {
public:
    explicit ConstantRebalancedStrategy(std::optional<Portfolio> target = std::nullopt,
                                        std::string name = "crp")
        : target_(std::move(target)), name_(std::move(name)) {}

    void reset(Eigen::Index m) override {
        if (target_ && target_->size() != m)
            throw std::invalid_argument(name_ + ": portfolio has wrong size");
        current_ = target_ ? *target_ : Portfolio::uniform(m);
    }

    Portfolio decide(const MarketWindow&) override { return current_; }

    std::string name() const override { return name_; }

private:
    std::optional<Portfolio> target_;
    Portfolio current_ = Portfolio::uniform(1);
    std::string name_;
};

/// Hindsight benchmark: hold the single best stock of the whole run.
class BestStockStrategy : public Strategy {
public:
    void reset(Eigen::Index m) override { pick_ = Portfolio::uniform(m); }
    void bind(const PriceRelativeSequence& seq) override { pick_ = best_stock(seq); }
    Portfolio decide(const MarketWindow& past) override {
        // Holdings drift like BAH, but the whole wealth sits on one vertex, so
        // the drifted portfolio is the vertex itself.
        (void)past;
        return pick_;
    }
    bool hindsight() const override { return true; }
    std::string name() const override { return "best"; }

private:
    Portfolio pick_ = Portfolio::uniform(1);
};

/// Hindsight benchmark: constant rebalancing to the in-hindsight Kelly
/// optimum. Exists to anchor regret reporting.
class BcrpStrategy : public Strategy {
public:
    void reset(Eigen::Index m) override { target_ = Portfolio::uniform(m); }
    void bind(const PriceRelativeSequence& seq) override { target_ = bcrp(seq); }
    Portfolio decide(const MarketWindow&) override { return target_; }
    bool hindsight() const override { return true; }
    std::string name() const override { return "bcrp"; }

private:
    Portfolio target_ = Portfolio::uniform(1);
};

}  // namespace olps
