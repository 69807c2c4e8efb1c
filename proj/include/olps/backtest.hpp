#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "olps/errors.hpp"
#include "olps/market_data.hpp"
#include "olps/simplex_math.hpp"
#include "olps/strategy.hpp"

namespace olps {

/// Proportional transaction cost rates charged on wealth bought and sold.
struct CostSpec {
    double gamma_buy = 0.0;
    double gamma_sell = 0.0;

    CostSpec() = default;
    CostSpec(double buy, double sell) : gamma_buy(buy), gamma_sell(sell) {
        if (buy < 0.0 || buy >= 1.0 || sell < 0.0 || sell >= 1.0)
            throw std::invalid_argument("cost rates must lie in [0, 1)");
    }
    bool free() const { return gamma_buy == 0.0 && gamma_sell == 0.0; }
};

/// Fraction of wealth that survives rebalancing from the price-adjusted
/// holdings of (b_prev, x_prev) into b_new. The factor c is the unique root of
///
///   1 = c + gamma_s * sum_i (bhat_i - b_i c)^+ + gamma_b * sum_i (b_i c - bhat_i)^+
///
/// solved by bisection: the residual is strictly increasing in c (slope at
/// least 1 - gamma_s) and the root is bracketed by
/// [(1-gamma_s)/(1+gamma_b), 1].
inline double cost_factor(const Portfolio& b_prev, const Vector& x_prev, const Portfolio& b_new,
                          const CostSpec& costs) {
    if (costs.free()) return 1.0;
    const Vector bhat = price_adjusted(b_prev, x_prev).weights();
    const Vector& b = b_new.weights();
    const auto residual = [&](double c) {
        double r = c - 1.0;
        for (Eigen::Index i = 0; i < b.size(); ++i) {
            const double d = bhat(i) - b(i) * c;
            if (d > 0.0)
                r += costs.gamma_sell * d;
            else
                r += costs.gamma_buy * (-d);
        }
        return r;
    };
    double lo = (1.0 - costs.gamma_sell) / (1.0 + costs.gamma_buy);
    double hi = 1.0;
    if (residual(hi) <= 0.0) return hi;  // no rebalancing needed
    for (int iter = 0; iter < 100 && hi - lo > 1e-15; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (residual(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    const double c = 0.5 * (lo + hi);
    if (std::abs(residual(c)) > 1e-12)
        throw std::runtime_error("cost_factor: bisection failed to close the residual");
    return c;
}

/// Everything the sequential run produced. The recurrence is
/// S_t = S_{t-1} * c_{t-1} * (b_t . x_t) with S_0 = 1 and c_0 = 1 (buying in
/// on period 1 is free).
struct BacktestResult {
    std::string strategy_name;
    std::vector<double> wealth;          // S_0..S_n
    std::vector<double> period_returns;  // b_t . x_t
    std::vector<double> cost_factors;    // c_{t-1} applied before period t
    std::vector<Portfolio> portfolios;   // b_t

    Eigen::Index periods() const { return static_cast<Eigen::Index>(period_returns.size()); }
    double final_wealth() const { return wealth.back(); }
    double growth() const { return growth_rate(final_wealth(), periods()); }
    double cost_factor_product() const {
        double p = 1.0;
        for (double c : cost_factors) p *= c;
        return p;
    }
};

/// Run the decide -> reveal -> settle loop over the whole sequence.
inline BacktestResult run_backtest(Strategy& strategy, const PriceRelativeSequence& seq,
                                   const CostSpec& costs = {}) {
    const Eigen::Index n = seq.periods();
    const Eigen::Index m = seq.assets();
    strategy.reset(m);
    strategy.bind(seq);

    BacktestResult res;
    res.strategy_name = strategy.name();
    res.wealth.reserve(static_cast<std::size_t>(n) + 1);
    res.wealth.push_back(1.0);

    for (Eigen::Index t = 1; t <= n; ++t) {
        Portfolio b = [&] {
            try {
                return strategy.decide(MarketWindow::prefix(seq, t - 1));
            } catch (const std::invalid_argument& e) {
                throw ContractViolation(strategy.name() + " emitted an infeasible portfolio: " +
                                            e.what(),
                                        static_cast<std::size_t>(t));
            }
        }();
        if (b.size() != m)
            throw ContractViolation(strategy.name() + " emitted a portfolio of wrong size",
                                    static_cast<std::size_t>(t));

        const double c = (t == 1) ? 1.0
                                  : cost_factor(res.portfolios.back(),
                                                Vector(seq.row(t - 2).transpose()), b, costs);
        const double ret = b.dot(seq.row(t - 1));
        res.wealth.push_back(res.wealth.back() * c * ret);
        res.period_returns.push_back(ret);
        res.cost_factors.push_back(c);
        res.portfolios.push_back(std::move(b));
    }
    return res;
}

/// Collect the decisions a strategy makes for periods 1..num_decisions when
/// run over `seq`. The final decision may look one period past the data end,
/// which is exactly what the causality check needs.
inline std::vector<Portfolio> collect_decisions(Strategy& strategy,
                                                const PriceRelativeSequence& seq,
                                                Eigen::Index num_decisions) {
    strategy.reset(seq.assets());
    strategy.bind(seq);
    std::vector<Portfolio> out;
    out.reserve(static_cast<std::size_t>(num_decisions));
    for (Eigen::Index t = 1; t <= num_decisions; ++t)
        out.push_back(strategy.decide(MarketWindow::prefix(seq, std::min(t - 1, seq.periods()))));
    return out;
}

/// Verify that decisions up to period t_cut do not depend on data from t_cut
/// onward: replay the strategy on the sequence truncated just before x_{t_cut}
/// and compare decisions. Hindsight benchmarks are exempt.
inline bool truncation_causality_check(Strategy& strategy, const PriceRelativeSequence& seq,
                                       Eigen::Index t_cut, double tol = 1e-12) {
    if (strategy.hindsight()) return true;
    if (t_cut < 1 || t_cut > seq.periods())
        throw std::invalid_argument("truncation_causality_check: t_cut out of range");

    const auto full = collect_decisions(strategy, seq, t_cut);
    std::vector<Portfolio> truncated;
    if (t_cut == 1) {
        // No data before period 1; the first decision must not depend on any row.
        PriceRelativeSequence stub(Matrix::Ones(1, seq.assets()));
        strategy.reset(seq.assets());
        strategy.bind(stub);
        truncated.push_back(strategy.decide(MarketWindow::prefix(stub, 0)));
    } else {
        PriceRelativeSequence cut(seq.matrix().topRows(t_cut - 1));
        truncated = collect_decisions(strategy, cut, t_cut);
    }
    for (std::size_t i = 0; i < truncated.size(); ++i)
        if ((full[i].weights() - truncated[i].weights()).lpNorm<Eigen::Infinity>() > tol)
            return false;
    return true;
}

/// Headline numbers of a finished run.
struct Summary {
    std::string strategy_name;
    Eigen::Index periods = 0;
    Eigen::Index assets = 0;
    double final_wealth = 1.0;
    double growth = 0.0;
    double regret_vs_bcrp = 0.0;
    double max_single_period_loss = 0.0;  // worst 1 - c*(b.x) across periods
    double cost_factor_product = 1.0;
};

inline Summary summarize(const BacktestResult& result, double bcrp_wealth) {
    if (!(bcrp_wealth > 0.0)) throw std::invalid_argument("summarize: bcrp wealth must be > 0");
    Summary s;
    s.strategy_name = result.strategy_name;
    s.periods = result.periods();
    s.assets = result.portfolios.empty() ? 0 : result.portfolios.front().size();
    s.final_wealth = result.final_wealth();
    s.growth = result.growth();
    s.regret_vs_bcrp = std::log(bcrp_wealth) - std::log(s.final_wealth);
    s.cost_factor_product = result.cost_factor_product();
    double worst = 1.0;
    for (Eigen::Index t = 0; t < result.periods(); ++t)
        worst = std::min(worst, result.cost_factors[static_cast<std::size_t>(t)] *
                                    result.period_returns[static_cast<std::size_t>(t)]);
    s.max_single_period_loss = std::max(0.0, 1.0 - worst);
    return s;
}

}  // namespace olps
