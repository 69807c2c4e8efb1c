// Rebalancing against a fluctuating asset extracts growth even when neither
// asset trends. Compare buy-and-hold with per-period rebalancing on the
// classic two-asset alternating market.

#include <cstdio>

#include "olps/backtest.hpp"
#include "olps/benchmarks.hpp"

int main() {
    const auto market = olps::synthetic_cg86(100);

    olps::BuyAndHoldStrategy bah;
    olps::ConstantRebalancedStrategy ucrp(std::nullopt, "ucrp");

    const auto hold = olps::run_backtest(bah, market);
    const auto rebalance = olps::run_backtest(ucrp, market);
    const auto star = olps::bcrp(market);

    std::printf("market: %ld periods, %ld assets\n", static_cast<long>(market.periods()),
                static_cast<long>(market.assets()));
    std::printf("%-22s final wealth %12.4f   growth %+.6f\n", "buy-and-hold",
                hold.final_wealth(), hold.growth());
    std::printf("%-22s final wealth %12.4f   growth %+.6f\n", "uniform rebalanced",
                rebalance.final_wealth(), rebalance.growth());
    std::printf("hindsight CRP weights: (%.4f, %.4f)\n", star[0], star[1]);
    return 0;
}
