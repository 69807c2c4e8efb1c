#pragma once

#include <memory>
#include <string>

#include "olps/market_data.hpp"
#include "olps/simplex_math.hpp"

namespace olps {

/// Contract every strategy plays by:
///
///   - reset(m) puts the strategy back to its initial state for an m-asset
///     market; it is called once before period 1.
///   - decide(past) returns the portfolio for period past.rows()+1. The view
///     holds exactly x_1..x_{t-1}, and the engine calls decide once per
///     period in increasing t, so stateful strategies can fold new rows
///     incrementally.
///   - bind(seq) hands over the full run data. Only strategies flagged
///     hindsight() may read it; for everything else the causality check in
///     the engine will catch a peek.
///
/// The first decision must be the uniform portfolio unless the strategy is a
/// hindsight benchmark.
class Strategy {
public:
    virtual ~Strategy() = default;

    virtual void reset(Eigen::Index num_assets) = 0;
    virtual Portfolio decide(const MarketWindow& past) = 0;
    virtual void bind(const PriceRelativeSequence& /*seq*/) {}
    virtual bool hindsight() const { return false; }
    virtual std::string name() const = 0;
};

using StrategyPtr = std::unique_ptr<Strategy>;

}  // namespace olps
