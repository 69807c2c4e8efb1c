#pragma once

// Umbrella header for the online portfolio selection library.

#include "olps/backtest.hpp"
#include "olps/benchmarks.hpp"
#include "olps/errors.hpp"
#include "olps/follow_loser.hpp"
#include "olps/follow_winner.hpp"
#include "olps/market_data.hpp"
#include "olps/meta_learning.hpp"
#include "olps/pattern_matching.hpp"
#include "olps/registry.hpp"
#include "olps/report.hpp"
#include "olps/simplex_math.hpp"
#include "olps/strategy.hpp"
