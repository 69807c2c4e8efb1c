#pragma once

#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "olps/backtest.hpp"

namespace olps {

/// JSON record of a finished run. Keys are inserted in a fixed order and
/// doubles round-trip exactly, so identical inputs serialize byte-identically.
inline nlohmann::ordered_json report_json(const Summary& s, const std::string& data_source,
                                          const std::map<std::string, std::string>& params,
                                          const CostSpec& costs, std::uint64_t seed) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["strategy"] = s.strategy_name;
    j["params"] = params;  // std::map: keys already sorted
    j["data"] = {{"source", data_source},
                 {"periods", s.periods},
                 {"assets", s.assets}};
    j["costs"] = {{"buy_rate", costs.gamma_buy}, {"sell_rate", costs.gamma_sell}};
    j["seed"] = seed;
    j["final_wealth"] = s.final_wealth;
    j["growth_rate"] = s.growth;
    j["regret_bcrp"] = s.regret_vs_bcrp;
    j["max_single_period_loss"] = s.max_single_period_loss;
    j["cost_factor_product"] = s.cost_factor_product;
    return j;
}

/// One line per period: t, S_t, period return, cost factor.
inline void write_wealth_csv(const BacktestResult& result, std::ostream& out) {
    out.precision(17);
    out << "period,wealth,period_return,cost_factor\n";
    out << "0," << result.wealth[0] << ",,\n";
    for (Eigen::Index t = 1; t <= result.periods(); ++t) {
        const auto i = static_cast<std::size_t>(t);
        out << t << ',' << result.wealth[i] << ',' << result.period_returns[i - 1] << ','
            << result.cost_factors[i - 1] << '\n';
    }
}

}  // namespace olps
