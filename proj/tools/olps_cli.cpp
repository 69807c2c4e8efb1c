// Backtesting front end: load or synthesize a market, run a named strategy
// through the sequential protocol, and report wealth, growth, and regret.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "olps/olps.hpp"

namespace {

constexpr int kExitUsage = 2;    // unknown strategy / bad parameters
constexpr int kExitData = 3;     // unreadable or malformed market data
constexpr int kExitNumeric = 4;  // solver failure

struct DataOptions {
    std::string path;
    std::string format = "relatives";
    bool header = false;
    std::string synthetic;
    long long periods = 100;
    long long assets = 4;
    double low = 0.5;
    double high = 1.5;
    std::uint64_t seed = 42;
};

olps::PriceRelativeSequence load_market(const DataOptions& d, std::string& source_label) {
    if (!d.synthetic.empty()) {
        if (!d.path.empty())
            throw CLI::ValidationError("--data and --synthetic are mutually exclusive");
        if (d.synthetic == "cg86") {
            source_label = "synthetic:cg86";
            return olps::synthetic_cg86(d.periods);
        }
        if (d.synthetic == "iid") {
            source_label = "synthetic:iid";
            return olps::synthetic_iid(d.assets, d.periods, d.seed, d.low, d.high);
        }
        throw CLI::ValidationError("--synthetic must be cg86 or iid");
    }
    if (d.path.empty()) throw CLI::ValidationError("either --data or --synthetic is required");
    source_label = d.path;
    olps::DataFormat format;
    if (d.format == "prices")
        format = olps::DataFormat::prices;
    else if (d.format == "relatives")
        format = olps::DataFormat::relatives;
    else
        throw CLI::ValidationError("--format must be relatives or prices");
    return olps::load_price_relatives(d.path, format, d.header);
}

olps::ParamMap parse_params(const std::string& text) {
    olps::ParamMap params;
    if (text.empty()) return params;
    std::stringstream ss(text);
    std::string pair;
    while (std::getline(ss, pair, ',')) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("parameter '" + pair + "' is not of the form k=v");
        params[pair.substr(0, eq)] = pair.substr(eq + 1);
    }
    return params;
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

struct RunOutcome {
    olps::Summary summary;
    nlohmann::ordered_json json;
};

RunOutcome run_one(const std::string& strategy_name, const olps::ParamMap& params,
                   const std::vector<std::string>& experts,
                   const olps::PriceRelativeSequence& market, const std::string& source,
                   const olps::CostSpec& costs, std::uint64_t seed, double bcrp_wealth) {
    auto strategy = olps::StrategyRegistry::instance().make(strategy_name, params, experts, seed);
    const auto result = olps::run_backtest(*strategy, market, costs);
    const auto summary = olps::summarize(result, bcrp_wealth);
    std::map<std::string, std::string> shown(params.begin(), params.end());
    auto json = olps::report_json(summary, source, shown, costs, seed);

    if (auto* meta = dynamic_cast<olps::MetaStrategy*>(strategy.get())) {
        // settle the final period so the pool reflects the whole run, then
        // attach the per-expert (frictionless) wealths
        meta->decide(olps::MarketWindow::prefix(market, market.periods()));
        const auto names = meta->expert_names();
        nlohmann::ordered_json experts_json = nlohmann::ordered_json::array();
        for (std::size_t j = 0; j < names.size(); ++j)
            experts_json.push_back(
                {{"name", names[j]},
                 {"wealth", meta->pool().wealths(static_cast<Eigen::Index>(j))}});
        json["experts"] = experts_json;
    }
    return {summary, json};
}

void print_table_header() {
    std::printf("%-16s %16s %12s %12s %12s\n", "strategy", "final_wealth", "growth", "regret",
                "max_loss");
}

void print_table_row(const olps::Summary& s) {
    std::printf("%-16s %16.6f %12.6f %12.6f %12.6f\n", s.strategy_name.c_str(), s.final_wealth,
                s.growth, s.regret_vs_bcrp, s.max_single_period_loss);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online portfolio selection backtester"};
    app.require_subcommand(1);

    // ---- list ---------------------------------------------------------
    auto* list_cmd = app.add_subcommand("list", "List registered strategies");
    std::string list_output = "table";
    list_cmd->add_option("--output", list_output, "table|json");

    // ---- gen ----------------------------------------------------------
    auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic market as CSV");
    DataOptions gen_data;
    std::string gen_out;
    gen_cmd->add_option("--synthetic", gen_data.synthetic, "cg86|iid")->required();
    gen_cmd->add_option("--periods", gen_data.periods, "periods");
    gen_cmd->add_option("--assets", gen_data.assets, "assets (iid)");
    gen_cmd->add_option("--low", gen_data.low, "lower bound (iid)");
    gen_cmd->add_option("--high", gen_data.high, "upper bound (iid)");
    gen_cmd->add_option("--seed", gen_data.seed, "generator seed (iid)");
    gen_cmd->add_option("--out", gen_out, "output file")->required();

    // ---- run ----------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "Backtest a strategy");
    DataOptions data;
    std::string strategy_name;
    std::string params_text;
    std::string meta_params_text;
    std::string experts_text;
    double tc_buy = 0.0, tc_sell = 0.0;
    std::string output = "table";
    std::string wealth_csv;
    bool run_all = false;

    run_cmd->add_option("--data", data.path, "CSV market file");
    run_cmd->add_option("--format", data.format, "relatives|prices (default relatives)");
    run_cmd->add_flag("--header", data.header, "CSV has a header row of asset names");
    run_cmd->add_option("--synthetic", data.synthetic, "cg86|iid instead of --data");
    run_cmd->add_option("--periods", data.periods, "synthetic periods");
    run_cmd->add_option("--assets", data.assets, "synthetic assets (iid)");
    run_cmd->add_option("--low", data.low, "synthetic lower bound (iid)");
    run_cmd->add_option("--high", data.high, "synthetic upper bound (iid)");
    run_cmd->add_option("--strategy", strategy_name, "registered strategy name");
    run_cmd->add_option("--params", params_text, "comma-separated k=v strategy parameters");
    run_cmd->add_option("--meta-params", meta_params_text, "k=v parameters for meta strategies");
    run_cmd->add_option("--experts", experts_text,
                        "comma-separated experts for meta strategies (name or name:k=v;k=v)");
    run_cmd->add_option("--tc-buy", tc_buy, "proportional cost rate on buys");
    run_cmd->add_option("--tc-sell", tc_sell, "proportional cost rate on sells");
    run_cmd->add_option("--output", output, "json|csv|table (default table)");
    run_cmd->add_option("--wealth-csv", wealth_csv, "also dump the wealth path as CSV");
    run_cmd->add_option("--seed", data.seed, "seed for synthetic data and sampling");
    run_cmd->add_flag("--all", run_all, "run every registered strategy");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list_cmd->parsed()) {
            const auto& catalog = olps::StrategyRegistry::instance().catalog();
            if (list_output == "json") {
                nlohmann::ordered_json j = nlohmann::ordered_json::array();
                for (const auto& info : catalog) {
                    nlohmann::ordered_json params = nlohmann::ordered_json::array();
                    for (const auto& p : info.params)
                        params.push_back({{"name", p.name},
                                          {"default", p.default_value},
                                          {"description", p.description}});
                    j.push_back({{"name", info.name},
                                 {"category", info.category},
                                 {"description", info.description},
                                 {"params", params}});
                }
                std::cout << j.dump(2) << '\n';
            } else {
                std::printf("%-16s %-20s %s\n", "name", "category", "description");
                for (const auto& info : catalog) {
                    std::printf("%-16s %-20s %s\n", info.name.c_str(), info.category.c_str(),
                                info.description.c_str());
                    for (const auto& p : info.params)
                        std::printf("    %-12s default=%-10s %s\n", p.name.c_str(),
                                    p.default_value.c_str(), p.description.c_str());
                }
            }
            return 0;
        }

        if (gen_cmd->parsed()) {
            std::string label;
            const auto market = load_market(gen_data, label);
            olps::write_price_relatives(market, gen_out, true);
            std::printf("wrote %lld periods x %lld assets to %s\n",
                        static_cast<long long>(market.periods()),
                        static_cast<long long>(market.assets()), gen_out.c_str());
            return 0;
        }

        // ---- run ------------------------------------------------------
        if (!run_all && strategy_name.empty())
            throw CLI::ValidationError("--strategy is required (or use --all)");
        if (!run_all && !olps::StrategyRegistry::instance().contains(strategy_name)) {
            std::cerr << "unknown strategy '" << strategy_name << "'; see `olps list`\n";
            return kExitUsage;
        }

        olps::ParamMap params = parse_params(params_text);
        for (const auto& [k, v] : parse_params(meta_params_text)) params[k] = v;
        const std::vector<std::string> experts =
            experts_text.empty() ? std::vector<std::string>{} : split_commas(experts_text);

        std::string source;
        const auto market = load_market(data, source);
        const olps::CostSpec costs(tc_buy, tc_sell);

        const double bcrp_wealth = olps::crp_wealth(olps::bcrp(market), market);

        std::vector<RunOutcome> outcomes;
        if (run_all) {
            // strategies are independent; one shared immutable market
            std::vector<std::future<RunOutcome>> futures;
            for (const auto& info : olps::StrategyRegistry::instance().catalog())
                futures.push_back(std::async(std::launch::async, [&, name = info.name] {
                    return run_one(name, {}, {}, market, source, costs, data.seed, bcrp_wealth);
                }));
            for (auto& f : futures) outcomes.push_back(f.get());
        } else {
            outcomes.push_back(run_one(strategy_name, params, experts, market, source, costs,
                                       data.seed, bcrp_wealth));

            if (!wealth_csv.empty()) {
                auto strategy = olps::StrategyRegistry::instance().make(strategy_name, params,
                                                                        experts, data.seed);
                const auto result = olps::run_backtest(*strategy, market, costs);
                std::ofstream out(wealth_csv);
                olps::write_wealth_csv(result, out);
            }
        }

        if (output == "json") {
            if (outcomes.size() == 1) {
                std::cout << outcomes.front().json.dump(2) << '\n';
            } else {
                nlohmann::ordered_json j = nlohmann::ordered_json::array();
                for (const auto& o : outcomes) j.push_back(o.json);
                std::cout << j.dump(2) << '\n';
            }
        } else if (output == "csv") {
            std::printf("strategy,final_wealth,growth_rate,regret_bcrp\n");
            for (const auto& o : outcomes)
                std::printf("%s,%.17g,%.17g,%.17g\n", o.summary.strategy_name.c_str(),
                            o.summary.final_wealth, o.summary.growth, o.summary.regret_vs_bcrp);
        } else if (output == "table") {
            print_table_header();
            for (const auto& o : outcomes) print_table_row(o.summary);
        } else {
            throw CLI::ValidationError("--output must be json, csv, or table");
        }
        return 0;
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const olps::ParseError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const olps::ConvergenceError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const olps::ContractViolation& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
}
