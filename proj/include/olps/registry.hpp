#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "olps/benchmarks.hpp"
#include "olps/follow_loser.hpp"
#include "olps/follow_winner.hpp"
#include "olps/meta_learning.hpp"
#include "olps/pattern_matching.hpp"
#include "olps/strategy.hpp"

namespace olps {

// ---------------------------------------------------------------------------
// Named strategies with declared, validated parameter schemas. This is the
// surface the CLI (and the acceptance suite) drives.
// ---------------------------------------------------------------------------

struct ParamDef {
    enum class Type { real, integer, portfolio, text };
    std::string name;
    Type type = Type::real;
    std::string default_value;
    std::string description;
};

struct StrategyInfo {
    std::string name;
    std::string category;  // one of the five classification groups
    std::string description;
    std::vector<ParamDef> params;
};

using ParamMap = std::map<std::string, std::string>;

namespace registry_detail {

inline double parse_real(const std::string& name, const std::string& raw) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("parameter '" + name + "' expects a real, got '" + raw +
                                    "'");
    }
}

inline long long parse_int(const std::string& name, const std::string& raw) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("parameter '" + name + "' expects an integer, got '" + raw +
                                    "'");
    }
}

/// Colon-separated weights, e.g. "0.3:0.7".
inline Portfolio parse_portfolio(const std::string& name, const std::string& raw) {
    std::vector<double> weights;
    std::stringstream ss(raw);
    std::string cell;
    while (std::getline(ss, cell, ':')) weights.push_back(parse_real(name, cell));
    if (weights.empty())
        throw std::invalid_argument("parameter '" + name + "' expects w1:w2:...");
    Vector w(static_cast<Eigen::Index>(weights.size()));
    for (std::size_t i = 0; i < weights.size(); ++i) w(static_cast<Eigen::Index>(i)) = weights[i];
    try {
        return Portfolio(w);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("parameter '" + name + "': " + e.what());
    }
}

/// Typed view over a validated parameter map.
class Params {
public:
    Params(const StrategyInfo& info, const ParamMap& given) {
        for (const auto& [key, value] : given) {
            bool known = false;
            for (const auto& def : info.params) known = known || def.name == key;
            if (!known)
                throw std::invalid_argument("strategy '" + info.name +
                                            "' has no parameter '" + key + "'");
        }
        for (const auto& def : info.params) {
            const auto it = given.find(def.name);
            raw_[def.name] = it != given.end() ? it->second : def.default_value;
            // validate the type eagerly so errors surface before any computation
            if (raw_[def.name].empty()) continue;
            switch (def.type) {
                case ParamDef::Type::real: parse_real(def.name, raw_[def.name]); break;
                case ParamDef::Type::integer: parse_int(def.name, raw_[def.name]); break;
                case ParamDef::Type::portfolio: parse_portfolio(def.name, raw_[def.name]); break;
                case ParamDef::Type::text: break;
            }
        }
    }

    bool has(const std::string& name) const {
        const auto it = raw_.find(name);
        return it != raw_.end() && !it->second.empty();
    }
    double real(const std::string& name) const { return parse_real(name, raw_.at(name)); }
    long long integer(const std::string& name) const { return parse_int(name, raw_.at(name)); }
    Portfolio portfolio(const std::string& name) const {
        return parse_portfolio(name, raw_.at(name));
    }
    const std::string& text(const std::string& name) const { return raw_.at(name); }

private:
    std::map<std::string, std::string> raw_;
};

}  // namespace registry_detail

/// Parsed "name" or "name:k=v;k=v" expert description.
struct ExpertSpec {
    std::string name;
    ParamMap params;

    static ExpertSpec parse(const std::string& text) {
        ExpertSpec spec;
        // meta names carry their own ':' prefix; leave them whole so the
        // no-nesting check can name them properly
        if (text.rfind("meta:", 0) == 0) {
            spec.name = text;
            return spec;
        }
        const auto colon = text.find(':');
        if (colon == std::string::npos) {
            spec.name = text;
            return spec;
        }
        spec.name = text.substr(0, colon);
        std::stringstream ss(text.substr(colon + 1));
        std::string pair;
        while (std::getline(ss, pair, ';')) {
            const auto eq = pair.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("expert parameter '" + pair + "' is not k=v");
            spec.params[pair.substr(0, eq)] = pair.substr(eq + 1);
        }
        return spec;
    }
};

class StrategyRegistry {
public:
    static const StrategyRegistry& instance() {
        static StrategyRegistry reg;
        return reg;
    }

    const std::vector<StrategyInfo>& catalog() const { return catalog_; }

    bool contains(const std::string& name) const {
        for (const auto& info : catalog_)
            if (info.name == name) return true;
        return false;
    }

    const StrategyInfo& info(const std::string& name) const {
        for (const auto& entry : catalog_)
            if (entry.name == name) return entry;
        throw std::invalid_argument("unknown strategy '" + name + "'");
    }

    /// Instantiate by name. `experts` applies to the meta strategies only and
    /// falls back to each entry's documented default pool.
    StrategyPtr make(const std::string& name, const ParamMap& params = {},
                     const std::vector<std::string>& experts = {},
                     std::uint64_t seed = 42) const {
        const StrategyInfo& entry = info(name);
        const registry_detail::Params p(entry, params);

        // benchmarks ---------------------------------------------------
        if (name == "bah")
            return std::make_unique<BuyAndHoldStrategy>(
                p.has("b") ? std::optional<Portfolio>(p.portfolio("b")) : std::nullopt);
        if (name == "best") return std::make_unique<BestStockStrategy>();
        if (name == "crp")
            return std::make_unique<ConstantRebalancedStrategy>(
                p.has("b") ? std::optional<Portfolio>(p.portfolio("b")) : std::nullopt, "crp");
        if (name == "ucrp")
            return std::make_unique<ConstantRebalancedStrategy>(std::nullopt, "ucrp");
        if (name == "bcrp") return std::make_unique<BcrpStrategy>();

        // follow the winner ---------------------------------------------
        if (name == "up") {
            UPSpec spec;
            spec.grid_step = p.real("step");
            spec.samples = p.integer("samples");
            spec.seed = seed;
            const std::string& mode = p.text("mode");
            const std::string& prior = p.text("prior");
            if (prior == "dirichlet_half")
                spec.prior = UPSpec::Prior::dirichlet_half;
            else if (prior != "uniform")
                throw std::invalid_argument("up: prior must be uniform|dirichlet_half");
            if (mode == "grid") spec.mode = UPSpec::Mode::grid;
            else if (mode == "mc") spec.mode = UPSpec::Mode::monte_carlo;
            else if (mode != "auto")
                throw std::invalid_argument("up: mode must be auto|grid|mc");
            if (spec.prior == UPSpec::Prior::dirichlet_half && mode == "grid")
                throw std::invalid_argument("up: dirichlet prior needs mc mode");
            if (spec.prior == UPSpec::Prior::dirichlet_half && mode == "auto")
                spec.mode = UPSpec::Mode::monte_carlo;
            return std::make_unique<UniversalPortfolioStrategy>(
                spec, mode == "auto" && spec.prior == UPSpec::Prior::uniform);
        }
        if (name == "eg")
            return std::make_unique<GradientFamilyStrategy>(GradientMode::EG, p.real("eta"));
        if (name == "gp")
            return std::make_unique<GradientFamilyStrategy>(GradientMode::GP, p.real("eta"));
        if (name == "em")
            return std::make_unique<GradientFamilyStrategy>(GradientMode::EM, p.real("eta"));
        if (name == "ftl" || name == "scrp") {
            FTLVariant v;
            v.kind = name == "ftl" ? FTLVariant::Kind::FTL : FTLVariant::Kind::SCRP;
            return std::make_unique<FollowLeaderStrategy>(v, name);
        }
        if (name == "wscrp") {
            FTLVariant v;
            v.kind = FTLVariant::Kind::WSCRP;
            v.gamma = p.real("gamma");
            return std::make_unique<FollowLeaderStrategy>(v, name);
        }
        if (name == "vrp") {
            FTLVariant v;
            v.kind = FTLVariant::Kind::VRP;
            v.window = p.integer("window");
            return std::make_unique<FollowLeaderStrategy>(v, name);
        }
        if (name == "ons")
            return std::make_unique<OnlineNewtonStepStrategy>(p.real("beta"), p.real("delta"));
        if (name == "expconcave_ftl") return std::make_unique<ExpConcaveFTLStrategy>();
        if (name == "sp")
            return std::make_unique<SwitchingPortfolioStrategy>(p.real("gamma"));

        // follow the loser ----------------------------------------------
        if (name == "anticor") {
            const long long w = p.integer("w");
            if (w > 0) return std::make_unique<AnticorStrategy>(w);
            // default: pool of windows 2..wmax under the wealth-share mixture
            const long long wmax = p.integer("wmax");
            if (wmax < 2) throw std::invalid_argument("anticor: wmax must be >= 2");
            std::vector<StrategyPtr> pool;
            for (long long win = 2; win <= wmax; ++win)
                pool.push_back(std::make_unique<AnticorStrategy>(win));
            MetaSpec spec;
            spec.kind = MetaKind::bah;
            return std::make_unique<MetaStrategy>(spec, std::move(pool), "anticor");
        }
        if (name == "pamr") {
            ReversionSpec spec;
            spec.epsilon = p.real("eps");
            spec.pamr_variant = static_cast<int>(p.integer("variant"));
            spec.aggressiveness = p.real("C");
            return std::make_unique<PamrStrategy>(spec);
        }
        if (name == "cwmr")
            return std::make_unique<CwmrStrategy>(p.real("eps"), p.real("phi"));
        if (name == "olmar")
            return std::make_unique<MovingReversionStrategy>(
                ReversionPredictor::moving_average, p.real("eps"), p.integer("w"));
        if (name == "rmr")
            return std::make_unique<MovingReversionStrategy>(ReversionPredictor::l1_median,
                                                             p.real("eps"), p.integer("w"));

        // pattern matching ------------------------------------------------
        if (name == "bh" || name == "bk" || name == "bnn" || name == "corn" || name == "bs" ||
            name == "bm" || name == "bgv") {
            SelectorSpec sel;
            sel.w = p.integer("w");
            UtilitySpec util;
            if (name == "bh") {
                sel.method = SelectorSpec::Method::histogram;
                sel.bins = p.integer("bins");
            } else if (name == "bnn") {
                sel.method = SelectorSpec::Method::nearest_neighbor;
                sel.neighbors = p.integer("ell");
            } else if (name == "corn") {
                sel.method = SelectorSpec::Method::correlation;
                sel.rho = p.real("rho");
            } else {
                sel.method = SelectorSpec::Method::kernel;
                sel.radius = p.real("radius");
            }
            if (name == "bs") util.kind = UtilitySpec::Kind::semi_log;
            if (name == "bm") {
                util.kind = UtilitySpec::Kind::markowitz;
                util.lambda = p.real("lambda");
            }
            if (name == "bgv") {
                util.kind = UtilitySpec::Kind::gv;
                util.costs = CostSpec(p.real("cbuy"), p.real("csell"));
            }
            return std::make_unique<PatternMatchingStrategy>(sel, util, name);
        }

        // meta ----------------------------------------------------------
        if (name.rfind("meta:", 0) == 0) {
            if (name == "meta:flh") {
                const std::string base =
                    experts.empty() ? p.text("base") : ExpertSpec::parse(experts.front()).name;
                const ParamMap base_params =
                    experts.empty() ? ParamMap{} : ExpertSpec::parse(experts.front()).params;
                if (base.rfind("meta:", 0) == 0)
                    throw std::invalid_argument("meta:flh cannot nest meta strategies");
                info(base);  // validate the base name early
                return std::make_unique<FlhStrategy>(
                    [this, base, base_params, seed] { return make(base, base_params, {}, seed); },
                    "meta:flh");
            }
            std::vector<std::string> pool = experts;
            if (pool.empty()) {
                std::stringstream ss(p.text("experts"));
                std::string item;
                while (std::getline(ss, item, ',')) pool.push_back(item);
            }
            if (pool.empty()) throw std::invalid_argument(name + ": needs experts");
            std::vector<StrategyPtr> built;
            for (const auto& text : pool) {
                const auto spec = ExpertSpec::parse(text);
                if (spec.name.rfind("meta:", 0) == 0)
                    throw std::invalid_argument("meta strategies cannot nest as experts");
                built.push_back(make(spec.name, spec.params, {}, seed));
            }
            MetaSpec spec;
            spec.eta = p.real("eta");
            spec.beta = p.real("beta");
            spec.delta = p.real("delta");
            if (name == "meta:aa") spec.kind = MetaKind::aa;
            else if (name == "meta:bah") spec.kind = MetaKind::bah;
            else if (name == "meta:ogu") spec.kind = MetaKind::ogu;
            else if (name == "meta:onu") spec.kind = MetaKind::onu;
            else throw std::invalid_argument("unknown meta strategy '" + name + "'");
            return std::make_unique<MetaStrategy>(spec, std::move(built), name);
        }

        throw std::logic_error("registry entry '" + name + "' has no factory");
    }

private:
    StrategyRegistry() {
        using T = ParamDef::Type;
        const std::string B = "benchmarks";
        const std::string FW = "follow-the-winner";
        const std::string FL = "follow-the-loser";
        const std::string PM = "pattern-matching";
        const std::string ML = "meta-learning";

        catalog_ = {
            {"bah", B, "buy and hold the initial portfolio",
             {{"b", T::portfolio, "", "initial weights w1:w2:... (default uniform)"}}},
            {"best", B, "hindsight best single stock", {}},
            {"crp", B, "rebalance to a fixed portfolio",
             {{"b", T::portfolio, "", "target weights (default uniform)"}}},
            {"ucrp", B, "uniform constant rebalanced portfolio", {}},
            {"bcrp", B, "hindsight best constant rebalanced portfolio", {}},

            {"up", FW, "wealth-weighted mixture of CRP managers",
             {{"mode", T::text, "auto", "auto|grid|mc"},
              {"step", T::real, "0.05", "grid spacing"},
              {"samples", T::integer, "10000", "Monte Carlo managers"},
              {"prior", T::text, "uniform", "uniform|dirichlet_half"}}},
            {"eg", FW, "exponential gradient", {{"eta", T::real, "0.05", "learning rate"}}},
            {"gp", FW, "gradient projection", {{"eta", T::real, "0.05", "learning rate"}}},
            {"em", FW, "expectation maximization first-order update",
             {{"eta", T::real, "0.05", "learning rate"}}},
            {"ftl", FW, "follow the leader (hindsight CRP so far)", {}},
            {"scrp", FW, "successive constant rebalanced portfolio", {}},
            {"wscrp", FW, "blend of the running leader and the previous portfolio",
             {{"gamma", T::real, "0.5", "weight on the previous portfolio"}}},
            {"vrp", FW, "leader over a sliding window",
             {{"window", T::integer, "10", "window size"}}},
            {"ons", FW, "online Newton step",
             {{"beta", T::real, "1", "trade-off"}, {"delta", T::real, "0.125", "scale"}}},
            {"expconcave_ftl", FW, "L2-regularized follow the leader", {}},
            {"sp", FW, "switching portfolios with geometric prior",
             {{"gamma", T::real, "0.1", "switching rate"}}},

            {"anticor", FL, "anti-correlation wealth transfers",
             {{"w", T::integer, "0", "window; 0 pools windows 2..wmax"},
              {"wmax", T::integer, "30", "largest pooled window"}}},
            {"pamr", FL, "passive aggressive mean reversion",
             {{"eps", T::real, "0.5", "reversion threshold"},
              {"variant", T::integer, "0", "0 plain, 1 capped, 2 soft"},
              {"C", T::real, "500", "aggressiveness for variants 1/2"}}},
            {"cwmr", FL, "confidence weighted mean reversion",
             {{"eps", T::real, "0.5", "reversion threshold"},
              {"phi", T::real, "1.645", "confidence (inverse normal of theta)"}}},
            {"olmar", FL, "moving average reversion",
             {{"eps", T::real, "10", "reversion threshold"},
              {"w", T::integer, "5", "moving-average window"}}},
            {"rmr", FL, "robust median reversion",
             {{"eps", T::real, "5", "reversion threshold"},
              {"w", T::integer, "5", "median window"}}},

            {"bh", PM, "histogram selection + log-optimal",
             {{"w", T::integer, "2", "pattern window"},
              {"bins", T::integer, "3", "quantile bins per coordinate"}}},
            {"bk", PM, "kernel selection + log-optimal",
             {{"w", T::integer, "5", "pattern window"},
              {"radius", T::real, "1", "match radius"}}},
            {"bnn", PM, "nearest-neighbor selection + log-optimal",
             {{"w", T::integer, "5", "pattern window"},
              {"ell", T::integer, "10", "neighbors"}}},
            {"corn", PM, "correlation selection + log-optimal",
             {{"w", T::integer, "5", "pattern window"},
              {"rho", T::real, "0.1", "correlation threshold"}}},
            {"bs", PM, "kernel selection + semi-log utility",
             {{"w", T::integer, "5", "pattern window"},
              {"radius", T::real, "1", "match radius"}}},
            {"bm", PM, "kernel selection + mean-variance utility",
             {{"w", T::integer, "5", "pattern window"},
              {"radius", T::real, "1", "match radius"},
              {"lambda", T::real, "0.5", "risk weight"}}},
            {"bgv", PM, "kernel selection + transaction-aware log utility",
             {{"w", T::integer, "5", "pattern window"},
              {"radius", T::real, "1", "match radius"},
              {"cbuy", T::real, "0", "buy rate inside the utility"},
              {"csell", T::real, "0", "sell rate inside the utility"}}},

            {"meta:aa", ML, "aggregating weights over experts",
             {{"eta", T::real, "1", "learning rate"},
              {"beta", T::real, "1", ""},
              {"delta", T::real, "0.125", ""},
              {"experts", T::text, "pamr,olmar,ucrp", "default expert pool"}}},
            {"meta:bah", ML, "wealth-share pooling of experts",
             {{"eta", T::real, "1", ""},
              {"beta", T::real, "1", ""},
              {"delta", T::real, "0.125", ""},
              {"experts", T::text, "pamr,olmar,ucrp", "default expert pool"}}},
            {"meta:ogu", ML, "gradient update on expert weights",
             {{"eta", T::real, "0.05", "learning rate"},
              {"beta", T::real, "1", ""},
              {"delta", T::real, "0.125", ""},
              {"experts", T::text, "pamr,olmar,ucrp", "default expert pool"}}},
            {"meta:onu", ML, "Newton update on expert weights",
             {{"eta", T::real, "1", ""},
              {"beta", T::real, "1", "trade-off"},
              {"delta", T::real, "0.125", "scale"},
              {"experts", T::text, "pamr,olmar,ucrp", "default expert pool"}}},
            {"meta:flh", ML, "working set of restarts of one base strategy",
             {{"base", T::text, "ons", "base strategy name"}}},
        };
    }

    std::vector<StrategyInfo> catalog_;
};

}  // namespace olps
