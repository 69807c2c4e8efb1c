#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "olps/errors.hpp"
#include "olps/follow_winner.hpp"
#include "olps/market_data.hpp"
#include "olps/simplex_math.hpp"
#include "olps/strategy.hpp"

namespace olps {

// ---------------------------------------------------------------------------
// Combination layers over arbitrary base experts. Each period the experts
// propose portfolios, the layer mixes them by weight, and the revealed price
// relative updates the weights for the next period.
// ---------------------------------------------------------------------------

/// Mixing weights and per-expert wealth of a combination layer.
struct ExpertPool {
    Vector weights;  // >= 0, sum 1
    Vector wealths;  // running wealth of each expert, > 0

    static ExpertPool initial(Eigen::Index n) {
        ExpertPool p;
        p.weights = Vector::Constant(n, 1.0 / static_cast<double>(n));
        p.wealths = Vector::Ones(n);
        return p;
    }
};

namespace meta_detail {

inline Portfolio mix(const Vector& weights, const std::vector<Portfolio>& bs) {
    Vector combined = Vector::Zero(bs.front().size());
    for (std::size_t j = 0; j < bs.size(); ++j) combined += weights(static_cast<Eigen::Index>(j)) * bs[j].weights();
    return Portfolio(combined / combined.sum());
}

inline Vector expert_returns(const std::vector<Portfolio>& bs, const Vector& x) {
    Vector r(static_cast<Eigen::Index>(bs.size()));
    for (std::size_t j = 0; j < bs.size(); ++j) r(static_cast<Eigen::Index>(j)) = bs[j].dot(x);
    return r;
}

}  // namespace meta_detail

/// Aggregating step: combine with the incoming weights, then scale each
/// weight by (expert return)^eta for the next period.
inline std::pair<ExpertPool, Portfolio> aa_update(ExpertPool pool,
                                                  const std::vector<Portfolio>& expert_bs,
                                                  const Vector& x, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("aa: eta must be > 0");
    const Portfolio combined = meta_detail::mix(pool.weights, expert_bs);
    const Vector r = meta_detail::expert_returns(expert_bs, x);
    for (Eigen::Index j = 0; j < pool.weights.size(); ++j)
        pool.weights(j) *= std::pow(r(j), eta);
    pool.weights /= pool.weights.sum();
    pool.wealths = pool.wealths.cwiseProduct(r);
    return {std::move(pool), combined};
}

/// Fund-of-funds step: wealth split once at the start, experts run on their
/// own, the mixture just reflects their wealth shares. The layer's wealth is
/// identically the mean of the expert wealths.
inline std::pair<ExpertPool, Portfolio> bah_combine(ExpertPool pool,
                                                    const std::vector<Portfolio>& expert_bs,
                                                    const Vector& x) {
    const Vector shares = pool.wealths / pool.wealths.sum();
    const Portfolio combined = meta_detail::mix(shares, expert_bs);
    pool.wealths = pool.wealths.cwiseProduct(meta_detail::expert_returns(expert_bs, x));
    pool.weights = pool.wealths / pool.wealths.sum();
    return {std::move(pool), combined};
}

/// Gradient step on the weight vector, treating expert returns as a pseudo
/// price relative.
inline std::pair<ExpertPool, Portfolio> ogu_update(ExpertPool pool,
                                                   const std::vector<Portfolio>& expert_bs,
                                                   const Vector& x, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("ogu: eta must be > 0");
    const Portfolio combined = meta_detail::mix(pool.weights, expert_bs);
    const Vector r = meta_detail::expert_returns(expert_bs, x);
    const double pool_return = pool.weights.dot(r);
    Vector next(pool.weights.size());
    for (Eigen::Index j = 0; j < next.size(); ++j)
        next(j) = pool.weights(j) * std::exp(eta * r(j) / pool_return);
    pool.weights = next / next.sum();
    pool.wealths = pool.wealths.cwiseProduct(r);
    return {std::move(pool), combined};
}

/// Newton step on the weight vector over the same pseudo market.
inline std::pair<ExpertPool, Portfolio> onu_update(ExpertPool pool, ONSState& state,
                                                   const std::vector<Portfolio>& expert_bs,
                                                   const Vector& x) {
    const Portfolio combined = meta_detail::mix(pool.weights, expert_bs);
    const Vector r = meta_detail::expert_returns(expert_bs, x);
    auto [next_state, next_weights] = ons_update(std::move(state), Portfolio(pool.weights), r);
    state = std::move(next_state);
    pool.weights = next_weights.weights();
    pool.wealths = pool.wealths.cwiseProduct(r);
    return {std::move(pool), combined};
}

enum class MetaKind { aa, bah, ogu, onu };

struct MetaSpec {
    MetaKind kind = MetaKind::bah;
    double eta = 1.0;      // aa / ogu
    double beta = 1.0;     // onu
    double delta = 0.125;  // onu

    void validate() const {
        if (!(eta > 0.0)) throw std::invalid_argument("meta: eta must be > 0");
        if (!(beta > 0.0) || !(delta > 0.0))
            throw std::invalid_argument("meta: beta and delta must be > 0");
    }
};

/// Runs a pool of base experts and mixes their decisions per the chosen rule.
class MetaStrategy : public Strategy {
public:
    MetaStrategy(MetaSpec spec, std::vector<StrategyPtr> experts, std::string name)
        : spec_(spec), experts_(std::move(experts)), name_(std::move(name)) {
        spec_.validate();
        if (experts_.empty()) throw std::invalid_argument("meta: needs at least one expert");
    }

    void reset(Eigen::Index m) override {
        for (auto& e : experts_) e->reset(m);
        pool_ = ExpertPool::initial(static_cast<Eigen::Index>(experts_.size()));
        ons_.beta = spec_.beta;
        ons_.delta = spec_.delta;
        ons_.init(static_cast<Eigen::Index>(experts_.size()));
        history_bs_.clear();
        seen_ = 0;
    }

    void bind(const PriceRelativeSequence& seq) override {
        for (auto& e : experts_) e->bind(seq);
    }

    bool hindsight() const override {
        return std::any_of(experts_.begin(), experts_.end(),
                           [](const StrategyPtr& e) { return e->hindsight(); });
    }

    Portfolio decide(const MarketWindow& past) override {
        while (seen_ < past.rows()) {
            const Vector x = past.row(seen_).transpose();
            const auto& bs = history_bs_[static_cast<std::size_t>(seen_)];
            switch (spec_.kind) {
                case MetaKind::aa:
                    pool_ = aa_update(std::move(pool_), bs, x, spec_.eta).first;
                    break;
                case MetaKind::bah:
                    pool_ = bah_combine(std::move(pool_), bs, x).first;
                    break;
                case MetaKind::ogu:
                    pool_ = ogu_update(std::move(pool_), bs, x, spec_.eta).first;
                    break;
                case MetaKind::onu:
                    pool_ = onu_update(std::move(pool_), ons_, bs, x).first;
                    break;
            }
            ++seen_;
        }
        std::vector<Portfolio> bs;
        bs.reserve(experts_.size());
        for (auto& e : experts_) bs.push_back(e->decide(past));
        Portfolio combined =
            meta_detail::mix(spec_.kind == MetaKind::bah ? Vector(pool_.wealths / pool_.wealths.sum())
                                                         : pool_.weights,
                             bs);
        history_bs_.push_back(std::move(bs));
        return combined;
    }

    std::string name() const override { return name_; }

    const ExpertPool& pool() const { return pool_; }

    std::vector<std::string> expert_names() const {
        std::vector<std::string> names;
        names.reserve(experts_.size());
        for (const auto& e : experts_) names.push_back(e->name());
        return names;
    }

private:
    MetaSpec spec_;
    std::vector<StrategyPtr> experts_;
    ExpertPool pool_;
    ONSState ons_;
    std::vector<std::vector<Portfolio>> history_bs_;
    Eigen::Index seen_ = 0;
    std::string name_;
};

// ---------------------------------------------------------------------------
// Follow the leading history: a working set of copies of one base strategy,
// started at different periods, pruned to a geometric ladder of ages.
// ---------------------------------------------------------------------------

class FlhStrategy : public Strategy {
public:
    FlhStrategy(std::function<StrategyPtr()> base_factory, std::string name = "meta:flh")
        : factory_(std::move(base_factory)), name_(std::move(name)) {
        if (!factory_) throw std::invalid_argument("flh: base factory required");
    }

    void reset(Eigen::Index m) override {
        m_ = m;
        set_.clear();
        seen_ = 0;
    }

    void bind(const PriceRelativeSequence& seq) override { bound_ = &seq; }

    Portfolio decide(const MarketWindow& past) override {
        // Settle previously revealed periods: multiplicative weight update.
        while (seen_ < past.rows()) {
            const Vector x = past.row(seen_).transpose();
            double total = 0.0;
            for (auto& e : set_) {
                e.weight *= e.last.dot(x);
                total += e.weight;
            }
            for (auto& e : set_) e.weight /= total;
            ++seen_;
        }

        const Eigen::Index t = past.rows() + 1;

        // Flow in a fresh expert starting this period; it receives the mixing
        // share alpha = 1/(t+1) and the incumbents share the rest.
        const double alpha = 1.0 / static_cast<double>(t + 1);
        for (auto& e : set_) e.weight *= (1.0 - alpha);
        Entry fresh;
        fresh.start = t;
        fresh.strat = factory_();
        fresh.strat->reset(m_);
        if (bound_) fresh.strat->bind(*bound_);
        fresh.weight = set_.empty() ? 1.0 : alpha;
        fresh.last = Portfolio::uniform(m_);
        set_.push_back(std::move(fresh));

        // Drop out: bucket experts by floor(log2(age+1)) and keep the oldest
        // per bucket, so retained ages form a geometric ladder and the set
        // size stays within ceil(log2 t) + 1.
        prune(t);

        double total = 0.0;
        for (auto& e : set_) total += e.weight;
        Vector combined = Vector::Zero(m_);
        for (auto& e : set_) {
            e.last = e.strat->decide(past.sub(e.start - 1));
            combined += (e.weight / total) * e.last.weights();
        }
        return Portfolio(combined / combined.sum());
    }

    std::string name() const override { return name_; }

    std::size_t working_set_size() const { return set_.size(); }

private:
    struct Entry {
        Eigen::Index start = 1;
        StrategyPtr strat;
        double weight = 1.0;
        Portfolio last = Portfolio::uniform(1);
    };

    void prune(Eigen::Index t) {
        std::vector<Entry> kept;
        int last_bucket = -1;
        // set_ is ordered oldest first; the first entry in each age bucket is
        // the oldest of that bucket.
        for (auto& e : set_) {
            const double age = static_cast<double>(t - e.start);
            const int bucket = static_cast<int>(std::floor(std::log2(age + 1.0)));
            if (bucket != last_bucket) {
                kept.push_back(std::move(e));
                last_bucket = bucket;
            }
        }
        set_ = std::move(kept);
    }

    std::function<StrategyPtr()> factory_;
    std::vector<Entry> set_;
    const PriceRelativeSequence* bound_ = nullptr;
    Eigen::Index m_ = 1;
    Eigen::Index seen_ = 0;
    std::string name_;
};

}  // namespace olps
