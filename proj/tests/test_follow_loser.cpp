#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "olps/backtest.hpp"
#include "olps/follow_loser.hpp"

using namespace olps;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Naive re-derivation of the claim matrix, kept separate from the library's
// vectorized version.
Matrix claims_bruteforce(const Matrix& y1, const Matrix& y2) {
    const Eigen::Index w = y1.rows(), m = y1.cols();
    auto mean = [&](const Matrix& y, Eigen::Index col) {
        double s = 0;
        for (Eigen::Index r = 0; r < w; ++r) s += y(r, col);
        return s / static_cast<double>(w);
    };
    auto sd = [&](const Matrix& y, Eigen::Index col) {
        const double mu = mean(y, col);
        double s = 0;
        for (Eigen::Index r = 0; r < w; ++r) s += (y(r, col) - mu) * (y(r, col) - mu);
        return std::sqrt(s / static_cast<double>(w - 1));
    };
    auto cor = [&](Eigen::Index i, Eigen::Index j) {
        const double s1 = sd(y1, i), s2 = sd(y2, j);
        if (s1 == 0.0 || s2 == 0.0) return 0.0;
        double cov = 0;
        for (Eigen::Index r = 0; r < w; ++r)
            cov += (y1(r, i) - mean(y1, i)) * (y2(r, j) - mean(y2, j));
        return cov / static_cast<double>(w - 1) / (s1 * s2);
    };
    Matrix claims = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            if (i == j) continue;
            if (mean(y2, i) > mean(y2, j) && cor(i, j) > 0)
                claims(i, j) = cor(i, j) - std::min(0.0, cor(i, i)) - std::min(0.0, cor(j, j));
        }
    return claims;
}

}  // namespace

TEST_CASE("anticor claim matrix", "[follow_loser]") {
    SECTION("identical windows with equal columns claim nothing") {
        Matrix y(3, 2);
        y << 0.1, 0.1, -0.2, -0.2, 0.05, 0.05;
        CHECK(anticor_claims(y, y).lpNorm<Eigen::Infinity>() == 0.0);
    }
    SECTION("claims are non-negative with a zero diagonal") {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> noise(0.0, 0.05);
        for (int rep = 0; rep < 20; ++rep) {
            Matrix y1(4, 3), y2(4, 3);
            for (Eigen::Index r = 0; r < 4; ++r)
                for (Eigen::Index c = 0; c < 3; ++c) {
                    y1(r, c) = noise(rng);
                    y2(r, c) = noise(rng);
                }
            auto claims = anticor_claims(y1, y2);
            CHECK(claims.minCoeff() >= 0.0);
            for (Eigen::Index i = 0; i < 3; ++i) CHECK(claims(i, i) == 0.0);
            CHECK((claims - claims_bruteforce(y1, y2)).lpNorm<Eigen::Infinity>() < 1e-12);
        }
    }
    SECTION("worked two-asset case adds back negative autocorrelations") {
        // With w=2 every correlation is exactly +1, -1, or 0. Asset 1 leads in
        // y2, cross-correlation is +1, both autocorrelations are -1, so the
        // claim is 1 - (-1) - (-1) = 3.
        Matrix y1(2, 2), y2(2, 2);
        y1 << 0.0, 0.0, 0.2, -0.2;
        y2 << 0.3, -0.1, 0.1, 0.1;
        auto claims = anticor_claims(y1, y2);
        CHECK_THAT(claims(0, 1), WithinAbs(3.0, 1e-12));
        CHECK(claims(1, 0) == 0.0);
        CHECK((claims - claims_bruteforce(y1, y2)).lpNorm<Eigen::Infinity>() < 1e-12);
    }
}

TEST_CASE("anticor transfers", "[follow_loser]") {
    Vector w(2);
    w << 0.6, 0.4;
    Portfolio b{w};

    SECTION("zero claims leave holdings alone") {
        CHECK((anticor_update(b, Matrix::Zero(2, 2)).weights() - b.weights()).norm() == 0.0);
    }
    SECTION("a lone claim moves the full row share") {
        Matrix claims = Matrix::Zero(2, 2);
        claims(0, 1) = 0.7;
        auto next = anticor_update(b, claims);
        CHECK_THAT(next[0], WithinAbs(0.0, 1e-15));
        CHECK_THAT(next[1], WithinAbs(1.0, 1e-15));
    }
    SECTION("outflow never exceeds the holding") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int rep = 0; rep < 50; ++rep) {
            Matrix claims(3, 3);
            for (Eigen::Index i = 0; i < 3; ++i)
                for (Eigen::Index j = 0; j < 3; ++j) claims(i, j) = i == j ? 0.0 : u(rng);
            Vector h(3);
            h << u(rng) + 0.01, u(rng) + 0.01, u(rng) + 0.01;
            auto next = anticor_update(Portfolio(h / h.sum()), claims);
            CHECK(next.weights().minCoeff() >= -1e-15);
            CHECK_THAT(next.weights().sum(), WithinAbs(1.0, 1e-12));
        }
    }
}

TEST_CASE("pamr loss", "[follow_loser]") {
    Vector x(2);
    x << 1.0, 2.0;
    SECTION("below the threshold the loss vanishes") {
        Vector y(2);
        y << 0.4, 0.4;
        CHECK(pamr_loss(Portfolio::uniform(2), y, 0.5) == 0.0);
    }
    SECTION("above the threshold it is linear") {
        CHECK_THAT(pamr_loss(Portfolio::uniform(2), x, 0.5), WithinAbs(1.0, 1e-15));
    }
    SECTION("flat market at the boundary") {
        Vector ones(2);
        ones << 1.0, 1.0;
        CHECK(pamr_loss(Portfolio::uniform(2), ones, 1.0) == 0.0);
    }
    SECTION("epsilon is range checked") {
        CHECK_THROWS_AS(pamr_loss(Portfolio::uniform(2), x, 1.5), std::invalid_argument);
    }
}

TEST_CASE("pamr update", "[follow_loser]") {
    ReversionSpec spec;
    spec.epsilon = 0.5;

    SECTION("hand trace on the doubling step") {
        Vector x(2);
        x << 1.0, 2.0;
        auto next = pamr_update(Portfolio::uniform(2), x, spec);
        // tau = (1.5-0.5)/0.5 = 2, raw (1.5,-0.5), projected (1,0)
        CHECK_THAT(next[0], WithinAbs(1.0, 1e-12));
        CHECK_THAT(next[1], WithinAbs(0.0, 1e-12));
    }
    SECTION("no deviation, no move") {
        Vector ones(2);
        ones << 1.0, 1.0;
        auto next = pamr_update(Portfolio::uniform(2), ones, spec);
        CHECK(next[0] == 0.5);
    }
    SECTION("passive branch keeps the portfolio") {
        Vector x(2);
        x << 0.3, 0.5;
        auto next = pamr_update(Portfolio::uniform(2), x, spec);
        CHECK(next[0] == 0.5);
    }
    SECTION("variants temper the step") {
        Vector x(2);
        x << 1.0, 2.0;
        ReversionSpec capped = spec;
        capped.pamr_variant = 1;
        capped.aggressiveness = 0.5;
        auto b1 = pamr_update(Portfolio::uniform(2), x, capped);
        // tau capped at 0.5: b = (0.5,0.5) - 0.5*(-0.5,0.5) = (0.75, 0.25)
        CHECK_THAT(b1[0], WithinAbs(0.75, 1e-12));

        ReversionSpec soft = spec;
        soft.pamr_variant = 2;
        soft.aggressiveness = 1.0;
        auto b2 = pamr_update(Portfolio::uniform(2), x, soft);
        // tau = 1 / (0.5 + 0.5) = 1: b = (1.0, 0.0)
        CHECK_THAT(b2[0], WithinAbs(1.0, 1e-12));
    }
    SECTION("moves away from winners") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.5, 1.5);
        for (int rep = 0; rep < 30; ++rep) {
            Vector x(3);
            x << u(rng), u(rng), u(rng);
            auto next = pamr_update(Portfolio::uniform(3), x, spec);
            const Vector dev = (x.array() - x.mean()).matrix();
            CHECK((next.weights() - Vector::Constant(3, 1.0 / 3)).dot(dev) <= 1e-12);
        }
    }
}

TEST_CASE("pamr rides the alternating market", "[follow_loser]") {
    ReversionSpec spec;
    spec.epsilon = 0.5;
    PamrStrategy pamr(spec);
    auto seq = synthetic_cg86(100);
    auto res = run_backtest(pamr, seq);
    CHECK_THAT(res.portfolios[1][0], WithinAbs(1.0, 1e-9));  // b_2 = (1,0)
    CHECK_THAT(res.portfolios[2][1], WithinAbs(1.0, 1e-9));  // b_3 = (0,1)
    const double ucrp_wealth = crp_wealth(Portfolio::uniform(2), seq);
    CHECK(res.final_wealth() > ucrp_wealth);
}

TEST_CASE("cwmr update", "[follow_loser]") {
    SECTION("uniform move leaves the belief untouched") {
        auto g = GaussianPortfolio::initial(2);
        Vector x(2);
        x << 1.3, 1.3;
        auto next = cwmr_update(g, x, 0.5, 1.645);
        CHECK((next.mu - g.mu).lpNorm<Eigen::Infinity>() < 1e-12);
        CHECK((next.sigma - g.sigma).lpNorm<Eigen::Infinity>() < 1e-15);
    }
    SECTION("satisfied constraint is passive") {
        auto g = GaussianPortfolio::initial(2);
        Vector x(2);
        x << 0.2, 0.4;  // mu.x = 0.3 <= 0.5 and phi = 0
        auto next = cwmr_update(g, x, 0.5, 0.0);
        CHECK((next.mu - g.mu).lpNorm<Eigen::Infinity>() < 1e-12);
    }
    SECTION("with phi = 0 the step direction matches the PAMR direction") {
        GaussianPortfolio g;
        g.mu = Vector::Constant(2, 0.5);
        g.sigma = Vector::Ones(2);
        Vector x(2);
        x << 1.0, 2.0;
        auto next = cwmr_update(g, x, 0.5, 0.0);
        ReversionSpec spec;
        spec.epsilon = 0.5;
        auto pamr = pamr_update(Portfolio::uniform(2), x, spec);
        CHECK_THAT(next.mu(0), WithinAbs(pamr[0], 1e-9));
        CHECK_THAT(next.mu(1), WithinAbs(pamr[1], 1e-9));
    }
    SECTION("active steps tighten the constraint and shrink variance") {
        auto g = GaussianPortfolio::initial(3);
        Vector x(3);
        x << 1.0, 1.4, 0.8;
        auto next = cwmr_update(g, x, 0.5, 1.645);
        CHECK(next.mu.minCoeff() >= 0.0);
        CHECK_THAT(next.mu.sum(), WithinAbs(1.0, 1e-12));
        for (int i = 0; i < 3; ++i) CHECK(next.sigma(i) <= g.sigma(i) + 1e-15);
        // wealth flows away from the winner
        CHECK(next.mu(1) < g.mu(1));
    }
}

TEST_CASE("moving-average prediction", "[follow_loser]") {
    auto seq = synthetic_cg86(4);  // ends on (1, 0.5) at row 3
    SECTION("w = 1 predicts no change") {
        auto xhat = olmar_predict(MarketWindow::prefix(seq, 3), 1);
        CHECK(xhat(0) == 1.0);
        CHECK(xhat(1) == 1.0);
    }
    SECTION("constant prices predict no change") {
        PriceRelativeSequence flat(Matrix::Ones(6, 2));
        auto xhat = olmar_predict(MarketWindow::prefix(flat, 6), 4);
        CHECK_THAT(xhat(0), WithinAbs(1.0, 1e-15));
    }
    SECTION("w = 2 mixes the latest relative") {
        Matrix row(1, 2);
        row << 1.0, 2.0;
        PriceRelativeSequence seq1{row};
        auto xhat = olmar_predict(MarketWindow::prefix(seq1, 1), 2);
        CHECK_THAT(xhat(0), WithinAbs(1.0, 1e-15));
        CHECK_THAT(xhat(1), WithinAbs(0.75, 1e-15));
    }
}

TEST_CASE("passive-aggressive reversion step", "[follow_loser]") {
    SECTION("already above threshold stays put") {
        Vector xhat(2);
        xhat << 1.2, 1.0;
        auto b = reversion_pa_step(Portfolio::uniform(2), xhat, 1.05);
        CHECK(b[0] == 0.5);
    }
    SECTION("flat prediction cannot move") {
        Vector xhat = Vector::Ones(2);
        auto b = reversion_pa_step(Portfolio::uniform(2), xhat, 1.5);
        CHECK(b[0] == 0.5);
    }
    SECTION("steps toward the predicted winner") {
        Vector xhat(2);
        xhat << 1.0, 0.75;
        auto b = reversion_pa_step(Portfolio::uniform(2), xhat, 1.01);
        CHECK(b[0] > 0.5);
        CHECK(b[1] < 0.5);
    }
    SECTION("active steps always move with the de-meaned prediction") {
        std::mt19937_64 rng(21);
        std::uniform_real_distribution<double> u(0.6, 1.4);
        for (int rep = 0; rep < 40; ++rep) {
            Vector xhat(4);
            for (int i = 0; i < 4; ++i) xhat(i) = u(rng);
            Vector raw(4);
            for (int i = 0; i < 4; ++i) raw(i) = u(rng);
            Portfolio b = project_to_simplex(raw);
            auto next = reversion_pa_step(b, xhat, 1.5);
            const Vector dev = (xhat.array() - xhat.mean()).matrix();
            CHECK((next.weights() - b.weights()).dot(dev) >= -1e-12);
        }
    }
}

TEST_CASE("cwmr active steps flow wealth away from the weighted winners", "[follow_loser]") {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(0.6, 1.4);
    for (int rep = 0; rep < 40; ++rep) {
        GaussianPortfolio g;
        Vector raw(3);
        for (int i = 0; i < 3; ++i) raw(i) = u(rng);
        g.mu = project_to_simplex(raw).weights();
        g.sigma = Vector::Constant(3, 0.1);
        Vector x(3);
        for (int i = 0; i < 3; ++i) x(i) = u(rng);
        auto next = cwmr_update(g, x, 0.5, 0.0);  // phi = 0 keeps sigma fixed
        const double xbar = g.sigma.dot(x) / g.sigma.sum();
        const Vector dev = (x.array() - xbar).matrix();
        CHECK((next.mu - g.mu).dot(dev) <= 1e-10);
    }
}

TEST_CASE("geometric median", "[follow_loser]") {
    SECTION("identical points") {
        Vector p(2);
        p << 1.0, 2.0;
        auto res = l1_median({p, p, p});
        CHECK((res.point - p).norm() < 1e-12);
    }
    SECTION("equilateral triangle centroid") {
        Vector a(2), b(2), c(2);
        a << 0.0, 0.0;
        b << 1.0, 0.0;
        c << 0.5, std::sqrt(3.0) / 2.0;
        auto res = l1_median({a, b, c}, 1e-12, 500);
        const Vector centroid = (a + b + c) / 3.0;
        CHECK((res.point - centroid).norm() < 1e-8);
        for (std::size_t k = 1; k < res.objective_trace.size(); ++k)
            CHECK(res.objective_trace[k] <= res.objective_trace[k - 1] + 1e-12);
    }
    SECTION("unit square corners meet in the middle") {
        Vector a(2), b(2), c(2), d(2);
        a << 0, 0;
        b << 1, 0;
        c << 0, 1;
        d << 1, 1;
        auto res = l1_median({a, b, c, d});
        CHECK_THAT(res.point(0), WithinAbs(0.5, 1e-8));
        CHECK_THAT(res.point(1), WithinAbs(0.5, 1e-8));
    }
    SECTION("objective never beats the mean start") {
        std::mt19937_64 rng(8);
        std::normal_distribution<double> noise(0.0, 1.0);
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<Vector> pts;
            for (int k = 0; k < 6; ++k) {
                Vector p(3);
                p << noise(rng), noise(rng), noise(rng);
                pts.push_back(p);
            }
            auto res = l1_median(pts);
            CHECK(res.objective_trace.back() <= res.objective_trace.front() + 1e-12);
        }
    }
}

TEST_CASE("median-based prediction", "[follow_loser]") {
    SECTION("constant prices predict no change") {
        PriceRelativeSequence flat(Matrix::Ones(6, 2));
        auto xhat = rmr_predict(MarketWindow::prefix(flat, 6), 4);
        CHECK_THAT(xhat(0), WithinAbs(1.0, 1e-9));
    }
    SECTION("a crash against a steady median predicts a bounce") {
        // prices 4,4,1: relatives 1 then 1/4; other asset flat.
        Matrix rows(2, 2);
        rows << 1.0, 1.0, 1.0, 0.25;
        PriceRelativeSequence seq{rows};
        auto xhat = rmr_predict(MarketWindow::prefix(seq, 2), 3);
        CHECK(xhat(1) > 1.0);
        CHECK_THAT(xhat(0), WithinAbs(1.0, 1e-6));
    }
    SECTION("symmetric window gives a symmetric prediction") {
        Matrix rows(2, 2);
        rows << 2.0, 2.0, 0.5, 0.5;
        PriceRelativeSequence seq{rows};
        auto xhat = rmr_predict(MarketWindow::prefix(seq, 2), 3);
        CHECK_THAT(xhat(0), WithinAbs(xhat(1), 1e-10));
    }
}

TEST_CASE("reversion strategies stay feasible and warm up uniform", "[follow_loser]") {
    auto seq = synthetic_iid(3, 30, 15);
    for (auto predictor : {ReversionPredictor::moving_average, ReversionPredictor::l1_median}) {
        MovingReversionStrategy strat(predictor, predictor == ReversionPredictor::moving_average
                                                     ? 10.0
                                                     : 5.0,
                                      5);
        auto res = run_backtest(strat, seq);
        for (Eigen::Index t = 0; t < 4; ++t)  // periods 1..w are uniform
            CHECK((res.portfolios[static_cast<std::size_t>(t)].weights().array() - 1.0 / 3.0)
                      .abs()
                      .maxCoeff() < 1e-15);
        for (const auto& b : res.portfolios) {
            CHECK(b.weights().minCoeff() >= 0.0);
            CHECK_THAT(b.weights().sum(), WithinAbs(1.0, 1e-9));
        }
    }
}
