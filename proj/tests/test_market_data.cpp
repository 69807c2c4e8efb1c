#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "olps/market_data.hpp"

using namespace olps;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::string write_temp(const std::string& contents) {
    static int counter = 0;
    auto path = std::filesystem::temp_directory_path() /
                ("olps_md_" + std::to_string(++counter) + ".csv");
    std::ofstream out(path);
    out << contents;
    return path.string();
}

}  // namespace

TEST_CASE("prices convert to ratios of consecutive rows", "[market_data]") {
    auto path = write_temp("2,4\n2,2\n");
    auto seq = load_price_relatives(path, DataFormat::prices);
    REQUIRE(seq.periods() == 1);
    REQUIRE(seq.assets() == 2);
    CHECK(seq.matrix()(0, 0) == 1.0);
    CHECK(seq.matrix()(0, 1) == 0.5);
    std::remove(path.c_str());
}

TEST_CASE("price rows 1,1 / 1,2 / 1,1 give the doubling-halving relatives", "[market_data]") {
    auto path = write_temp("1,1\n1,2\n1,1\n");
    auto seq = load_price_relatives(path, DataFormat::prices);
    REQUIRE(seq.periods() == 2);
    CHECK(seq.matrix()(0, 0) == 1.0);
    CHECK(seq.matrix()(0, 1) == 2.0);
    CHECK(seq.matrix()(1, 0) == 1.0);
    CHECK(seq.matrix()(1, 1) == 0.5);
    std::remove(path.c_str());
}

TEST_CASE("bad cells are rejected with their position", "[market_data]") {
    SECTION("zero relative") {
        auto path = write_temp("1.0,0\n");
        try {
            load_price_relatives(path, DataFormat::relatives);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.row() == 1);
            CHECK(e.column() == 2);
        }
        std::remove(path.c_str());
    }
    SECTION("non-numeric cell") {
        auto path = write_temp("1.0,abc\n");
        CHECK_THROWS_AS(load_price_relatives(path, DataFormat::relatives), ParseError);
        std::remove(path.c_str());
    }
    SECTION("ragged row") {
        auto path = write_temp("1,2\n1\n");
        CHECK_THROWS_AS(load_price_relatives(path, DataFormat::relatives), ParseError);
        std::remove(path.c_str());
    }
    SECTION("single price row cannot form a relative") {
        auto path = write_temp("1,2\n");
        CHECK_THROWS_AS(load_price_relatives(path, DataFormat::prices), ParseError);
        std::remove(path.c_str());
    }
    SECTION("missing file") {
        CHECK_THROWS_AS(load_price_relatives("/nonexistent/nope.csv", DataFormat::relatives),
                        ParseError);
    }
}

TEST_CASE("header row provides asset names", "[market_data]") {
    auto path = write_temp("cash,tech\n1,2\n1,0.5\n");
    auto seq = load_price_relatives(path, DataFormat::relatives, true);
    REQUIRE(seq.asset_names().size() == 2);
    CHECK(seq.asset_names()[0] == "cash");
    CHECK(seq.asset_names()[1] == "tech");
    std::remove(path.c_str());
}

TEST_CASE("writer and reader round-trip a generated market", "[market_data]") {
    auto seq = synthetic_iid(3, 12, 99);
    auto path = write_temp("");
    write_price_relatives(seq, path, true);
    auto back = load_price_relatives(path, DataFormat::relatives, true);
    REQUIRE(back.periods() == seq.periods());
    REQUIRE(back.assets() == seq.assets());
    CHECK((back.matrix() - seq.matrix()).lpNorm<Eigen::Infinity>() == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("alternating synthetic market", "[market_data]") {
    SECTION("n=3 rows") {
        auto seq = synthetic_cg86(3);
        REQUIRE(seq.periods() == 3);
        CHECK(seq.matrix()(0, 1) == 2.0);
        CHECK(seq.matrix()(1, 1) == 0.5);
        CHECK(seq.matrix()(2, 1) == 2.0);
    }
    SECTION("n=1 base case") {
        auto seq = synthetic_cg86(1);
        CHECK(seq.matrix()(0, 0) == 1.0);
        CHECK(seq.matrix()(0, 1) == 2.0);
    }
    SECTION("n=0 rejected") { CHECK_THROWS_AS(synthetic_cg86(0), std::invalid_argument); }
    SECTION("cash column is exactly 1") {
        auto seq = synthetic_cg86(17);
        for (Eigen::Index t = 0; t < 17; ++t) CHECK(seq.matrix()(t, 0) == 1.0);
    }
    SECTION("even-length product of the volatile column is 1") {
        auto seq = synthetic_cg86(4);
        double p = 1.0;
        for (Eigen::Index t = 0; t < 4; ++t) p *= seq.matrix()(t, 1);
        CHECK_THAT(p, WithinAbs(1.0, 0.0));
    }
}

TEST_CASE("seeded iid market", "[market_data]") {
    SECTION("same seed, same matrix") {
        auto a = synthetic_iid(2, 5, 7);
        auto b = synthetic_iid(2, 5, 7);
        CHECK((a.matrix() - b.matrix()).lpNorm<Eigen::Infinity>() == 0.0);
    }
    SECTION("degenerate bounds give all ones") {
        auto seq = synthetic_iid(3, 4, 11, 1.0, 1.0);
        CHECK((seq.matrix().array() == 1.0).all());
    }
    SECTION("entries stay in range") {
        auto seq = synthetic_iid(3, 10, 1, 0.5, 1.5);
        CHECK((seq.matrix().array() >= 0.5).all());
        CHECK((seq.matrix().array() <= 1.5).all());
    }
    SECTION("invalid bounds rejected") {
        CHECK_THROWS_AS(synthetic_iid(2, 2, 1, 0.0, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(synthetic_iid(2, 2, 1, 1.2, 1.0), std::invalid_argument);
    }
}

TEST_CASE("prices -> relatives -> cumulative product reconstructs price ratios",
          "[market_data]") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> dist(10.0, 200.0);
    const int n = 40, m = 4;
    Eigen::MatrixXd prices(n, m);
    for (int t = 0; t < n; ++t)
        for (int i = 0; i < m; ++i) prices(t, i) = dist(rng);

    std::string csv;
    for (int t = 0; t < n; ++t) {
        for (int i = 0; i < m; ++i) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g%s", prices(t, i), i + 1 < m ? "," : "\n");
            csv += buf;
        }
    }
    auto path = write_temp(csv);
    auto seq = load_price_relatives(path, DataFormat::prices);
    REQUIRE(seq.periods() == n - 1);
    for (int i = 0; i < m; ++i) {
        double cum = 1.0;
        for (int t = 0; t < n - 1; ++t) {
            cum *= seq.matrix()(t, i);
            CHECK_THAT(cum, WithinRel(prices(t + 1, i) / prices(0, i), 1e-12));
        }
    }
    std::remove(path.c_str());
}

TEST_CASE("market window views", "[market_data]") {
    auto seq = synthetic_cg86(6);
    auto w = MarketWindow::range(seq, 2, 4);
    CHECK(w.rows() == 3);
    CHECK(w.start() == 2);
    CHECK(w.end() == 4);
    CHECK(w.row(0)(1) == 0.5);
    CHECK(w.last()(1) == 0.5);
    CHECK(w.sub(1).rows() == 2);
    CHECK(w.tail(2).row(0)(1) == 2.0);
    CHECK_THROWS_AS(MarketWindow::range(seq, 3, 2), std::invalid_argument);
    CHECK_THROWS_AS(MarketWindow::range(seq, 0, 2), std::invalid_argument);
    CHECK_THROWS_AS(MarketWindow::range(seq, 1, 7), std::invalid_argument);
    CHECK(MarketWindow::prefix(seq, 0).empty());
}
