#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "olps/errors.hpp"

namespace olps {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A market of n periods over m assets, stored as the n x m matrix of gross
/// returns x[t,i] = close price at t divided by close price at t-1. Every
/// entry is finite and strictly positive. Immutable after construction, so a
/// sequence can be shared across concurrent backtests.
class PriceRelativeSequence {
public:
    PriceRelativeSequence(Matrix relatives, std::vector<std::string> asset_names = {})
        : relatives_(std::move(relatives)), asset_names_(std::move(asset_names)) {
        if (relatives_.rows() < 1 || relatives_.cols() < 1)
            throw std::invalid_argument("price relative sequence needs at least 1 period and 1 asset");
        for (Eigen::Index t = 0; t < relatives_.rows(); ++t)
            for (Eigen::Index i = 0; i < relatives_.cols(); ++i) {
                const double v = relatives_(t, i);
                if (!std::isfinite(v) || v <= 0.0)
                    throw ParseError("price relative must be finite and > 0, got " +
                                         std::to_string(v),
                                     static_cast<std::size_t>(t) + 1,
                                     static_cast<std::size_t>(i) + 1);
            }
        if (!asset_names_.empty() &&
            asset_names_.size() != static_cast<std::size_t>(relatives_.cols()))
            throw std::invalid_argument("asset name count does not match column count");
    }

    Eigen::Index periods() const { return relatives_.rows(); }
    Eigen::Index assets() const { return relatives_.cols(); }

    /// Row for period t, 0-based.
    auto row(Eigen::Index t) const { return relatives_.row(t); }

    const Matrix& matrix() const { return relatives_; }
    const std::vector<std::string>& asset_names() const { return asset_names_; }

private:
    Matrix relatives_;
    std::vector<std::string> asset_names_;
};

/// Read-only view of a contiguous run of periods inside a sequence. This is
/// what strategies see: the engine hands out the prefix x_1..x_{t-1} so a
/// decision at period t physically cannot read x_t.
class MarketWindow {
public:
    MarketWindow() : data_(nullptr), first_(0), count_(0) {}

    MarketWindow(const Matrix& data, Eigen::Index first, Eigen::Index count)
        : data_(&data), first_(first), count_(count) {
        if (first < 0 || count < 0 || first + count > data.rows())
            throw std::invalid_argument("market window out of range");
    }

    static MarketWindow prefix(const PriceRelativeSequence& seq, Eigen::Index count) {
        return MarketWindow(seq.matrix(), 0, count);
    }

    /// Inclusive 1-based [start, end] slice, matching the usual period indexing.
    static MarketWindow range(const PriceRelativeSequence& seq, Eigen::Index start,
                              Eigen::Index end) {
        if (start < 1 || start > end || end > seq.periods())
            throw std::invalid_argument("market window requires 1 <= start <= end <= n");
        return MarketWindow(seq.matrix(), start - 1, end - start + 1);
    }

    bool empty() const { return count_ == 0; }
    Eigen::Index rows() const { return count_; }
    Eigen::Index assets() const { return data_ ? data_->cols() : 0; }

    /// 1-based period index of the first/last row in the view.
    Eigen::Index start() const { return first_ + 1; }
    Eigen::Index end() const { return first_ + count_; }

    auto row(Eigen::Index i) const { return data_->row(first_ + i); }
    auto last() const { return data_->row(first_ + count_ - 1); }

    /// Drop the first `offset` rows (used by experts that start mid-run).
    MarketWindow sub(Eigen::Index offset) const {
        if (offset < 0 || offset > count_)
            throw std::invalid_argument("market window sub-view out of range");
        return MarketWindow(*data_, first_ + offset, count_ - offset);
    }

    /// Keep only the last `count` rows (or all rows when fewer exist).
    MarketWindow tail(Eigen::Index count) const {
        const Eigen::Index keep = std::min(count, count_);
        return MarketWindow(*data_, first_ + count_ - keep, keep);
    }

    /// Keep only the first `count` rows.
    MarketWindow head(Eigen::Index count) const {
        if (count < 0 || count > count_)
            throw std::invalid_argument("market window head out of range");
        return MarketWindow(*data_, first_, count);
    }

private:
    const Matrix* data_;
    Eigen::Index first_;
    Eigen::Index count_;
};

enum class DataFormat { relatives, prices };

namespace detail {

inline std::vector<std::vector<double>> parse_csv_numeric(std::istream& in, bool has_header,
                                                          std::vector<std::string>* names) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header_pending = has_header;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        if (header_pending) {
            while (std::getline(ss, cell, ','))
                if (names) names->push_back(cell);
            header_pending = false;
            continue;
        }
        std::vector<double> row;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            ++col;
            try {
                std::size_t pos = 0;
                const double v = std::stod(cell, &pos);
                while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos])))
                    ++pos;
                if (pos != cell.size()) throw std::invalid_argument(cell);
                row.push_back(v);
            } catch (const std::exception&) {
                throw ParseError("non-numeric cell '" + cell + "'", lineno, col);
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError("ragged row: expected " + std::to_string(rows.front().size()) +
                                 " columns, got " + std::to_string(row.size()),
                             lineno, 0);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace detail

/// Load a market from CSV, one period per row. format=prices converts n price
/// rows into n-1 rows of ratios p_t / p_{t-1}; format=relatives takes rows
/// verbatim. All values must be positive either way.
inline PriceRelativeSequence load_price_relatives(const std::string& path, DataFormat format,
                                                  bool has_header = false) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::vector<std::string> names;
    auto rows = detail::parse_csv_numeric(in, has_header, &names);
    if (rows.empty()) throw ParseError("no data rows in '" + path + "'");
    const std::size_t m = rows.front().size();

    std::size_t header_offset = has_header ? 1 : 0;
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t i = 0; i < m; ++i)
            if (!std::isfinite(rows[t][i]) || rows[t][i] <= 0.0)
                throw ParseError("value must be > 0, got " + std::to_string(rows[t][i]),
                                 t + 1 + header_offset, i + 1);

    Matrix rel;
    if (format == DataFormat::prices) {
        if (rows.size() < 2) throw ParseError("price format needs at least 2 rows");
        rel.resize(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(m));
        for (std::size_t t = 1; t < rows.size(); ++t)
            for (std::size_t i = 0; i < m; ++i)
                rel(static_cast<Eigen::Index>(t - 1), static_cast<Eigen::Index>(i)) =
                    rows[t][i] / rows[t - 1][i];
    } else {
        rel.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
        for (std::size_t t = 0; t < rows.size(); ++t)
            for (std::size_t i = 0; i < m; ++i)
                rel(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = rows[t][i];
    }
    return PriceRelativeSequence(std::move(rel), std::move(names));
}

/// Write a sequence back out in the same CSV format the reader accepts.
inline void write_price_relatives(const PriceRelativeSequence& seq, const std::string& path,
                                  bool with_header = true) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out.precision(17);
    if (with_header) {
        for (Eigen::Index i = 0; i < seq.assets(); ++i) {
            if (i) out << ',';
            if (seq.asset_names().empty())
                out << "asset" << (i + 1);
            else
                out << seq.asset_names()[static_cast<std::size_t>(i)];
        }
        out << '\n';
    }
    for (Eigen::Index t = 0; t < seq.periods(); ++t) {
        for (Eigen::Index i = 0; i < seq.assets(); ++i) {
            if (i) out << ',';
            out << seq.matrix()(t, i);
        }
        out << '\n';
    }
}

/// Two-asset market of cash against one asset that alternately doubles and
/// halves: (1,2), (1,1/2), (1,2), ... A rebalanced portfolio grows
/// exponentially here while neither asset trends, which makes the sequence a
/// handy exact oracle.
inline PriceRelativeSequence synthetic_cg86(Eigen::Index n) {
    if (n < 1) throw std::invalid_argument("synthetic_cg86: n must be >= 1");
    Matrix rel(n, 2);
    for (Eigen::Index t = 0; t < n; ++t) {
        rel(t, 0) = 1.0;
        rel(t, 1) = (t % 2 == 0) ? 2.0 : 0.5;  // periods are 1-based: odd -> 2
    }
    return PriceRelativeSequence(std::move(rel), {"cash", "volatile"});
}

/// Seeded i.i.d. market with entries uniform in [low, high]. Same seed, same
/// matrix.
inline PriceRelativeSequence synthetic_iid(Eigen::Index m, Eigen::Index n, std::uint64_t seed,
                                           double low = 0.5, double high = 1.5) {
    if (m < 1 || n < 1) throw std::invalid_argument("synthetic_iid: m and n must be >= 1");
    if (low <= 0.0 || low > high)
        throw std::invalid_argument("synthetic_iid: need 0 < low <= high");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(low, high);
    Matrix rel(n, m);
    for (Eigen::Index t = 0; t < n; ++t)
        for (Eigen::Index i = 0; i < m; ++i) rel(t, i) = dist(rng);
    return PriceRelativeSequence(std::move(rel));
}

}  // namespace olps
