#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace meshsim::stats {

/// Dense m x m matrix of non-negative transition counts.
class CountMatrix {
public:
    CountMatrix() = default;
    explicit CountMatrix(int m) : m_(m), cells_(static_cast<std::size_t>(m * m), 0) {
        if (m < 1) throw std::invalid_argument("matrix dimension must be positive");
    }

    int size() const { return m_; }
    std::int64_t& at(int i, int j) { return cells_.at(static_cast<std::size_t>(i * m_ + j)); }
    std::int64_t at(int i, int j) const { return cells_.at(static_cast<std::size_t>(i * m_ + j)); }

    std::span<const std::int64_t> row(int i) const {
        return {cells_.data() + static_cast<std::size_t>(i * m_), static_cast<std::size_t>(m_)};
    }
    std::int64_t row_total(int i) const {
        std::int64_t s = 0;
        for (auto v : row(i)) s += v;
        return s;
    }
    std::int64_t total() const {
        std::int64_t s = 0;
        for (auto v : cells_) s += v;
        return s;
    }

    friend bool operator==(const CountMatrix&, const CountMatrix&) = default;

private:
    int m_ = 0;
    std::vector<std::int64_t> cells_;
};

/// Square matrix of doubles (similarities or distances).
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(int n, double fill = 0.0) : n_(n), cells_(static_cast<std::size_t>(n * n), fill) {}

    int size() const { return n_; }
    double& operator()(int r, int c) { return cells_[static_cast<std::size_t>(r * n_ + c)]; }
    double operator()(int r, int c) const { return cells_[static_cast<std::size_t>(r * n_ + c)]; }

private:
    int n_ = 0;
    std::vector<double> cells_;
};

}  // namespace meshsim::stats
