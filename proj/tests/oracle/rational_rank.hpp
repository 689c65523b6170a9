#pragma once

// Exact rank by fraction-arithmetic Gaussian elimination. Test-only oracle.

#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "peu/numkit.hpp"

namespace peu::oracle {

using Rational = boost::multiprecision::cpp_rational;

/// Rank of an integer or rational matrix given as rows of exact entries.
inline long exact_rank(std::vector<std::vector<Rational>> a) {
    if (a.empty()) return 0;
    const std::size_t rows = a.size(), cols = a.front().size();
    std::size_t rank = 0;
    for (std::size_t col = 0; col < cols && rank < rows; ++col) {
        std::size_t pivot = rank;
        while (pivot < rows && a[pivot][col] == 0) ++pivot;
        if (pivot == rows) continue;
        std::swap(a[pivot], a[rank]);
        for (std::size_t r = rank + 1; r < rows; ++r) {
            if (a[r][col] == 0) continue;
            const Rational factor = a[r][col] / a[rank][col];
            for (std::size_t c = col; c < cols; ++c) a[r][c] -= factor * a[rank][c];
        }
        ++rank;
    }
    return static_cast<long>(rank);
}

/// Exact rank of the double matrix read as rationals, each entry rounded to
/// `scale` (e.g. 1e6) before conversion.
inline long exact_rank(const Matrix& m, double scale = 0.0) {
    std::vector<std::vector<Rational>> a(static_cast<std::size_t>(m.rows()),
                                         std::vector<Rational>(static_cast<std::size_t>(m.cols())));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) {
            Rational value;
            if (scale > 0.0)
                value = Rational(static_cast<long long>(std::llround(m(i, j) * scale)), static_cast<long long>(scale));
            else
                value = Rational(m(i, j));
            a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = value;
        }
    return exact_rank(std::move(a));
}

}  // namespace peu::oracle
