#pragma once

#include <utility>
#include <vector>

#include "peu/numkit.hpp"

namespace peu {

/// Finite vector-valued time series v(0), ..., v(T-1).
///
/// Samples are the columns of a dim x T matrix, so time is the outermost index
/// in memory.
class Signal {
   public:
    explicit Signal(Matrix samples) : samples_(std::move(samples)) {
        detail::require(samples_.rows() >= 1, "signal dimension must be positive");
        detail::require(samples_.cols() >= 1, "signal length must be positive");
        require_finite(samples_, "signal");
    }

    static Signal zeros(Index dim, Index length) { return Signal(Matrix::Zero(dim, length)); }

    /// One inner vector per time step.
    static Signal from_samples(const std::vector<std::vector<double>>& rows) {
        detail::require(!rows.empty(), "signal needs at least one sample");
        Matrix m(static_cast<Index>(rows.front().size()), static_cast<Index>(rows.size()));
        for (std::size_t t = 0; t < rows.size(); ++t) {
            detail::require(rows[t].size() == rows.front().size(), "ragged signal samples");
            for (std::size_t i = 0; i < rows[t].size(); ++i)
                m(static_cast<Index>(i), static_cast<Index>(t)) = rows[t][i];
        }
        return Signal(std::move(m));
    }

    Index dim() const { return samples_.rows(); }
    Index length() const { return samples_.cols(); }
    const Matrix& samples() const { return samples_; }
    auto sample(Index t) const { return samples_.col(t); }

    Signal segment(Index start, Index count) const {
        detail::require(start >= 0 && count >= 1 && start + count <= length(), "signal segment out of range");
        return Signal(samples_.middleCols(start, count));
    }
    Signal head(Index count) const { return segment(0, count); }

    Signal scaled(double c) const { return Signal(samples_ * c); }

    friend bool operator==(const Signal& a, const Signal& b) {
        return a.samples_.rows() == b.samples_.rows() && a.samples_.cols() == b.samples_.cols() &&
               a.samples_ == b.samples_;
    }

   private:
    Matrix samples_;
};

/// v_[0,T-1] as a single (dim*T)-column.
inline Vector stack(const Signal& v) { return flatten_blocks(v.samples()); }

/// Block-Hankel matrix of depth k built from raw dim x T samples.
inline Matrix hankel(const Matrix& samples, Index k) {
    const Index dim = samples.rows(), length = samples.cols();
    detail::require(k >= 1 && k <= length, "Hankel depth must lie in [1, T]");
    Matrix h(k * dim, length - k + 1);
    for (Index i = 0; i < k; ++i) h.middleRows(i * dim, dim) = samples.middleCols(i, length - k + 1);
    return h;
}

inline Matrix hankel(const Signal& v, Index k) { return hankel(v.samples(), k); }

struct PECheck {
    bool is_pe = false;
    RankReport report;
};

/// True iff the depth-k Hankel matrix has full row rank at rtol.
inline PECheck is_pe(const Signal& v, Index k, double rtol = kDefaultRtol) {
    RankReport report = rank_report(hankel(v, k), rtol);
    return {report.full_row_rank, std::move(report)};
}

struct PEReport {
    Index max_order = 0;
    std::vector<std::pair<Index, RankReport>> per_order;
};

/// Highest order at which v is persistently exciting.
///
/// Orders beyond floor((T+1)/(dim+1)) are not scanned: their Hankel matrices
/// have more rows than columns. max_order stops at the first deficient order.
inline PEReport pe_order(const Signal& v, double rtol = kDefaultRtol) {
    PEReport out;
    const Index k_max = (v.length() + 1) / (v.dim() + 1);
    bool still_full = true;
    for (Index k = 1; k <= k_max; ++k) {
        PECheck check = is_pe(v, k, rtol);
        if (still_full && check.is_pe)
            out.max_order = k;
        else
            still_full = false;
        out.per_order.emplace_back(k, std::move(check.report));
    }
    return out;
}

}  // namespace peu
