#pragma once

// Dense rank, kernel and polynomial-root kernel shared by every other header.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "peu/error.hpp"

namespace peu {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;

inline constexpr double kDefaultRtol = 1e-9;
inline constexpr double kDefaultClusterRadius = 1e-6;

/// Outcome of a singular-value rank decision.
///
/// rank counts singular values strictly above tolerance_used, where
/// tolerance_used = rtol * max(rows, cols) * sigma_max (or rtol when the
/// matrix is zero).
struct RankReport {
    Index rows = 0;
    Index cols = 0;
    Index rank = 0;
    Vector singular_values;
    double tolerance_used = 0.0;
    bool full_row_rank = false;
    bool full_col_rank = false;

    double sigma_max() const { return singular_values.size() ? singular_values(0) : 0.0; }
    double sigma_min() const {
        return singular_values.size() ? singular_values(singular_values.size() - 1) : 0.0;
    }
};

/// Finite set of complex numbers; stored roots are pairwise farther apart than
/// cluster_radius.
struct RootSet {
    std::vector<Complex> roots;
    double cluster_radius = kDefaultClusterRadius;

    bool empty() const { return roots.empty(); }
    std::size_t size() const { return roots.size(); }

    double distance_to(Complex z) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& r : roots) best = std::min(best, std::abs(r - z));
        return best;
    }

    bool contains(Complex z) const { return distance_to(z) <= cluster_radius; }
};

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const std::string& what) {
    detail::require(m.allFinite(), what + " has non-finite entries");
}

inline RankReport rank_report(const Matrix& m, double rtol = kDefaultRtol) {
    detail::require(rtol > 0.0 && std::isfinite(rtol), "rtol must be positive");
    require_finite(m, "matrix");

    RankReport report;
    report.rows = m.rows();
    report.cols = m.cols();
    if (m.size() == 0) {
        report.tolerance_used = rtol;
        report.full_row_rank = m.rows() == 0;
        report.full_col_rank = m.cols() == 0;
        return report;
    }

    Eigen::JacobiSVD<Matrix> svd(m);
    report.singular_values = svd.singularValues();
    const double smax = report.sigma_max();
    report.tolerance_used =
        smax > 0.0 ? rtol * static_cast<double>(std::max(m.rows(), m.cols())) * smax : rtol;
    for (Index i = 0; i < report.singular_values.size(); ++i)
        if (report.singular_values(i) > report.tolerance_used) ++report.rank;
    report.full_row_rank = report.rank == m.rows();
    report.full_col_rank = report.rank == m.cols();
    return report;
}

namespace detail {

// Flip sign so the largest-magnitude entry (first on ties) is positive.
inline void canonical_sign(Eigen::Ref<Vector> v) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > best + 1e-14 * std::max(1.0, best)) {
            best = std::abs(v(i));
            arg = i;
        }
    }
    if (v.size() && v(arg) < 0.0) v = -v;
}

}  // namespace detail

/// Orthonormal basis of the right kernel of m, one vector per column.
///
/// Columns are ordered from the most to the least annihilating right singular
/// vector, so column 0 is the singular vector of the smallest singular value.
/// Each column's sign is fixed so its largest entry is positive.
inline Matrix kernel_basis(const Matrix& m, double rtol = kDefaultRtol) {
    const RankReport report = rank_report(m, rtol);
    const Index dim = m.cols() - report.rank;
    if (dim == 0) return Matrix(m.cols(), 0);
    if (m.rows() == 0) return Matrix::Identity(m.cols(), m.cols());

    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const Matrix& v = svd.matrixV();
    Matrix basis(m.cols(), dim);
    for (Index j = 0; j < dim; ++j) {
        basis.col(j) = v.col(m.cols() - 1 - j);
        detail::canonical_sign(basis.col(j));
    }
    return basis;
}

namespace detail {

inline std::pair<Complex, Complex> horner(std::span<const double> c, Complex z) {
    Complex p = 0.0, dp = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) {
        dp = dp * z + p;
        p = p * z + c[i];
    }
    return {p, dp};
}

inline std::vector<Complex> cluster(std::vector<Complex> points, double radius) {
    std::vector<Complex> centers;
    std::vector<double> weights;
    for (const auto& p : points) {
        bool merged = false;
        for (std::size_t j = 0; j < centers.size(); ++j) {
            if (std::abs(centers[j] - p) <= radius) {
                centers[j] = (centers[j] * weights[j] + p) / (weights[j] + 1.0);
                weights[j] += 1.0;
                merged = true;
                break;
            }
        }
        if (!merged) {
            centers.push_back(p);
            weights.push_back(1.0);
        }
    }
    // Merged centers can drift into each other's radius.
    for (bool again = true; again;) {
        again = false;
        for (std::size_t i = 0; i < centers.size() && !again; ++i) {
            for (std::size_t j = i + 1; j < centers.size(); ++j) {
                if (std::abs(centers[i] - centers[j]) <= radius) {
                    centers[i] = (centers[i] * weights[i] + centers[j] * weights[j]) /
                                 (weights[i] + weights[j]);
                    weights[i] += weights[j];
                    centers.erase(centers.begin() + static_cast<std::ptrdiff_t>(j));
                    weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(j));
                    again = true;
                    break;
                }
            }
        }
    }
    return centers;
}

}  // namespace detail

/// Roots of c[0] + c[1] x + ... + c[d] x^d.
///
/// Trailing coefficients with |c_i| <= rtol * max|c| are trimmed first; the
/// remaining roots are eigenvalues of the monic companion matrix, refined by a
/// few guarded Newton steps on the original coefficients and then clustered.
inline RootSet polynomial_roots(std::span<const double> coeffs, double rtol = kDefaultRtol,
                                double cluster_radius = kDefaultClusterRadius) {
    detail::require(!coeffs.empty(), "polynomial needs at least one coefficient");
    detail::require(cluster_radius > 0.0, "cluster radius must be positive");
    double scale = 0.0;
    for (double c : coeffs) {
        detail::require(std::isfinite(c), "polynomial coefficient is not finite");
        scale = std::max(scale, std::abs(c));
    }
    if (scale == 0.0) throw Error(ErrorKind::invalid_input, "identically-zero polynomial");

    std::size_t degree = coeffs.size() - 1;
    while (degree > 0 && std::abs(coeffs[degree]) <= rtol * scale) --degree;

    RootSet out;
    out.cluster_radius = cluster_radius;
    if (degree == 0) return out;

    const auto d = static_cast<Index>(degree);
    Matrix companion = Matrix::Zero(d, d);
    companion.diagonal(-1).setOnes();
    for (Index i = 0; i < d; ++i) companion(i, d - 1) = -coeffs[static_cast<std::size_t>(i)] / coeffs[degree];

    Eigen::EigenSolver<Matrix> solver(companion, false);
    const auto trimmed = coeffs.first(degree + 1);
    std::vector<Complex> raw;
    raw.reserve(degree);
    for (Index i = 0; i < d; ++i) {
        Complex z = solver.eigenvalues()(i);
        for (int it = 0; it < 3; ++it) {
            auto [p, dp] = detail::horner(trimmed, z);
            if (std::abs(dp) == 0.0) break;
            const Complex next = z - p / dp;
            if (std::abs(detail::horner(trimmed, next).first) >= std::abs(p)) break;
            z = next;
        }
        if (std::abs(z.imag()) <= 1e-14 * std::max(1.0, std::abs(z))) z = {z.real(), 0.0};
        raw.push_back(z);
    }
    out.roots = detail::cluster(std::move(raw), cluster_radius);
    return out;
}

/// Common complex roots of the m coordinate polynomials sum_i lambda^i eta_i.
///
/// eta is m x N with column i holding eta_i. Coordinates that are numerically
/// zero (max |entry| <= rtol * max|eta|) impose no constraint.
inline RootSet lambda_set(const Matrix& eta, double rtol = kDefaultRtol,
                          double cluster_radius = kDefaultClusterRadius) {
    detail::require(eta.rows() >= 1 && eta.cols() >= 1, "eta must be a non-empty m x N array");
    require_finite(eta, "eta");
    const double scale = eta.cwiseAbs().maxCoeff();
    detail::require(scale > 0.0, "eta must be nonzero");

    std::vector<RootSet> sets;
    for (Index j = 0; j < eta.rows(); ++j) {
        const Vector row = eta.row(j).transpose();
        if (row.cwiseAbs().maxCoeff() <= rtol * scale) continue;
        sets.push_back(polynomial_roots(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                                        rtol, cluster_radius));
    }

    RootSet out;
    out.cluster_radius = cluster_radius;
    const auto base = std::min_element(sets.begin(), sets.end(), [](const RootSet& a, const RootSet& b) {
        return a.size() < b.size();
    });
    std::vector<Complex> common;
    for (const Complex& r : base->roots) {
        Complex sum = r;
        double count = 1.0;
        bool shared = true;
        for (auto it = sets.begin(); it != sets.end() && shared; ++it) {
            if (it == base) continue;
            double best = std::numeric_limits<double>::infinity();
            Complex nearest;
            for (const auto& q : it->roots) {
                if (std::abs(q - r) < best) {
                    best = std::abs(q - r);
                    nearest = q;
                }
            }
            shared = best <= cluster_radius;
            sum += nearest;
            count += 1.0;
        }
        if (shared) common.push_back(sum / count);
    }
    out.roots = detail::cluster(std::move(common), cluster_radius);
    return out;
}

/// Reshape a stacked (m*N)-vector [eta_0; ...; eta_{N-1}] into the m x N block
/// array used by lambda_set.
inline Matrix as_blocks(const Vector& stacked, Index m) {
    detail::require(m >= 1 && stacked.size() % m == 0, "stacked vector length must be a multiple of m");
    return Eigen::Map<const Matrix>(stacked.data(), m, stacked.size() / m);
}

inline Vector flatten_blocks(const Matrix& blocks) {
    return Eigen::Map<const Vector>(blocks.data(), blocks.size());
}

}  // namespace peu
