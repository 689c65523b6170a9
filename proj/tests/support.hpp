#pragma once

// Random instances shared by the unit and acceptance tests.

#include <cmath>
#include <fstream>
#include <string>

#include "peu/io.hpp"
#include "peu/peu.hpp"

namespace peu::fixtures {

inline std::string data_path(const std::string& rel) { return std::string(PEU_DATA_DIR) + "/" + rel; }

inline Signal load_signal(const std::string& rel) {
    std::ifstream in(data_path(rel));
    return io::read_signal_csv(in);
}

inline io::Json load_json(const std::string& rel) {
    std::ifstream in(data_path(rel));
    return io::Json::parse(in);
}

inline Signal gaussian_signal(Rng& rng, Index dim, Index length) {
    return Signal(gaussian_matrix(rng, dim, length));
}

/// Gaussian (A, B, C, D) with A scaled to spectral radius 0.9, redrawn until
/// the controllability matrix has condition number at most `max_condition`.
inline StateSpaceSystem random_controllable_system(Rng& rng, Index n, Index m, Index p,
                                                   double max_condition = 1e8) {
    for (;;) {
        Matrix a = gaussian_matrix(rng, n, n);
        const double rho = spectral_radius(a);
        if (rho > 1e-6) a *= 0.9 / rho;
        Matrix b = gaussian_matrix(rng, n, m);
        const RankReport k = rank_report(controllability_matrix(a, b));
        if (k.rank == n && k.sigma_max() / k.sigma_min() <= max_condition)
            return {a, b, gaussian_matrix(rng, p, n), gaussian_matrix(rng, p, m)};
    }
}

/// Input of length T satisfying sum_i eta_i' u(t + i) = 0 for every window,
/// hence not persistently exciting of order N = eta.cols(). The recursion is
/// kept bounded: for m = 1 eta is the monic polynomial of real roots with
/// 0.8 <= |z| <= 1; otherwise eta_{N-1} is a unit vector and the other blocks are
/// small, and each new sample is a Gaussian draw projected onto the
/// constraint.
struct NonPeInput {
    Signal u;
    Matrix eta;  // m x N
};

inline NonPeInput recursion_input(Rng& rng, Index m, Index big_n, Index length) {
    Matrix eta(m, big_n);
    if (m == 1) {
        std::vector<double> poly{1.0};  // ascending coefficients
        for (Index k = 0; k + 1 < big_n; ++k) {
            const double root = (uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0) * uniform(rng, 0.8, 1.0);
            std::vector<double> next(poly.size() + 1, 0.0);
            for (std::size_t i = 0; i < poly.size(); ++i) {
                next[i + 1] += poly[i];
                next[i] -= root * poly[i];
            }
            poly = std::move(next);
        }
        for (Index i = 0; i < big_n; ++i) eta(0, i) = poly[static_cast<std::size_t>(i)];
    } else {
        eta = 0.3 * gaussian_matrix(rng, m, big_n) / std::sqrt(static_cast<double>(m * big_n));
        Vector last = gaussian_vector(rng, m);
        eta.col(big_n - 1) = last / last.norm();
    }
    Matrix u = gaussian_matrix(rng, m, length);
    const double lead = eta.col(big_n - 1).squaredNorm();
    for (Index t = big_n - 1; t < length; ++t) {
        double s = 0.0;
        for (Index i = 0; i + 1 < big_n; ++i) s += eta.col(i).dot(u.col(t - big_n + 1 + i));
        const double excess = eta.col(big_n - 1).dot(u.col(t)) + s;
        u.col(t) -= eta.col(big_n - 1) * (excess / lead);
    }
    return {Signal(std::move(u)), std::move(eta)};
}

}  // namespace peu::fixtures
