#pragma once

// Counterexample construction for inputs that are not persistently exciting.
//
// Given u whose depth-(n+L) Hankel matrix has a left annihilator eta, build a
// controllable pair (A, B), an initial state and vectors (v, w), w != 0, with
//
//   [v' w'] [H_L(u); H_1(x_[0,T-L])] = 0.
//
// The pair comes from E_{n+L-1} = 0, E_{i-1} = A E_i + zeta eta_i', B = E_{-1},
// x(0) = -sum_{i<n+L-1} E_i u(i), and w = xi with xi' A^i zeta = 0 for
// i < n - 1. Every certificate is checked numerically before it is returned.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "peu/flemma.hpp"
#include "peu/lti.hpp"
#include "peu/numkit.hpp"
#include "peu/random.hpp"
#include "peu/signals.hpp"

namespace peu {

inline constexpr double kDefaultTolCert = 1e-7;
/// Largest relative move accepted when projecting an eta override onto the
/// numerical kernel.
inline constexpr double kEtaSnapLimit = 1e-3;
/// Jordan eigenvalue candidates must stay this far from Lambda(eta).
inline constexpr double kEigenvalueExclusion = 0.1;
inline constexpr int kMaxEigenvalueCandidates = 32;
inline constexpr double kClosedFormRtol = 1e-8;
inline constexpr double kRecursionRtol = 1e-12;
inline constexpr double kNearSingularCondition = 1e10;

struct CertificateOptions {
    double rtol = kDefaultRtol;
    double tol_cert = kDefaultTolCert;
    double cluster_radius = kDefaultClusterRadius;
    std::uint64_t seed = 0;
    std::optional<Matrix> eta;   // m x (n+L), column i is eta_i
    std::optional<Matrix> A;     // requires zeta as well
    std::optional<Vector> zeta;
};

enum class ConstructionPath { jordan_scan, override, short_data, single_input_family, family_sample };

inline const char* to_string(ConstructionPath path) {
    switch (path) {
        case ConstructionPath::jordan_scan: return "jordan_scan";
        case ConstructionPath::override: return "override";
        case ConstructionPath::short_data: return "short_data";
        case ConstructionPath::single_input_family: return "single_input_family";
        case ConstructionPath::family_sample: return "family_sample";
    }
    return "unknown";
}

struct CertificateResiduals {
    double kernel = 0.0;            // |H_{n+L}(u)' eta| / (|eta| max(1, |H|))
    double eta_snap = 0.0;          // relative move applied to an eta override
    double recursion = 0.0;         // max_i |A E_i + zeta eta_i' - E_{i-1}| / (1 + |E_{i-1}|)
    double closed_form = 0.0;       // |x_sim - x_closed| / (1 + |x|), max norm
    double xi_orthogonality = 0.0;  // max_{i in [L, n+L-1]} |xi' E_i| / (|xi| (1 + max |E|))
    double spectral_distance = std::numeric_limits<double>::infinity();  // min over spec A of dist to Lambda
    double annihilation_tolerance = 0.0;
};

struct CounterexampleCertificate {
    Index n = 0, m = 0, L = 0, T = 0;
    Matrix eta;                  // m x (n+L); m x 0 in the short-data case
    RootSet lambda;
    Matrix A;
    Vector zeta;
    std::vector<Matrix> E;       // E_{-1}, E_0, ..., E_{n+L-1}
    Matrix B;
    Vector x0;
    Matrix states;               // x(0), ..., x(T-L)
    Vector xi, v, w;
    std::optional<double> lambda0;
    double residual_annihilation = 0.0;
    bool rank_deficit_confirmed = false;
    bool controllable = false;
    bool short_data_case = false;
    RankReport stacked_rank;
    CertificateResiduals residuals;
    ConstructionPath path = ConstructionPath::jordan_scan;
    std::uint64_t seed = 0;
    double rtol = kDefaultRtol;
    double tol_cert = kDefaultTolCert;
    double cluster_radius = kDefaultClusterRadius;

    /// E_i for i in [-1, n+L-1].
    const Matrix& E_at(Index i) const { return E.at(static_cast<std::size_t>(i + 1)); }

    bool requires_controllability() const {
        return path != ConstructionPath::single_input_family && path != ConstructionPath::family_sample;
    }

    bool verified() const {
        bool ok = w.size() == n && w.norm() > 0.0 && residual_annihilation <= residuals.annihilation_tolerance &&
                  rank_deficit_confirmed && (controllable || !requires_controllability());
        if (!short_data_case) {
            ok = ok && residuals.spectral_distance > cluster_radius && residuals.kernel <= tol_cert &&
                 residuals.recursion <= kRecursionRtol && residuals.closed_form <= kClosedFormRtol &&
                 residuals.xi_orthogonality <= kClosedFormRtol;
        }
        return ok;
    }

    std::string diagnostics() const {
        std::ostringstream s;
        s << "path=" << to_string(path) << " annihilation=" << residual_annihilation << " (tol "
          << residuals.annihilation_tolerance << ") rank=" << stacked_rank.rank << "/" << stacked_rank.rows
          << " controllable=" << controllable << " spectral_distance=" << residuals.spectral_distance
          << " kernel=" << residuals.kernel << " recursion=" << residuals.recursion
          << " closed_form=" << residuals.closed_form << " xi_orthogonality=" << residuals.xi_orthogonality;
        return s.str();
    }
};

namespace detail {

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// xi != 0 with xi' A^i zeta = 0 for i in [0, n-2]: solves K' xi = e_n for the
/// Krylov matrix K of (A, zeta) when K is invertible, otherwise takes a kernel
/// vector of the first n-1 Krylov columns. Short vectors are scaled to unit
/// length.
inline Vector annihilating_direction(const Matrix& a, const Vector& zeta, double rtol) {
    const Index n = a.rows();
    if (n == 1) return Vector::Ones(1);
    const Matrix krylov = controllability_matrix(a, zeta);
    Vector xi;
    if (rank_report(krylov, rtol).full_row_rank) {
        xi = krylov.transpose().colPivHouseholderQr().solve(Vector::Unit(n, n - 1));
    } else {
        xi = kernel_basis(krylov.leftCols(n - 1).transpose(), rtol).col(0);
    }
    if (xi.norm() < 1.0) xi.normalize();
    return xi;
}

inline Matrix stock_input_matrix(const Matrix& a, const Vector& zeta, Index m, std::uint64_t seed, double rtol) {
    Rng rng(seed);
    Matrix b(a.rows(), m);
    b.col(0) = zeta;
    for (int attempt = 0; attempt < 64; ++attempt) {
        if (m > 1) b.rightCols(m - 1) = gaussian_matrix(rng, a.rows(), m - 1);
        if (is_controllable(a, b, rtol).controllable) return b;
    }
    throw Error(ErrorKind::construction_failed, "could not draw a controllable stock input matrix");
}

struct EtaChoice {
    Matrix eta;  // m x N
    double kernel = 0.0;
    double snap = 0.0;
};

/// eta with eta' H_N(u) = 0: the override projected onto the numerical kernel,
/// or the kernel's most annihilating singular vector. When T = N - 1 the
/// Hankel matrix has no columns and any nonzero eta works; e_1 is used.
inline EtaChoice select_eta(const Signal& u, Index big_n, const CertificateOptions& opt) {
    const Index m = u.dim();
    EtaChoice out;
    if (opt.eta) {
        detail::require(opt.eta->rows() == m && opt.eta->cols() == big_n, "eta override must be m x (n+L)");
        require_finite(*opt.eta, "eta override");
        detail::require(opt.eta->norm() > 0.0, "eta override must be nonzero");
    }
    if (u.length() < big_n) {
        if (opt.eta) {
            out.eta = *opt.eta;
        } else {
            out.eta = Matrix::Zero(m, big_n);
            out.eta(0, 0) = 1.0;
        }
        return out;
    }

    const Matrix h = hankel(u, big_n);
    const Matrix kernel = kernel_basis(h.transpose(), opt.rtol);
    if (kernel.cols() == 0)
        throw Error(ErrorKind::persistently_exciting,
                    "H_" + std::to_string(big_n) + "(u) has full row rank; no annihilator exists");
    Vector eta;
    if (opt.eta) {
        const Vector raw = flatten_blocks(*opt.eta);
        eta = kernel * (kernel.transpose() * raw);
        out.snap = (eta - raw).norm() / raw.norm();
        if (out.snap > kEtaSnapLimit)
            throw Error(ErrorKind::invalid_input,
                        "eta override is not close to the kernel of H(u)' (relative distance " +
                            std::to_string(out.snap) + ")");
    } else {
        eta = kernel.col(0);
    }
    out.eta = as_blocks(eta, m);
    out.kernel = (h.transpose() * eta).norm() / (eta.norm() * std::max(1.0, h.norm()));
    return out;
}

inline double spectral_distance(const Matrix& a, const RootSet& lambda) {
    Eigen::EigenSolver<Matrix> solver(a, false);
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < a.rows(); ++i) best = std::min(best, lambda.distance_to(solver.eigenvalues()(i)));
    return best;
}

inline void finish(CounterexampleCertificate& c, const Signal& u) {
    const Matrix s = stacked_input_state(u.samples(), c.states, c.L);
    Vector annihilator(c.v.size() + c.w.size());
    annihilator << c.v, c.w;
    c.residual_annihilation = (annihilator.transpose() * s).norm();
    c.residuals.annihilation_tolerance =
        c.tol_cert * (1.0 + max_abs(c.states)) * static_cast<double>(c.states.cols());
    c.stacked_rank = rank_report(s, c.rtol);
    // The annihilator bounds sigma_min by the residual, so a smallest singular
    // value at the annihilation tolerance also counts as deficient. This
    // matters when the states vanish and only round-off remains.
    c.rank_deficit_confirmed =
        !c.stacked_rank.full_row_rank || c.stacked_rank.sigma_min() <= c.residuals.annihilation_tolerance;
    c.controllable = is_controllable(c.A, c.B, c.rtol).controllable;
}

}  // namespace detail

/// States from the closed-form expressions of the construction:
///
///   x(t)   = -sum_{i=0}^{N-2} E_i u(t+i),                      t in [0, s]
///   x(t+s) =  sum_{j<t} sum_{i=j}^{N-2} A^{t-j-1} zeta eta_{i-j}' u(i+s)
///            -sum_{i=t}^{N-2} E_{i-t} u(i+s),                  t in [1, n-1]
///
/// with N = n + L and s = T - L - n + 1. Independent of the simulated states.
inline Matrix closed_form_states(const CounterexampleCertificate& c, const Signal& u) {
    detail::require(!c.short_data_case, "closed form only applies when T >= n + L - 1");
    const Index big_n = c.n + c.L, s = c.T - c.L - c.n + 1;
    Matrix x(c.n, c.T - c.L + 1);
    for (Index t = 0; t <= s; ++t) {
        Vector acc = Vector::Zero(c.n);
        for (Index i = 0; i <= big_n - 2; ++i) acc -= c.E_at(i) * u.sample(t + i);
        x.col(t) = acc;
    }
    std::vector<Vector> powers{c.zeta};  // A^k zeta
    for (Index k = 1; k < c.n; ++k) powers.push_back(c.A * powers.back());
    for (Index t = 1; t <= c.n - 1; ++t) {
        Vector acc = Vector::Zero(c.n);
        for (Index j = 0; j <= t - 1; ++j)
            for (Index i = j; i <= big_n - 2; ++i)
                acc += powers[static_cast<std::size_t>(t - j - 1)] * c.eta.col(i - j).dot(u.sample(i + s));
        for (Index i = t; i <= big_n - 2; ++i) acc -= c.E_at(i - t) * u.sample(i + s);
        x.col(t + s) = acc;
    }
    return x;
}

namespace detail {

/// Builds and scores the certificate for a given (eta, A, zeta).
/// u holds u_[0,T-1]; the states cover [0, T-L].
inline CounterexampleCertificate assemble(const Signal& u, Index n, Index depth, const EtaChoice& choice,
                                          const RootSet& lambda, const Matrix& a, const Vector& zeta,
                                          ConstructionPath path, const CertificateOptions& opt) {
    const Index m = u.dim(), big_n = n + depth;
    CounterexampleCertificate c;
    c.n = n;
    c.m = m;
    c.L = depth;
    c.T = u.length();
    c.eta = choice.eta;
    c.lambda = lambda;
    c.A = a;
    c.zeta = zeta;
    c.path = path;
    c.seed = opt.seed;
    c.rtol = opt.rtol;
    c.tol_cert = opt.tol_cert;
    c.cluster_radius = opt.cluster_radius;
    c.residuals.kernel = choice.kernel;
    c.residuals.eta_snap = choice.snap;

    c.E.assign(static_cast<std::size_t>(big_n + 1), Matrix::Zero(n, m));
    for (Index i = big_n - 1; i >= 0; --i) {
        auto& lower = c.E[static_cast<std::size_t>(i)];  // E_{i-1}
        lower.noalias() = a * c.E[static_cast<std::size_t>(i + 1)];
        lower.noalias() += zeta * c.eta.col(i).transpose();
    }
    c.B = c.E_at(-1);

    c.x0 = Vector::Zero(n);
    for (Index i = 0; i <= big_n - 2; ++i) c.x0 -= c.E_at(i) * u.sample(i);
    c.states = propagate_states(a, c.B, c.x0, u.samples(), c.T - depth);

    c.xi = annihilating_direction(a, zeta, opt.rtol);
    c.w = c.xi;
    c.v.resize(depth * m);
    for (Index i = 0; i < depth; ++i) c.v.segment(i * m, m) = c.E_at(i).transpose() * c.xi;

    double e_scale = 0.0;
    for (Index i = big_n - 1; i >= 0; --i) {
        const Matrix again = a * c.E_at(i) + zeta * c.eta.col(i).transpose();
        c.residuals.recursion = std::max(c.residuals.recursion,
                                         max_abs(again - c.E_at(i - 1)) / (1.0 + max_abs(c.E_at(i - 1))));
        e_scale = std::max(e_scale, max_abs(c.E_at(i - 1)));
    }
    for (Index i = depth; i <= big_n - 1; ++i)
        c.residuals.xi_orthogonality = std::max(
            c.residuals.xi_orthogonality, max_abs(c.xi.transpose() * c.E_at(i)) / (c.xi.norm() * (1.0 + e_scale)));
    c.residuals.closed_form = max_abs(closed_form_states(c, u) - c.states) / (1.0 + max_abs(c.states));
    c.residuals.spectral_distance = spectral_distance(a, lambda);

    finish(c, u);
    return c;
}

/// Stock controllable pair for T < n + L - 1: fewer than n state samples are
/// produced, so H_1(x) cannot have full row rank.
inline CounterexampleCertificate short_data_certificate(const Signal& u, Index n, Index depth,
                                                        const CertificateOptions& opt) {
    CounterexampleCertificate c;
    c.n = n;
    c.m = u.dim();
    c.L = depth;
    c.T = u.length();
    c.short_data_case = true;
    c.path = ConstructionPath::short_data;
    c.seed = opt.seed;
    c.rtol = opt.rtol;
    c.tol_cert = opt.tol_cert;
    c.cluster_radius = opt.cluster_radius;
    c.eta = Matrix(c.m, 0);
    c.lambda.cluster_radius = opt.cluster_radius;
    c.A = jordan_block(0.0, n);
    c.zeta = Vector::Unit(n, n - 1);
    c.B = stock_input_matrix(c.A, c.zeta, c.m, opt.seed, opt.rtol);
    c.x0 = Vector::Zero(n);
    c.states = propagate_states(c.A, c.B, c.x0, u.samples(), c.T - depth);
    c.w = kernel_basis(c.states.transpose(), opt.rtol).col(0);
    c.xi = c.w;
    c.v = Vector::Zero(depth * c.m);
    finish(c, u);
    return c;
}

inline CounterexampleCertificate construct(const Signal& u, Index n, Index depth, const CertificateOptions& opt) {
    detail::require(n >= 1, "state dimension n must be at least 1");
    detail::require(opt.tol_cert > 0.0 && opt.cluster_radius > 0.0, "tolerances must be positive");
    const Index big_n = n + depth, length = u.length();
    if (big_n <= length && is_pe(u, big_n, opt.rtol).is_pe)
        throw Error(ErrorKind::persistently_exciting,
                    "u is persistently exciting of order " + std::to_string(big_n));

    if (length < big_n - 1) {
        CounterexampleCertificate c = short_data_certificate(u, n, depth, opt);
        if (!c.verified()) throw Error(ErrorKind::construction_failed, c.diagnostics());
        return c;
    }

    const EtaChoice choice = select_eta(u, big_n, opt);
    const RootSet lambda = lambda_set(choice.eta, opt.rtol, opt.cluster_radius);

    if (opt.A || opt.zeta) {
        detail::require(opt.A && opt.zeta, "A and zeta overrides must be given together");
        detail::require(opt.A->rows() == n && opt.A->cols() == n, "A override must be n x n");
        detail::require(opt.zeta->size() == n, "zeta override must have n entries");
        require_finite(*opt.A, "A override");
        require_finite(*opt.zeta, "zeta override");
        if (spectral_distance(*opt.A, lambda) <= opt.cluster_radius)
            throw Error(ErrorKind::eigenvalue_conflict, "spec(A) meets Lambda(eta)");
        detail::require(is_controllable(*opt.A, *opt.zeta, opt.rtol).controllable,
                        "(A, zeta) override is not controllable");
        CounterexampleCertificate c =
            assemble(u, n, depth, choice, lambda, *opt.A, *opt.zeta, ConstructionPath::override, opt);
        if (!c.verified()) throw Error(ErrorKind::construction_failed, c.diagnostics());
        return c;
    }

    const double exclusion = std::max(kEigenvalueExclusion, 2.0 * opt.cluster_radius);
    std::string last;
    int tried = 0;
    for (int k = 0; tried < kMaxEigenvalueCandidates && k < 4 * kMaxEigenvalueCandidates + 8; ++k) {
        // 0, 1, -1, 2, -2, ...
        const double lambda0 = (k % 2 == 1) ? (k + 1) / 2 : -(k / 2);
        if (lambda.distance_to(lambda0) <= exclusion) continue;
        ++tried;
        CounterexampleCertificate c = assemble(u, n, depth, choice, lambda, jordan_block(lambda0, n),
                                               Vector::Unit(n, n - 1), ConstructionPath::jordan_scan, opt);
        c.lambda0 = lambda0;
        if (c.verified()) return c;
        last = c.diagnostics();
    }
    throw Error(ErrorKind::construction_failed, "no eigenvalue candidate produced a valid certificate; last: " + last);
}

}  // namespace detail

/// Controllable pair, initial state and annihilator (v, w) for an input that
/// is not persistently exciting of order n + L.
inline CounterexampleCertificate construct_certificate(const Signal& u, Index n, Index depth,
                                                       const CertificateOptions& opt = {}) {
    detail::require(depth >= 1 && depth <= u.length(), "L must lie in [1, T]");
    return detail::construct(u, n, depth, opt);
}

/// L = 0 variant: u holds u_[0,T]; eta annihilates H_n(u_[0,T-1]) and the
/// certificate's w satisfies w' H_1(x_[0,T]) = 0.
inline CounterexampleCertificate construct_certificate_L0(const Signal& u, Index n,
                                                          const CertificateOptions& opt = {}) {
    detail::require(u.length() >= 2, "u_[0,T] needs T >= 1");
    return detail::construct(u.head(u.length() - 1), n, 0, opt);
}

struct OutputCounterexample {
    StateSpaceSystem sys;        // (A, B, C, 0) with first row of C equal to w'
    Signal y;
    Vector annihilator;          // [v; e_1; 0] of length L(m + p)
    Signal witness_u;            // zero input of length L
    Vector witness_x0;           // w / |w|^2
    Signal witness_y;
    double separation_value = 0.0;
    double annihilation_residual = 0.0;
    double annihilation_tolerance = 0.0;
    LemmaCheck behavior_check;
};

/// Output-level counterexample: with C' s first row w' and D = 0 the data span
/// misses the zero-input window started from w / |w|^2.
inline OutputCounterexample extend_to_output(const CounterexampleCertificate& c, const Signal& u, Index p = 1,
                                             double rtol = kDefaultRtol) {
    if (c.L < 1) throw Error(ErrorKind::unsupported, "output counterexamples need L >= 1");
    detail::require(p >= 1, "p must be at least 1");
    detail::require(u.dim() == c.m && u.length() == c.T, "u does not match the certificate");

    Matrix out_map = Matrix::Zero(p, c.n);
    out_map.row(0) = c.w.transpose();
    StateSpaceSystem sys(c.A, c.B, out_map, Matrix::Zero(p, c.m));
    const Trajectory traj = simulate(sys, c.x0, u);

    const Index depth = c.L;
    Vector annihilator = Vector::Zero(depth * (c.m + p));
    annihilator.head(depth * c.m) = c.v;
    annihilator(depth * c.m) = 1.0;

    Matrix data(depth * (c.m + p), c.T - depth + 1);
    data << hankel(u, depth), hankel(traj.y, depth);
    const double residual = (annihilator.transpose() * data).norm();
    const double tolerance =
        c.tol_cert * (1.0 + detail::max_abs(traj.x.samples())) * static_cast<double>(data.cols());

    Signal witness_u = Signal::zeros(c.m, depth);
    Vector witness_x0 = c.w / c.w.squaredNorm();
    Signal witness_y = simulate(sys, witness_x0, witness_u).y;
    Vector window(depth * (c.m + p));
    window << stack(witness_u), stack(witness_y);
    const double separation = annihilator.dot(window);

    LemmaCheck check = check_behavior_equality(sys, u, traj.y, depth, rtol);
    return {std::move(sys),      traj.y,    std::move(annihilator), std::move(witness_u), std::move(witness_x0),
            std::move(witness_y), separation, residual,               tolerance,            std::move(check)};
}

/// Single-input family: for any (A, B) with spec A disjoint from Lambda(eta),
/// zeta = (sum_i A^i eta_i)^{-1} B reproduces B = E_{-1}, so (A, B) itself
/// generates rank-deficient data from a suitable x(0).
inline CounterexampleCertificate single_input_family(const Signal& u, Index n, Index depth, const Matrix& a,
                                                     const Vector& b, const CertificateOptions& opt = {}) {
    detail::require(u.dim() == 1, "single_input_family needs m = 1");
    detail::require(n >= 1 && depth >= 1 && depth <= u.length(), "need n >= 1 and L in [1, T]");
    detail::require(a.rows() == n && a.cols() == n && b.size() == n, "A must be n x n and B n x 1");
    require_finite(a, "A");
    require_finite(b, "B");
    detail::require(b.norm() > 0.0, "B must be nonzero");
    const Index big_n = n + depth;
    detail::require(u.length() >= big_n - 1, "single_input_family needs T >= n + L - 1");
    if (big_n <= u.length() && is_pe(u, big_n, opt.rtol).is_pe)
        throw Error(ErrorKind::persistently_exciting,
                    "u is persistently exciting of order " + std::to_string(big_n));

    const detail::EtaChoice choice = detail::select_eta(u, big_n, opt);
    const RootSet lambda = lambda_set(choice.eta, opt.rtol, opt.cluster_radius);
    if (detail::spectral_distance(a, lambda) <= opt.cluster_radius)
        throw Error(ErrorKind::eigenvalue_conflict, "spec(A) meets Lambda(eta)");

    Matrix poly = Matrix::Zero(n, n);
    Matrix power = Matrix::Identity(n, n);
    for (Index i = 0; i < big_n; ++i) {
        poly += choice.eta(0, i) * power;
        power = power * a;
    }
    Eigen::JacobiSVD<Matrix> svd(poly);
    const double cond = svd.singularValues()(0) / svd.singularValues()(n - 1);
    if (!(cond <= kNearSingularCondition))
        throw Error(ErrorKind::near_singular,
                    "sum_i A^i eta_i has condition number " + std::to_string(cond));
    const Vector zeta = poly.colPivHouseholderQr().solve(b);

    CounterexampleCertificate c =
        detail::assemble(u, n, depth, choice, lambda, a, zeta, ConstructionPath::single_input_family, opt);
    if (!c.verified()) throw Error(ErrorKind::construction_failed, c.diagnostics());
    return c;
}

struct CloudPoint {
    double a = 0.0;
    Vector b;        // m entries
    double x0 = 0.0;
    double zeta = 0.0;
    bool verified = false;
};

struct CloudOptions {
    Index samples = 10000;
    double a_min = -1.0, a_max = 1.0;
    double zeta_min = -1.0, zeta_max = 1.0;
    CertificateOptions certificate;
};

struct SystemCloud {
    Matrix eta;
    RootSet lambda;
    std::vector<CloudPoint> points;
    Index skipped = 0;

    double verified_fraction() const {
        if (points.empty()) return 1.0;
        Index ok = 0;
        for (const auto& p : points) ok += p.verified ? 1 : 0;
        return static_cast<double>(ok) / static_cast<double>(points.size());
    }
};

namespace detail {

inline CloudPoint family_point(const Signal& u, Index depth, const EtaChoice& choice, const RootSet& lambda,
                               double a, double zeta, const CertificateOptions& opt) {
    const CounterexampleCertificate c = assemble(u, 1, depth, choice, lambda, Matrix::Constant(1, 1, a),
                                                 Vector::Constant(1, zeta), ConstructionPath::family_sample, opt);
    const RankReport check = check_rank_condition(u, Signal(c.states), depth, 1, opt.rtol);
    CloudPoint p;
    p.a = a;
    p.b = c.B.row(0).transpose();
    p.x0 = c.x0(0);
    p.zeta = zeta;
    p.verified = !check.full_row_rank && c.residual_annihilation <= c.residuals.annihilation_tolerance;
    return p;
}

inline std::pair<EtaChoice, RootSet> family_eta(const Signal& u, Index depth, const CertificateOptions& opt) {
    detail::require(depth >= 1 && depth <= u.length(), "L must lie in [1, T]");
    const Index big_n = 1 + depth;
    detail::require(u.length() >= big_n - 1, "the scalar family needs T >= L");
    if (big_n <= u.length() && is_pe(u, big_n, opt.rtol).is_pe)
        throw Error(ErrorKind::persistently_exciting,
                    "u is persistently exciting of order " + std::to_string(big_n));
    EtaChoice choice = select_eta(u, big_n, opt);
    RootSet lambda = lambda_set(choice.eta, opt.rtol, opt.cluster_radius);
    return {std::move(choice), std::move(lambda)};
}

}  // namespace detail

/// Scalar-state systems x(t+1) = a x(t) + b u(t) that generate rank-deficient
/// data from u: for a outside Lambda(eta) and zeta != 0,
/// b = zeta sum_i a^i eta_i' and x(0) follows the construction. Each sample
/// draws (a, zeta) uniformly from its own derived seed.
inline SystemCloud sample_system_cloud(const Signal& u, Index depth, const CloudOptions& opt = {}) {
    detail::require(opt.samples >= 0, "sample count must be non-negative");
    detail::require(opt.a_min <= opt.a_max && opt.zeta_min <= opt.zeta_max, "empty sampling range");
    auto [choice, lambda] = detail::family_eta(u, depth, opt.certificate);

    SystemCloud out;
    out.eta = choice.eta;
    out.lambda = lambda;
    out.points.reserve(static_cast<std::size_t>(opt.samples));
    for (Index i = 0; i < opt.samples; ++i) {
        Rng rng(derive_seed(opt.certificate.seed, static_cast<std::uint64_t>(i)));
        const double a = uniform(rng, opt.a_min, opt.a_max);
        double zeta = 0.0;
        for (int attempt = 0; attempt < 64 && zeta == 0.0; ++attempt)
            zeta = uniform(rng, opt.zeta_min, opt.zeta_max);
        if (zeta == 0.0 || lambda.distance_to(a) <= opt.certificate.cluster_radius) {
            ++out.skipped;
            continue;
        }
        out.points.push_back(detail::family_point(u, depth, choice, lambda, a, zeta, opt.certificate));
    }
    return out;
}

struct FamilyFit {
    CloudPoint point;
    double fit_residual = 0.0;  // |b_fitted - b_target| / |b_target|
};

/// Family member closest to a given (a, b): zeta is fitted by least squares on
/// b = zeta sum_i a^i eta_i'.
inline FamilyFit nearest_family_member(const Signal& u, Index depth, double a, const Vector& b,
                                       const CertificateOptions& opt = {}) {
    detail::require(b.size() == u.dim(), "b must have m entries");
    auto [choice, lambda] = detail::family_eta(u, depth, opt);
    if (lambda.distance_to(a) <= opt.cluster_radius)
        throw Error(ErrorKind::eigenvalue_conflict, "a lies in Lambda(eta)");
    Vector direction = Vector::Zero(u.dim());
    double power = 1.0;
    for (Index i = 0; i < choice.eta.cols(); ++i) {
        direction += power * choice.eta.col(i);
        power *= a;
    }
    const double zeta = direction.dot(b) / direction.squaredNorm();
    FamilyFit fit;
    fit.point = detail::family_point(u, depth, choice, lambda, a, zeta, opt);
    fit.fit_residual = (fit.point.b - b).norm() / b.norm();
    return fit;
}

}  // namespace peu
