#pragma once

#include <optional>
#include <utility>

#include "peu/numkit.hpp"
#include "peu/random.hpp"
#include "peu/signals.hpp"

namespace peu {

/// x(t+1) = A x(t) + B u(t),  y(t) = C x(t) + D u(t).
class StateSpaceSystem {
   public:
    StateSpaceSystem(Matrix a, Matrix b, Matrix c, Matrix d)
        : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {
        detail::require(A.rows() >= 1 && A.rows() == A.cols(), "A must be square with n >= 1");
        detail::require(B.rows() == A.rows() && B.cols() >= 1, "B must be n x m with m >= 1");
        detail::require(C.cols() == A.rows() && C.rows() >= 1, "C must be p x n with p >= 1");
        detail::require(D.rows() == C.rows() && D.cols() == B.cols(), "D must be p x m");
        require_finite(A, "A");
        require_finite(B, "B");
        require_finite(C, "C");
        require_finite(D, "D");
    }

    /// Input-state system (C = I, D = 0).
    static StateSpaceSystem input_state(const Matrix& a, const Matrix& b) {
        return {a, b, Matrix::Identity(a.rows(), a.rows()), Matrix::Zero(a.rows(), b.cols())};
    }

    Index n() const { return A.rows(); }
    Index m() const { return B.cols(); }
    Index p() const { return C.rows(); }

    Matrix A, B, C, D;
};

struct Trajectory {
    Signal u;  // length T
    Signal x;  // length T + 1
    Signal y;  // length T
};

/// States x(0..steps) driven by the first `steps` input samples.
inline Matrix propagate_states(const Matrix& a, const Matrix& b, const Vector& x0, const Matrix& u, Index steps) {
    detail::require(x0.size() == a.rows(), "x0 has the wrong size");
    detail::require(u.rows() == b.cols(), "input dimension does not match B");
    detail::require(steps >= 0 && steps <= u.cols(), "not enough input samples");
    Matrix x(a.rows(), steps + 1);
    x.col(0) = x0;
    for (Index t = 0; t < steps; ++t) x.col(t + 1).noalias() = a * x.col(t) + b * u.col(t);
    return x;
}

inline Trajectory simulate(const StateSpaceSystem& sys, const Vector& x0, const Signal& u) {
    detail::require(u.dim() == sys.m(), "input dimension does not match the system");
    detail::require(x0.size() == sys.n(), "x0 has the wrong size");
    require_finite(x0, "x0");
    Matrix x = propagate_states(sys.A, sys.B, x0, u.samples(), u.length());
    Matrix y = sys.C * x.leftCols(u.length()) + sys.D * u.samples();
    return {u, Signal(std::move(x)), Signal(std::move(y))};
}

/// [B, AB, ..., A^{n-1} B].
inline Matrix controllability_matrix(const Matrix& a, const Matrix& b) {
    const Index n = a.rows(), m = b.cols();
    Matrix k(n, n * m);
    k.leftCols(m) = b;
    for (Index i = 1; i < n; ++i) k.middleCols(i * m, m).noalias() = a * k.middleCols((i - 1) * m, m);
    return k;
}

inline double spectral_radius(const Matrix& a) {
    Eigen::EigenSolver<Matrix> solver(a, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

struct ControllabilityCheck {
    bool controllable = false;
    RankReport report;
};

/// Kalman rank test. For n > 6 the powers are taken of A / rho(A); scaling
/// block columns does not change the span.
inline ControllabilityCheck is_controllable(const Matrix& a, const Matrix& b, double rtol = kDefaultRtol) {
    detail::require(a.rows() == a.cols() && b.rows() == a.rows(), "A must be n x n and B n x m");
    Matrix scaled = a;
    if (a.rows() > 6) {
        const double rho = spectral_radius(a);
        if (rho > 0.0) scaled /= rho;
    }
    RankReport report = rank_report(controllability_matrix(scaled, b), rtol);
    return {report.rank == a.rows(), std::move(report)};
}

struct CyclicityCheck {
    bool cyclic = false;
    std::optional<Vector> witness;
};

/// Searches for zeta with (A, zeta) controllable: the last standard basis
/// vector first, then 16 Gaussian draws. If all fail, the Krylov rank of one
/// more random vector (the degree of the minimal polynomial, generically) is
/// compared with n.
inline CyclicityCheck is_cyclic(const Matrix& a, double rtol = kDefaultRtol, std::uint64_t seed = 0) {
    detail::require(a.rows() >= 1 && a.rows() == a.cols(), "A must be square");
    const Index n = a.rows();
    Vector last = Vector::Unit(n, n - 1);
    if (is_controllable(a, last, rtol).controllable) return {true, last};

    Rng rng(seed);
    for (int attempt = 0; attempt < 16; ++attempt) {
        Vector zeta = gaussian_vector(rng, n);
        if (is_controllable(a, zeta, rtol).controllable) return {true, zeta};
    }
    Vector probe = gaussian_vector(rng, n);
    if (is_controllable(a, probe, rtol).controllable) return {true, probe};
    return {false, std::nullopt};
}

/// Upper-triangular Jordan block with `lambda` on the diagonal.
inline Matrix jordan_block(double lambda, Index n) {
    Matrix j = Matrix::Identity(n, n) * lambda;
    if (n > 1) j.diagonal(1).setOnes();
    return j;
}

/// [C; CA; ...; CA^{L-1}].
inline Matrix observability_matrix(const Matrix& a, const Matrix& c, Index depth) {
    const Index p = c.rows();
    Matrix o(depth * p, a.rows());
    if (depth == 0) return o;
    o.topRows(p) = c;
    for (Index i = 1; i < depth; ++i) o.middleRows(i * p, p).noalias() = o.middleRows((i - 1) * p, p) * a;
    return o;
}

/// Lower block-triangular Toeplitz matrix of the Markov parameters
/// D, CB, CAB, ..., CA^{L-2}B.
inline Matrix markov_toeplitz(const StateSpaceSystem& sys, Index depth) {
    const Index m = sys.m(), p = sys.p();
    Matrix markov(p, depth * m);  // [D, CB, CAB, ...]
    if (depth > 0) markov.leftCols(m) = sys.D;
    Matrix ab = sys.B;
    for (Index k = 1; k < depth; ++k) {
        markov.middleCols(k * m, m).noalias() = sys.C * ab;
        ab = sys.A * ab;
    }
    Matrix t = Matrix::Zero(depth * p, depth * m);
    for (Index i = 0; i < depth; ++i)
        for (Index j = 0; j <= i; ++j) t.block(i * p, j * m, p, m) = markov.middleCols((i - j) * m, m);
    return t;
}

struct BehaviorBasis {
    Index L = 0;
    Matrix basis;  // (Lm + Lp) x (Lm + n)
    Index dim = 0;
};

/// Column span equals the set of length-L input-output windows of sys:
/// [u; y] = [[I, 0], [T_L, O_L]] [u; x(0)].
inline BehaviorBasis behavior_basis(const StateSpaceSystem& sys, Index depth, double rtol = kDefaultRtol) {
    detail::require(depth >= 1, "behavior depth L must be at least 1");
    const Index m = sys.m(), p = sys.p(), n = sys.n();
    const Matrix obs = observability_matrix(sys.A, sys.C, depth);
    BehaviorBasis out;
    out.L = depth;
    out.basis = Matrix::Zero(depth * (m + p), depth * m + n);
    out.basis.topLeftCorner(depth * m, depth * m).setIdentity();
    out.basis.bottomLeftCorner(depth * p, depth * m) = markov_toeplitz(sys, depth);
    out.basis.bottomRightCorner(depth * p, n) = obs;
    out.dim = depth * m + rank_report(obs, rtol).rank;
    return out;
}

}  // namespace peu
