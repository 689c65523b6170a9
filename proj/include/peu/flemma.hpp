#pragma once

// Numerical checks of the fundamental lemma: the input-state rank condition and
// equality between the data span and the restricted behavior.

#include <algorithm>

#include "peu/lti.hpp"
#include "peu/numkit.hpp"
#include "peu/signals.hpp"

namespace peu {

/// Relative residual accepted when checking that (u, y) is a trajectory.
inline constexpr double kTrajectoryRtol = 1e-8;

/// [H_L(u_[0,T-1]); H_1(x_[0,T-L])]; for L = 0 only the state row block.
inline Matrix stacked_input_state(const Matrix& u, const Matrix& x, Index depth) {
    if (depth == 0) return x;
    detail::require(x.cols() == u.cols() - depth + 1, "state length must equal T - L + 1");
    Matrix s(depth * u.rows() + x.rows(), x.cols());
    s.topRows(depth * u.rows()) = hankel(u, depth);
    s.bottomRows(x.rows()) = x;
    return s;
}

/// Rank of [H_L(u); H_1(x_[0,T-L])]; full row rank means rank = n + Lm.
inline RankReport check_rank_condition(const Signal& u, const Signal& x, Index depth, Index n,
                                       double rtol = kDefaultRtol) {
    detail::require(depth >= 1 && depth <= u.length(), "L must lie in [1, T]");
    detail::require(x.dim() == n, "state dimension does not match n");
    detail::require(x.length() == u.length() - depth + 1, "state length must equal T - L + 1");
    return rank_report(stacked_input_state(u.samples(), x.samples(), depth), rtol);
}

/// Rank of H_1(x_[0,T]); x may also stop at T - 1.
inline RankReport check_state_rank(const Signal& u, const Signal& x, Index n, double rtol = kDefaultRtol) {
    detail::require(x.dim() == n, "state dimension does not match n");
    detail::require(x.length() == u.length() || x.length() == u.length() + 1,
                    "state length must be T or T + 1");
    return rank_report(x.samples(), rtol);
}

/// Orthonormal basis of the column span, keeping `rank` leading left singular
/// vectors.
inline Matrix range_basis(const Matrix& m, Index rank) {
    if (rank == 0 || m.size() == 0) return Matrix(m.rows(), 0);
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
    return svd.matrixU().leftCols(rank);
}

struct SpanComparison {
    Index rank_first = 0;
    Index rank_second = 0;
    Index rank_joint = 0;

    bool first_within_second() const { return rank_joint == rank_second; }
    bool equal() const { return rank_first == rank_second && rank_joint == rank_second; }
};

/// Three-rank comparison of column spans. The joint rank is taken on the
/// concatenation of orthonormal range bases so the two operands' scales do not
/// interact.
inline SpanComparison compare_spans(const Matrix& first, Index rank_first, const Matrix& second,
                                    Index rank_second, double rtol = kDefaultRtol) {
    detail::require(first.rows() == second.rows(), "span operands must have equal row counts");
    Matrix joint(first.rows(), rank_first + rank_second);
    joint << range_basis(first, rank_first), range_basis(second, rank_second);
    SpanComparison out{rank_first, rank_second, 0};
    out.rank_joint = joint.cols() ? rank_report(joint, rtol).rank : 0;
    return out;
}

struct LemmaCheck {
    Index L = 0;
    RankReport rank_condition;  // on [H_L(u); H_1(x_[0,T-L])]
    bool behavior_equal = false;
    bool inclusion_holds = false;
    Index data_span_dim = 0;
    Index behavior_dim = 0;
    Vector x0;                   // reconstructed initial state
    double trajectory_residual = 0.0;
};

/// Least-squares initial state for (u, y); throws not_a_trajectory when the
/// best fit leaves a relative residual above kTrajectoryRtol.
inline std::pair<Vector, double> reconstruct_initial_state(const StateSpaceSystem& sys, const Signal& u,
                                                           const Signal& y) {
    detail::require(u.dim() == sys.m(), "input dimension does not match the system");
    detail::require(y.dim() == sys.p(), "output dimension does not match the system");
    detail::require(u.length() == y.length(), "input and output lengths differ");
    const Index length = u.length();

    const Matrix free_response = simulate(sys, Vector::Zero(sys.n()), u).y.samples();
    const Matrix target = y.samples() - free_response;
    const Matrix obs = observability_matrix(sys.A, sys.C, length);
    const Vector x0 = obs.completeOrthogonalDecomposition().solve(flatten_blocks(target));

    const Matrix fitted = simulate(sys, x0, u).y.samples();
    const double scale = 1.0 + std::max(y.samples().cwiseAbs().maxCoeff(), fitted.cwiseAbs().maxCoeff());
    const double residual = (fitted - y.samples()).cwiseAbs().maxCoeff() / scale;
    if (residual > kTrajectoryRtol)
        throw Error(ErrorKind::not_a_trajectory,
                    "best-fit initial state leaves relative output residual " + std::to_string(residual));
    return {x0, residual};
}

/// Decides im [H_L(u); H_L(y)] == B_L(sys). The data must be a trajectory of
/// sys; inclusion in the behavior is re-checked every time.
inline LemmaCheck check_behavior_equality(const StateSpaceSystem& sys, const Signal& u, const Signal& y,
                                          Index depth, double rtol = kDefaultRtol) {
    detail::require(depth >= 1 && depth <= u.length(), "L must lie in [1, T]");
    auto [x0, residual] = reconstruct_initial_state(sys, u, y);

    LemmaCheck out;
    out.L = depth;
    out.x0 = x0;
    out.trajectory_residual = residual;
    const Matrix states = propagate_states(sys.A, sys.B, x0, u.samples(), u.length() - depth);
    out.rank_condition = rank_report(stacked_input_state(u.samples(), states, depth), rtol);

    Matrix data(depth * (sys.m() + sys.p()), u.length() - depth + 1);
    data << hankel(u, depth), hankel(y, depth);
    const BehaviorBasis basis = behavior_basis(sys, depth, rtol);
    out.data_span_dim = rank_report(data, rtol).rank;
    out.behavior_dim = basis.dim;

    const SpanComparison spans = compare_spans(data, out.data_span_dim, basis.basis, basis.dim, rtol);
    out.inclusion_holds = spans.first_within_second();
    out.behavior_equal = spans.equal();
    return out;
}

}  // namespace peu
