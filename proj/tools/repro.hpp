#pragma once

// Reproduction of the three worked examples against the fixtures in data/.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "peu/io.hpp"
#include "peu/peu.hpp"

namespace peu::repro {

struct Line {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct Report {
    std::string example;
    std::vector<Line> lines;

    bool all_pass() const {
        for (const auto& l : lines)
            if (!l.pass) return false;
        return true;
    }
};

inline std::string fmt(const char* format, double a, double b = 0.0) {
    char buf[128];
    std::snprintf(buf, sizeof buf, format, a, b);
    return buf;
}

inline io::Json load_json(const std::string& path) {
    std::ifstream in(path);
    detail::require(static_cast<bool>(in), "cannot open " + path);
    try {
        return io::Json::parse(in);
    } catch (const io::Json::exception& e) {
        throw Error(ErrorKind::invalid_input, path + ": " + e.what());
    }
}

inline Signal load_signal(const std::string& path) {
    std::ifstream in(path);
    detail::require(static_cast<bool>(in), "cannot open " + path);
    return io::read_signal_csv(in);
}

inline double max_gap(const Matrix& a, const Matrix& b) {
    detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "shape mismatch in comparison");
    return a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0;
}

inline Line within(const std::string& name, const Matrix& got, const Matrix& want, double tol) {
    const double gap = max_gap(got, want);
    return {name, gap <= tol, fmt("max |diff| = %.3g (tol %.0e)", gap, tol)};
}

/// Example 1: a double integrator whose data satisfy behavior equality for
/// every x(0), although u is not universal.
inline Report example1(const std::string& dir, const io::RunConfig& cfg) {
    Report r{"ex1", {}};
    const StateSpaceSystem sys = io::system_from_json(load_json(dir + "/system.json"));
    const Signal u = load_signal(dir + "/input.csv");

    const PEReport pe = pe_order(u, cfg.rtol);
    r.lines.push_back({"pe order of u is 1", pe.max_order == 1, "max_order = " + std::to_string(pe.max_order)});

    Rng rng(cfg.seed);
    int ok = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const Vector x0 = gaussian_vector(rng, sys.n());
        const Trajectory tr = simulate(sys, x0, u);
        Matrix data(2, u.length());
        data << hankel(u, 1), hankel(tr.y, 1);
        const LemmaCheck check = check_behavior_equality(sys, u, tr.y, 1, cfg.rtol);
        ok += (rank_report(data, cfg.rtol).rank == 2 && check.behavior_equal) ? 1 : 0;
    }
    r.lines.push_back({"rank 2 and behavior equality for 20 random x(0)", ok == 20,
                       std::to_string(ok) + "/20 trials"});

    std::ifstream data_in(dir + "/data.csv");
    const io::CsvTable table = io::read_csv(data_in);
    const Signal du(io::gather(table, io::prefixed_columns(table, "u")));
    const Signal dy(io::gather(table, io::prefixed_columns(table, "y")));
    const LemmaCheck stored = check_behavior_equality(sys, du, dy, 1, cfg.rtol);
    r.lines.push_back({"stored data set has behavior equality", stored.behavior_equal,
                       fmt("x0 = (%.6g, %.6g)", stored.x0(0), stored.x0(1))});

    VerdictOptions opt;
    opt.certificate.rtol = cfg.rtol;
    opt.certificate.tol_cert = cfg.tol_cert;
    opt.certificate.seed = cfg.seed;
    const UniversalityVerdict v = universality_verdict(u, sys.n(), 1, opt);
    const bool cert_ok = !v.universal && v.counterexample && v.counterexample->verified();
    r.lines.push_back({"u is not universal for n = 2, L = 1", cert_ok,
                       v.counterexample ? v.counterexample->diagnostics() : "no certificate"});
    return r;
}

/// Example with n = 3, m = 2, L = 1: the printed eta, A and zeta reproduce the
/// E recursion, x(0), xi and the state table.
inline Report example2(const std::string& dir, const io::RunConfig& cfg) {
    Report r{"ex2", {}};
    const Signal u = load_signal(dir + "/input.csv");
    const io::Json expected = load_json(dir + "/expected.json");

    r.lines.push_back({"u is not pe of order 4", !is_pe(u, 4, cfg.rtol).is_pe, ""});

    CertificateOptions opt;
    opt.rtol = cfg.rtol;
    opt.tol_cert = cfg.tol_cert;
    opt.seed = cfg.seed;
    opt.eta = io::matrix_from_json(load_json(dir + "/eta.json"));
    opt.A = io::matrix_from_json(load_json(dir + "/A.json"));
    opt.zeta = io::vector_from_json(load_json(dir + "/zeta.json"));
    const CounterexampleCertificate c = construct_certificate(u, 3, 1, opt);
    r.lines.push_back({"certificate verified", c.verified(), c.diagnostics()});

    const double tol = 5e-4;
    for (const char* i : {"2", "1", "0", "-1"})
        r.lines.push_back(within(std::string("E_") + i, c.E_at(std::stoi(i)),
                                 io::matrix_from_json(expected.at("E").at(i)), tol));
    r.lines.push_back(within("B = E_-1", c.B, io::matrix_from_json(expected.at("E").at("-1")), tol));
    r.lines.push_back(within("x(0)", c.x0, io::vector_from_json(expected.at("x0")), tol));
    r.lines.push_back(within("xi", c.xi, io::vector_from_json(expected.at("xi")), tol));

    std::ifstream states_in(dir + "/states.csv");
    const Signal table = io::read_signal_csv(states_in, "x");
    const Trajectory tr = simulate(StateSpaceSystem::input_state(c.A, c.B), c.x0, u);
    r.lines.push_back(within("state table", tr.x.samples().leftCols(u.length()), table.samples(), 1e-3));

    const Index rank = c.stacked_rank.rank;
    r.lines.push_back({"stacked rank 4 < 5", rank == expected.at("stacked_rank").get<Index>(),
                       "rank = " + std::to_string(rank)});
    return r;
}

/// Single-state example with n = 1, m = 2, L = 2: the printed red-dot system
/// and the sampled family.
inline Report example3(const std::string& dir, const io::RunConfig& cfg, Index samples = 10000) {
    Report r{"ex3", {}};
    const Signal u = load_signal(dir + "/input.csv");
    const StateSpaceSystem sys = io::system_from_json(load_json(dir + "/system.json"));
    const Vector x0 = io::vector_from_json(load_json(dir + "/x0.json"));
    const Index depth = 2;

    r.lines.push_back({"u is not pe of order 3", !is_pe(u, 3, cfg.rtol).is_pe, ""});

    const Trajectory tr = simulate(sys, x0, u);
    const RankReport printed = check_rank_condition(u, tr.x.head(u.length() - depth + 1), depth, 1, cfg.rtol);
    r.lines.push_back({"printed system gives stacked rank 4", printed.rank == 4,
                       "rank = " + std::to_string(printed.rank) + fmt(", sigma_min = %.3g, tol = %.3g",
                                                                      printed.sigma_min(), printed.tolerance_used)});

    CertificateOptions opt;
    opt.rtol = cfg.rtol;
    opt.tol_cert = cfg.tol_cert;
    opt.seed = cfg.seed;
    const FamilyFit fit = nearest_family_member(u, depth, sys.A(0, 0), sys.B.row(0).transpose(), opt);
    const Trajectory fitted = simulate(StateSpaceSystem::input_state(Matrix::Constant(1, 1, fit.point.a),
                                                                     fit.point.b.transpose()),
                                       Vector::Constant(1, fit.point.x0), u);
    const RankReport member =
        check_rank_condition(u, fitted.x.head(u.length() - depth + 1), depth, 1, cfg.rtol);
    r.lines.push_back({"nearest family member gives stacked rank 4", member.rank == 4 && fit.point.verified,
                       "rank = " + std::to_string(member.rank) +
                           fmt(", |db|/|b| = %.3g, |dx0| = %.3g", fit.fit_residual,
                               std::abs(fit.point.x0 - x0(0)))});

    CloudOptions cloud_opt;
    cloud_opt.samples = samples;
    cloud_opt.certificate = opt;
    const SystemCloud cloud = sample_system_cloud(u, depth, cloud_opt);
    r.lines.push_back({"every sampled system is rank deficient", cloud.verified_fraction() == 1.0,
                       std::to_string(cloud.points.size()) + " points, " + std::to_string(cloud.skipped) +
                           " skipped" + fmt(", verified fraction %.6g", cloud.verified_fraction())});
    return r;
}

inline void print(std::ostream& out, const Report& r) {
    for (const auto& l : r.lines)
        out << (l.pass ? "PASS " : "FAIL ") << r.example << ": " << l.name
            << (l.detail.empty() ? "" : " [" + l.detail + "]") << '\n';
    out << r.example << ": " << (r.all_pass() ? "all checks passed" : "some checks failed") << '\n';
}

}  // namespace peu::repro
