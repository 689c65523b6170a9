// peu: persistency of excitation and universality from the command line.
//
// Exit codes: 0 success or check true, 2 input error, 3 check false,
// 4 numerical construction failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "peu/io.hpp"
#include "peu/peu.hpp"
#include "repro.hpp"

#ifndef PEU_DATA_DIR
#define PEU_DATA_DIR "data"
#endif

namespace {

using namespace peu;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitFalse = 3;
constexpr int kExitConstruction = 4;

struct Globals {
    double rtol = kDefaultRtol;
    double tol_cert = kDefaultTolCert;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format;

    io::RunConfig config() const {
        io::RunConfig c{rtol, tol_cert, 0};
        if (seed) {
            c.seed = *seed;
        } else if (const char* env = std::getenv("PEU_SEED")) {
            try {
                c.seed = std::stoull(env);
            } catch (const std::exception&) {
                throw Error(ErrorKind::invalid_input, "PEU_SEED must be an unsigned integer");
            }
        }
        detail::require(c.rtol > 0.0 && c.tol_cert > 0.0, "tolerances must be positive");
        return c;
    }

    std::string format_or(const std::string& fallback) const {
        const std::string f = format.empty() ? fallback : format;
        detail::require(f == "json" || f == "csv", "--format must be json or csv");
        return f;
    }
};

std::string config_comment(const io::RunConfig& c) {
    return "rtol=" + io::format_real(c.rtol) + " tol_cert=" + io::format_real(c.tol_cert) +
           " seed=" + std::to_string(c.seed);
}

/// Writes to --out when given, stdout otherwise.
void emit(const Globals& g, const std::string& text) {
    if (g.out.empty()) {
        std::cout << text << std::flush;
        return;
    }
    std::ofstream file(g.out, std::ios::binary);
    detail::require(static_cast<bool>(file), "cannot write " + g.out);
    file << text;
}

std::string dump(const io::Json& j) { return j.dump(2) + "\n"; }

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream file(path, std::ios::binary);
    detail::require(static_cast<bool>(file), "cannot write " + path.string());
    file << text;
}

Signal read_signal(const std::string& path) {
    std::ifstream in(path);
    detail::require(static_cast<bool>(in), "cannot open " + path);
    return io::read_signal_csv(in);
}

io::Json read_json(const std::string& path) { return repro::load_json(path); }

io::Json with_config(io::Json body, const io::RunConfig& c) {
    io::Json out = {{"config", io::to_json(c)}};
    for (auto& [key, value] : body.items()) out[key] = value;
    return out;
}

CertificateOptions certificate_options(const io::RunConfig& c) {
    CertificateOptions opt;
    opt.rtol = c.rtol;
    opt.tol_cert = c.tol_cert;
    opt.seed = c.seed;
    return opt;
}

int cmd_pe(const Globals& g, const std::string& input, std::optional<Index> order) {
    const io::RunConfig cfg = g.config();
    const Signal u = read_signal(input);
    const std::string format = g.format_or("json");
    if (order) {
        detail::require(*order >= 1 && *order <= u.length(), "--order must lie in [1, T]");
        const PECheck check = is_pe(u, *order, cfg.rtol);
        if (format == "json") {
            emit(g, dump(with_config({{"order", *order}, {"is_pe", check.is_pe}, {"report", io::to_json(check.report)}},
                                     cfg)));
        } else {
            std::ostringstream s;
            s << "# " << config_comment(cfg) << "\norder,is_pe,rank,rows,cols\n"
              << *order << ',' << (check.is_pe ? 1 : 0) << ',' << check.report.rank << ',' << check.report.rows
              << ',' << check.report.cols << '\n';
            emit(g, s.str());
        }
        return check.is_pe ? kExitOk : kExitFalse;
    }
    const PEReport report = pe_order(u, cfg.rtol);
    if (format == "json") {
        emit(g, dump(with_config(io::to_json(report), cfg)));
    } else {
        io::CsvTable table;
        table.header = {"k", "rank", "rows", "cols", "sigma_min", "tolerance_used", "full_row_rank"};
        for (const auto& [k, r] : report.per_order)
            table.rows.push_back({static_cast<double>(k), static_cast<double>(r.rank), static_cast<double>(r.rows),
                                  static_cast<double>(r.cols), r.sigma_min(), r.tolerance_used,
                                  r.full_row_rank ? 1.0 : 0.0});
        std::ostringstream s;
        io::write_csv(s, table, config_comment(cfg) + " max_order=" + std::to_string(report.max_order));
        emit(g, s.str());
    }
    return kExitOk;
}

int cmd_simulate(const Globals& g, const std::string& system_path, const std::string& input,
                 const std::vector<double>& x0_values) {
    const io::RunConfig cfg = g.config();
    const StateSpaceSystem sys = io::system_from_json(read_json(system_path));
    const Signal u = read_signal(input);
    Vector x0 = Vector::Zero(sys.n());
    if (!x0_values.empty()) {
        detail::require(static_cast<Index>(x0_values.size()) == sys.n(), "--x0 needs n entries");
        for (Index i = 0; i < sys.n(); ++i) x0(i) = x0_values[static_cast<std::size_t>(i)];
    }
    std::ostringstream s;
    io::write_trajectory_csv(s, simulate(sys, x0, u), config_comment(cfg));
    emit(g, s.str());
    return kExitOk;
}

int cmd_check(const Globals& g, const std::string& system_path, const std::string& data_path, Index depth) {
    const io::RunConfig cfg = g.config();
    const StateSpaceSystem sys = io::system_from_json(read_json(system_path));
    std::ifstream in(data_path);
    detail::require(static_cast<bool>(in), "cannot open " + data_path);
    const io::CsvTable table = io::read_csv(in);
    const Signal u(io::gather(table, io::prefixed_columns(table, "u")));
    const Signal y(io::gather(table, io::prefixed_columns(table, "y")));
    const LemmaCheck check = check_behavior_equality(sys, u, y, depth, cfg.rtol);
    emit(g, dump(with_config(io::to_json(check), cfg)));
    return check.behavior_equal ? kExitOk : kExitFalse;
}

int cmd_universal(const Globals& g, const std::string& input, Index n, Index depth, Index p) {
    const io::RunConfig cfg = g.config();
    const Signal u = read_signal(input);
    VerdictOptions opt;
    opt.certificate = certificate_options(cfg);
    opt.p = p;
    const UniversalityVerdict v = universality_verdict(u, n, depth, opt);
    emit(g, dump(with_config(io::to_json(v), cfg)));
    return v.universal ? kExitOk : kExitFalse;
}

struct CounterexampleArgs {
    std::string input;
    Index n = 0;
    Index depth = 1;
    bool l0 = false;
    std::string override_a, override_zeta, override_eta, out_dir;
};

int cmd_counterexample(const Globals& g, const CounterexampleArgs& a) {
    const io::RunConfig cfg = g.config();
    const Signal u = read_signal(a.input);
    CertificateOptions opt = certificate_options(cfg);
    if (!a.override_a.empty()) opt.A = io::matrix_from_json(read_json(a.override_a));
    if (!a.override_zeta.empty()) opt.zeta = io::vector_from_json(read_json(a.override_zeta));
    if (!a.override_eta.empty()) opt.eta = io::matrix_from_json(read_json(a.override_eta));

    const CounterexampleCertificate c =
        a.l0 ? construct_certificate_L0(u, a.n, opt) : construct_certificate(u, a.n, a.depth, opt);
    const std::string certificate = dump(io::to_json(c));
    emit(g, certificate);

    if (!a.out_dir.empty()) {
        const fs::path dir(a.out_dir);
        fs::create_directories(dir);
        const StateSpaceSystem sys = a.l0 ? StateSpaceSystem::input_state(c.A, c.B) : extend_to_output(c, u, 1, cfg.rtol).sys;
        write_file(dir / "certificate.json", certificate);
        write_file(dir / "system.json", dump(io::to_json(sys)));
        write_file(dir / "x0.json", dump(io::to_json(c.x0)));
        std::ostringstream traj;
        io::write_trajectory_csv(traj, simulate(sys, c.x0, u), config_comment(cfg));
        write_file(dir / "trajectory.csv", traj.str());
    }
    return c.verified() ? kExitOk : kExitConstruction;
}

int cmd_cloud(const Globals& g, const std::string& input, Index depth, Index samples,
              const std::vector<double>& a_range, const std::vector<double>& zeta_range) {
    const io::RunConfig cfg = g.config();
    const Signal u = read_signal(input);
    CloudOptions opt;
    opt.samples = samples;
    opt.certificate = certificate_options(cfg);
    if (!a_range.empty()) {
        detail::require(a_range.size() == 2, "--a-range needs lo,hi");
        opt.a_min = a_range[0];
        opt.a_max = a_range[1];
    }
    if (!zeta_range.empty()) {
        detail::require(zeta_range.size() == 2, "--zeta-range needs lo,hi");
        opt.zeta_min = zeta_range[0];
        opt.zeta_max = zeta_range[1];
    }
    const SystemCloud cloud = sample_system_cloud(u, depth, opt);
    if (g.format_or("csv") == "csv") {
        std::ostringstream s;
        io::write_cloud_csv(s, cloud, u.dim(), config_comment(cfg));
        emit(g, s.str());
    } else {
        io::Json points = io::Json::array();
        for (const auto& p : cloud.points)
            points.push_back({{"a", p.a}, {"b", io::to_json(p.b)}, {"x0", p.x0}, {"zeta", p.zeta},
                              {"verified", p.verified}});
        emit(g, dump(with_config({{"eta", io::to_json(cloud.eta)},
                                  {"lambda", io::to_json(cloud.lambda)},
                                  {"skipped", cloud.skipped},
                                  {"verified_fraction", cloud.verified_fraction()},
                                  {"points", std::move(points)}},
                                 cfg)));
    }
    std::cerr << cloud.points.size() << " systems, verified fraction " << cloud.verified_fraction() << '\n';
    return kExitOk;
}

int cmd_repro(const Globals& g, const std::string& example, const std::string& data_dir) {
    const io::RunConfig cfg = g.config();
    const std::string dir = data_dir + "/" + example;
    repro::Report report;
    if (example == "ex1")
        report = repro::example1(dir, cfg);
    else if (example == "ex2")
        report = repro::example2(dir, cfg);
    else
        report = repro::example3(dir, cfg);
    std::ostringstream s;
    s << "# " << config_comment(cfg) << '\n';
    repro::print(s, report);
    emit(g, s.str());
    return report.all_pass() ? kExitOk : kExitFalse;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::eigenvalue_conflict:
        case ErrorKind::near_singular:
        case ErrorKind::construction_failed:
            return kExitConstruction;
        default:
            return kExitInput;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Persistency of excitation, universality checks and counterexample construction"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    std::uint64_t seed = 0;
    app.add_option("--rtol", g.rtol, "Relative rank tolerance")->capture_default_str();
    app.add_option("--tol-cert", g.tol_cert, "Certificate annihilation tolerance")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "Random seed (falls back to PEU_SEED, then 0)");
    app.add_option("--out", g.out, "Output file (stdout when omitted)");
    app.add_option("--format", g.format, "Output format: json or csv")->check(CLI::IsMember({"json", "csv"}));

    int code = kExitOk;

    std::string pe_input;
    Index pe_k = 0;
    auto* pe = app.add_subcommand("pe", "Persistency-of-excitation report");
    pe->add_option("input", pe_input, "Signal CSV")->required();
    auto* pe_order_opt = pe->add_option("--order", pe_k, "Check a single order");

    std::string sim_system, sim_input;
    std::vector<double> sim_x0;
    auto* sim = app.add_subcommand("simulate", "Simulate a state-space system");
    sim->add_option("system", sim_system, "System JSON")->required();
    sim->add_option("input", sim_input, "Input CSV")->required();
    sim->add_option("--x0", sim_x0, "Initial state, comma separated")->delimiter(',');

    std::string chk_system, chk_data;
    Index chk_depth = 1;
    auto* chk = app.add_subcommand("check", "Check behavior equality for an input-output data set");
    chk->add_option("system", chk_system, "System JSON")->required();
    chk->add_option("data", chk_data, "CSV with u and y columns")->required();
    chk->add_option("--L", chk_depth, "Window length")->required();

    std::string uni_input;
    Index uni_n = 0, uni_depth = 1, uni_p = 1;
    auto* uni = app.add_subcommand("universal", "Decide universality of an input");
    uni->add_option("input", uni_input, "Input CSV")->required();
    uni->add_option("--n", uni_n, "State dimension")->required();
    uni->add_option("--L", uni_depth, "Window length")->required();
    uni->add_option("--p", uni_p, "Output dimension of the counterexample")->capture_default_str();

    CounterexampleArgs ce;
    auto* cex = app.add_subcommand("counterexample", "Construct a counterexample certificate");
    cex->add_option("input", ce.input, "Input CSV")->required();
    cex->add_option("--n", ce.n, "State dimension")->required();
    auto* ce_depth = cex->add_option("--L", ce.depth, "Window length");
    auto* ce_l0 = cex->add_flag("--L0", ce.l0, "State-only variant; the CSV holds u(0..T)");
    ce_depth->excludes(ce_l0);
    cex->add_option("--override-A", ce.override_a, "JSON matrix for A");
    cex->add_option("--override-zeta", ce.override_zeta, "JSON vector for zeta");
    cex->add_option("--override-eta", ce.override_eta, "JSON m x (n+L) matrix for eta");
    cex->add_option("--out-dir", ce.out_dir, "Write certificate, system, x0 and trajectory here");

    std::string cl_input;
    Index cl_depth = 1, cl_samples = 10000;
    std::vector<double> cl_a, cl_zeta;
    auto* cl = app.add_subcommand("cloud", "Sample scalar-state systems with rank-deficient data");
    cl->add_option("input", cl_input, "Input CSV")->required();
    cl->add_option("--L", cl_depth, "Window length")->required();
    cl->add_option("--samples", cl_samples, "Number of samples")->capture_default_str();
    cl->add_option("--a-range", cl_a, "lo,hi for a")->delimiter(',');
    cl->add_option("--zeta-range", cl_zeta, "lo,hi for zeta")->delimiter(',');

    std::string rp_example, rp_dir = PEU_DATA_DIR;
    auto* rp = app.add_subcommand("repro", "Reproduce a worked example against its fixtures");
    rp->add_option("example", rp_example, "ex1, ex2 or ex3")->required()->check(CLI::IsMember({"ex1", "ex2", "ex3"}));
    rp->add_option("--data-dir", rp_dir, "Fixture directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }
    if (*seed_opt) g.seed = seed;

    try {
        if (*pe)
            code = cmd_pe(g, pe_input, *pe_order_opt ? std::optional<Index>(pe_k) : std::nullopt);
        else if (*sim)
            code = cmd_simulate(g, sim_system, sim_input, sim_x0);
        else if (*chk)
            code = cmd_check(g, chk_system, chk_data, chk_depth);
        else if (*uni)
            code = cmd_universal(g, uni_input, uni_n, uni_depth, uni_p);
        else if (*cex)
            code = cmd_counterexample(g, ce);
        else if (*cl)
            code = cmd_cloud(g, cl_input, cl_depth, cl_samples, cl_a, cl_zeta);
        else if (*rp)
            code = cmd_repro(g, rp_example, rp_dir);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return code;
}
