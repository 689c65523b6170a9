#pragma once

// CSV and JSON interchange for signals, systems, reports and certificates.
//
// Signal CSV: header `t,v1,...,vdim`, one sample per row, '#' lines are
// comments. Matrices in JSON are row-major nested arrays.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "peu/adversary.hpp"
#include "peu/flemma.hpp"
#include "peu/lti.hpp"
#include "peu/signals.hpp"
#include "peu/universality.hpp"

namespace peu::io {

using Json = nlohmann::ordered_json;

struct RunConfig {
    double rtol = kDefaultRtol;
    double tol_cert = kDefaultTolCert;
    std::uint64_t seed = 0;
};

inline Json to_json(const RunConfig& c) { return {{"rtol", c.rtol}, {"tol_cert", c.tol_cert}, {"seed", c.seed}}; }

// JSON has no infinities; non-finite reals are written as null and read back
// as +inf.
inline Json real(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }
inline double real_from(const Json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

inline Json to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json to_json(const Vector& v) {
    Json out = Json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline Matrix matrix_from_json(const Json& j) {
    detail::require(j.is_array(), "matrix must be a JSON array of rows");
    if (j.empty()) return Matrix(0, 0);
    const auto rows = static_cast<Index>(j.size());
    detail::require(j[0].is_array(), "matrix rows must be arrays");
    const auto cols = static_cast<Index>(j[0].size());
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const Json& row = j[static_cast<std::size_t>(i)];
        detail::require(row.is_array() && static_cast<Index>(row.size()) == cols, "ragged matrix rows");
        for (Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
    return m;
}

/// Accepts a flat array or a single-column nested array.
inline Vector vector_from_json(const Json& j) {
    detail::require(j.is_array(), "vector must be a JSON array");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (j[i].is_array()) {
            detail::require(j[i].size() == 1, "nested vector entries must have one element");
            v(static_cast<Index>(i)) = j[i][0].get<double>();
        } else {
            v(static_cast<Index>(i)) = j[i].get<double>();
        }
    }
    return v;
}

inline Json to_json(const RankReport& r) {
    return {{"rows", r.rows},
            {"cols", r.cols},
            {"rank", r.rank},
            {"singular_values", to_json(r.singular_values)},
            {"tolerance_used", r.tolerance_used},
            {"full_row_rank", r.full_row_rank},
            {"full_col_rank", r.full_col_rank}};
}

inline RankReport rank_report_from_json(const Json& j) {
    RankReport r;
    r.rows = j.at("rows").get<Index>();
    r.cols = j.at("cols").get<Index>();
    r.rank = j.at("rank").get<Index>();
    r.singular_values = vector_from_json(j.at("singular_values"));
    r.tolerance_used = j.at("tolerance_used").get<double>();
    r.full_row_rank = j.at("full_row_rank").get<bool>();
    r.full_col_rank = j.at("full_col_rank").get<bool>();
    return r;
}

inline Json to_json(const RootSet& s) {
    Json roots = Json::array();
    for (const auto& z : s.roots) roots.push_back({z.real(), z.imag()});
    return {{"cluster_radius", s.cluster_radius}, {"roots", std::move(roots)}};
}

inline RootSet root_set_from_json(const Json& j) {
    RootSet s;
    s.cluster_radius = j.at("cluster_radius").get<double>();
    for (const auto& z : j.at("roots")) s.roots.emplace_back(z.at(0).get<double>(), z.at(1).get<double>());
    return s;
}

inline Json to_json(const PEReport& r) {
    Json orders = Json::array();
    for (const auto& [k, report] : r.per_order) orders.push_back({{"k", k}, {"report", to_json(report)}});
    return {{"max_order", r.max_order}, {"per_order", std::move(orders)}};
}

inline Json to_json(const StateSpaceSystem& s) {
    return {{"n", s.n()},          {"m", s.m()},          {"p", s.p()},          {"A", to_json(s.A)},
            {"B", to_json(s.B)}, {"C", to_json(s.C)}, {"D", to_json(s.D)}};
}

inline StateSpaceSystem system_from_json(const Json& j) {
    const auto n = j.at("n").get<Index>(), m = j.at("m").get<Index>(), p = j.at("p").get<Index>();
    detail::require(n >= 1 && m >= 1 && p >= 1, "system dimensions must be positive");
    auto read = [&](const char* key, Index rows, Index cols) {
        Matrix x = matrix_from_json(j.at(key));
        detail::require(x.rows() == rows && x.cols() == cols,
                        std::string(key) + " has the wrong shape for (n, m, p)");
        return x;
    };
    return {read("A", n, n), read("B", n, m), read("C", p, n), read("D", p, m)};
}

inline Json to_json(const LemmaCheck& c) {
    return {{"L", c.L},
            {"behavior_equal", c.behavior_equal},
            {"inclusion_holds", c.inclusion_holds},
            {"data_span_dim", c.data_span_dim},
            {"behavior_dim", c.behavior_dim},
            {"rank_condition", to_json(c.rank_condition)},
            {"x0", to_json(c.x0)},
            {"trajectory_residual", c.trajectory_residual}};
}

inline Json to_json(const CertificateResiduals& r) {
    return {{"kernel", r.kernel},
            {"eta_snap", r.eta_snap},
            {"recursion", r.recursion},
            {"closed_form", r.closed_form},
            {"xi_orthogonality", r.xi_orthogonality},
            {"spectral_distance", real(r.spectral_distance)},
            {"annihilation_tolerance", r.annihilation_tolerance}};
}

inline ConstructionPath path_from_string(const std::string& s) {
    for (auto p : {ConstructionPath::jordan_scan, ConstructionPath::override, ConstructionPath::short_data,
                   ConstructionPath::single_input_family, ConstructionPath::family_sample})
        if (s == to_string(p)) return p;
    throw Error(ErrorKind::invalid_input, "unknown construction path '" + s + "'");
}

inline Json to_json(const CounterexampleCertificate& c) {
    Json e = Json::array();
    for (const auto& block : c.E) e.push_back(to_json(block));
    Json eta = to_json(c.eta);
    return {{"n", c.n},
            {"m", c.m},
            {"L", c.L},
            {"T", c.T},
            {"path", to_string(c.path)},
            {"short_data_case", c.short_data_case},
            {"eta", std::move(eta)},
            {"lambda", to_json(c.lambda)},
            {"lambda0", c.lambda0 ? Json(*c.lambda0) : Json(nullptr)},
            {"A", to_json(c.A)},
            {"zeta", to_json(c.zeta)},
            {"E", std::move(e)},
            {"B", to_json(c.B)},
            {"x0", to_json(c.x0)},
            {"states", to_json(c.states)},
            {"xi", to_json(c.xi)},
            {"v", to_json(c.v)},
            {"w", to_json(c.w)},
            {"residual_annihilation", c.residual_annihilation},
            {"rank_deficit_confirmed", c.rank_deficit_confirmed},
            {"controllable", c.controllable},
            {"stacked_rank", to_json(c.stacked_rank)},
            {"verified", c.verified()},
            {"seed", c.seed},
            {"rtol", c.rtol},
            {"tol_cert", c.tol_cert},
            {"cluster_radius", c.cluster_radius},
            {"residuals", to_json(c.residuals)}};
}

inline CounterexampleCertificate certificate_from_json(const Json& j) {
    CounterexampleCertificate c;
    c.n = j.at("n").get<Index>();
    c.m = j.at("m").get<Index>();
    c.L = j.at("L").get<Index>();
    c.T = j.at("T").get<Index>();
    c.path = path_from_string(j.at("path").get<std::string>());
    c.short_data_case = j.at("short_data_case").get<bool>();
    c.eta = matrix_from_json(j.at("eta"));
    if (c.eta.rows() == 0) c.eta.resize(c.m, 0);
    c.lambda = root_set_from_json(j.at("lambda"));
    if (!j.at("lambda0").is_null()) c.lambda0 = j.at("lambda0").get<double>();
    c.A = matrix_from_json(j.at("A"));
    c.zeta = vector_from_json(j.at("zeta"));
    for (const auto& block : j.at("E")) c.E.push_back(matrix_from_json(block));
    c.B = matrix_from_json(j.at("B"));
    c.x0 = vector_from_json(j.at("x0"));
    c.states = matrix_from_json(j.at("states"));
    c.xi = vector_from_json(j.at("xi"));
    c.v = vector_from_json(j.at("v"));
    c.w = vector_from_json(j.at("w"));
    c.residual_annihilation = j.at("residual_annihilation").get<double>();
    c.rank_deficit_confirmed = j.at("rank_deficit_confirmed").get<bool>();
    c.controllable = j.at("controllable").get<bool>();
    c.stacked_rank = rank_report_from_json(j.at("stacked_rank"));
    c.seed = j.at("seed").get<std::uint64_t>();
    c.rtol = j.at("rtol").get<double>();
    c.tol_cert = j.at("tol_cert").get<double>();
    c.cluster_radius = j.at("cluster_radius").get<double>();
    const Json& r = j.at("residuals");
    c.residuals.kernel = r.at("kernel").get<double>();
    c.residuals.eta_snap = r.at("eta_snap").get<double>();
    c.residuals.recursion = r.at("recursion").get<double>();
    c.residuals.closed_form = r.at("closed_form").get<double>();
    c.residuals.xi_orthogonality = r.at("xi_orthogonality").get<double>();
    c.residuals.spectral_distance = real_from(r.at("spectral_distance"));
    c.residuals.annihilation_tolerance = r.at("annihilation_tolerance").get<double>();
    return c;
}

inline Json to_json(const OutputCounterexample& o) {
    return {{"system", to_json(o.sys)},
            {"annihilator", to_json(o.annihilator)},
            {"annihilation_residual", o.annihilation_residual},
            {"annihilation_tolerance", o.annihilation_tolerance},
            {"witness_x0", to_json(o.witness_x0)},
            {"witness_y", to_json(o.witness_y.samples())},
            {"separation_value", o.separation_value},
            {"behavior_check", to_json(o.behavior_check)}};
}

inline Json to_json(const UniversalityVerdict& v) {
    Json out = {{"universal", v.universal},
                {"pe_order_needed", v.pe_order_needed},
                {"pe_report", to_json(v.pe_report)},
                {"counterexample", nullptr},
                {"output_counterexample", nullptr}};
    if (v.counterexample) out["counterexample"] = to_json(*v.counterexample);
    if (v.output_counterexample) out["output_counterexample"] = to_json(*v.output_counterexample);
    return out;
}

// ---------------------------------------------------------------------------
// CSV

/// Shortest text that parses back to the same double; locale independent.
inline std::string format_real(double x) {
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, x);
        double back = 0.0;
        std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
        if (back == x) break;
    }
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::optional<double>>> rows;  // empty field -> nullopt

    Index column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<Index>(i);
        return -1;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = detail::trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto fields = detail::split(view);
        if (table.header.empty()) {
            for (auto f : fields) table.header.emplace_back(f);
            continue;
        }
        peu::detail::require(fields.size() == table.header.size(),
                             "CSV line " + std::to_string(line_no) + " has the wrong number of fields");
        std::vector<std::optional<double>> row;
        for (auto f : fields) {
            if (f.empty()) {
                row.emplace_back(std::nullopt);
                continue;
            }
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
            peu::detail::require(ec == std::errc() && ptr == f.data() + f.size() && std::isfinite(value),
                                 "CSV line " + std::to_string(line_no) + ": '" + std::string(f) +
                                     "' is not a finite number");
            row.emplace_back(value);
        }
        table.rows.push_back(std::move(row));
    }
    peu::detail::require(!table.header.empty(), "CSV has no header row");
    return table;
}

inline void write_csv(std::ostream& out, const CsvTable& table, const std::string& comment = {}) {
    if (!comment.empty()) out << "# " << comment << '\n';
    for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            if (row[i]) out << format_real(*row[i]);
        }
        out << '\n';
    }
}

/// Columns whose header is `prefix` followed by 1, 2, ... in order.
inline std::vector<Index> prefixed_columns(const CsvTable& table, const std::string& prefix) {
    std::vector<Index> cols;
    for (Index k = 1;; ++k) {
        const Index c = table.column(prefix + std::to_string(k));
        if (c < 0) break;
        cols.push_back(c);
    }
    return cols;
}

/// Rows where every listed column is present; t must count 0, 1, ... when a
/// t column exists.
inline Matrix gather(const CsvTable& table, const std::vector<Index>& cols) {
    peu::detail::require(!cols.empty(), "CSV lacks the expected signal columns");
    const Index t_col = table.column("t");
    std::vector<std::vector<double>> samples;
    for (const auto& row : table.rows) {
        bool complete = true;
        for (Index c : cols) complete = complete && row[static_cast<std::size_t>(c)].has_value();
        if (!complete) continue;
        if (t_col >= 0) {
            const auto t = row[static_cast<std::size_t>(t_col)];
            peu::detail::require(t && *t == static_cast<double>(samples.size()),
                                 "t column must count 0, 1, 2, ... without gaps");
        }
        std::vector<double> s;
        for (Index c : cols) s.push_back(*row[static_cast<std::size_t>(c)]);
        samples.push_back(std::move(s));
    }
    peu::detail::require(!samples.empty(), "CSV has no complete samples");
    return Signal::from_samples(samples).samples();
}

/// Signal from a `t,<p>1,...` CSV. The prefix defaults to whatever letter the
/// second header field uses (u, x, y, v, ...).
inline Signal read_signal_csv(std::istream& in, std::string prefix = {}) {
    const CsvTable table = read_csv(in);
    if (prefix.empty()) {
        peu::detail::require(table.header.size() >= 2 && table.header[0] == "t",
                             "signal CSV header must start with t");
        prefix = table.header[1].substr(0, table.header[1].find_first_of("0123456789"));
    }
    return Signal(gather(table, prefixed_columns(table, prefix)));
}

inline void write_signal_csv(std::ostream& out, const Signal& s, const std::string& prefix = "u",
                             const std::string& comment = {}) {
    CsvTable table;
    table.header.push_back("t");
    for (Index i = 1; i <= s.dim(); ++i) table.header.push_back(prefix + std::to_string(i));
    for (Index t = 0; t < s.length(); ++t) {
        std::vector<std::optional<double>> row{static_cast<double>(t)};
        for (Index i = 0; i < s.dim(); ++i) row.emplace_back(s.samples()(i, t));
        table.rows.push_back(std::move(row));
    }
    write_csv(out, table, comment);
}

/// Columns t,u*,x*,y*; T + 1 rows, the last one carrying only x(T).
inline void write_trajectory_csv(std::ostream& out, const Trajectory& tr, const std::string& comment = {}) {
    CsvTable table;
    table.header.push_back("t");
    for (Index i = 1; i <= tr.u.dim(); ++i) table.header.push_back("u" + std::to_string(i));
    for (Index i = 1; i <= tr.x.dim(); ++i) table.header.push_back("x" + std::to_string(i));
    for (Index i = 1; i <= tr.y.dim(); ++i) table.header.push_back("y" + std::to_string(i));
    const Index length = tr.u.length();
    for (Index t = 0; t <= length; ++t) {
        std::vector<std::optional<double>> row{static_cast<double>(t)};
        for (Index i = 0; i < tr.u.dim(); ++i)
            row.emplace_back(t < length ? std::optional<double>(tr.u.samples()(i, t)) : std::nullopt);
        for (Index i = 0; i < tr.x.dim(); ++i) row.emplace_back(tr.x.samples()(i, t));
        for (Index i = 0; i < tr.y.dim(); ++i)
            row.emplace_back(t < length ? std::optional<double>(tr.y.samples()(i, t)) : std::nullopt);
        table.rows.push_back(std::move(row));
    }
    write_csv(out, table, comment);
}

inline Trajectory read_trajectory_csv(std::istream& in) {
    const CsvTable table = read_csv(in);
    Signal u(gather(table, prefixed_columns(table, "u")));
    Signal x(gather(table, prefixed_columns(table, "x")));
    Signal y(gather(table, prefixed_columns(table, "y")));
    peu::detail::require(x.length() == u.length() + 1 && y.length() == u.length(),
                         "trajectory CSV must hold T inputs/outputs and T + 1 states");
    return {std::move(u), std::move(x), std::move(y)};
}

inline void write_cloud_csv(std::ostream& out, const SystemCloud& cloud, Index m, const std::string& comment = {}) {
    CsvTable table;
    table.header.push_back("a");
    for (Index i = 1; i <= m; ++i) table.header.push_back("b" + std::to_string(i));
    table.header.push_back("x0");
    table.header.push_back("verified");
    for (const auto& p : cloud.points) {
        std::vector<std::optional<double>> row{p.a};
        for (Index i = 0; i < m; ++i) row.emplace_back(p.b(i));
        row.emplace_back(p.x0);
        row.emplace_back(p.verified ? 1.0 : 0.0);
        table.rows.push_back(std::move(row));
    }
    write_csv(out, table, comment);
}

inline std::vector<CloudPoint> read_cloud_csv(std::istream& in) {
    const CsvTable table = read_csv(in);
    const auto b_cols = prefixed_columns(table, "b");
    const Index a_col = table.column("a"), x_col = table.column("x0"), v_col = table.column("verified");
    peu::detail::require(a_col >= 0 && x_col >= 0 && v_col >= 0 && !b_cols.empty(), "not a cloud CSV");
    std::vector<CloudPoint> points;
    for (const auto& row : table.rows) {
        auto get = [&](Index c) {
            peu::detail::require(row[static_cast<std::size_t>(c)].has_value(), "cloud CSV has an empty field");
            return *row[static_cast<std::size_t>(c)];
        };
        CloudPoint p;
        p.a = get(a_col);
        p.b.resize(static_cast<Index>(b_cols.size()));
        for (std::size_t i = 0; i < b_cols.size(); ++i) p.b(static_cast<Index>(i)) = get(b_cols[i]);
        p.x0 = get(x_col);
        p.verified = get(v_col) != 0.0;
        points.push_back(std::move(p));
    }
    return points;
}

}  // namespace peu::io
