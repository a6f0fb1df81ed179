#include "ivqr/milp.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace ivqr {

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_num(const std::string& tok, const char* where) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        fail(ErrorCategory::Schema, std::string("bad number '") + tok + "' in " + where);
    return v;
}

}  // namespace

std::string export_milp_sos(const Dataset& ds, double tau) {
    if (!(tau > 0.0 && tau < 1.0))
        fail(ErrorCategory::Numeric, "quantile level must lie in (0,1)");
    const int n = static_cast<int>(ds.n());
    const int k = static_cast<int>(ds.k());
    std::ostringstream os;
    os << "IVQR-MILP-SOS1 v1\n";
    os << "PROBLEM n=" << n << " k=" << k << " tau=" << num(tau) << "\n";
    os << "VARIABLES\n";
    os << "  theta[1.." << k << "] free\n";
    os << "  e[1.." << n << "] binary\n";
    os << "  r[1.." << n << "] >= 0\n";
    os << "  s[1.." << n << "] >= 0\n";
    os << "  t[1.." << k << "] >= 0\n";
    os << "OBJECTIVE\n";
    os << "  min";
    for (int l = 1; l <= k; ++l) os << (l == 1 ? " " : " + ") << "t[" << l << "]";
    os << "\n";
    os << "RESIDUAL-CONSTRAINTS\n";
    os << "# RES i: r[i] - s[i] + sum_j w_ij theta[j] = y_i\n";
    for (int i = 0; i < n; ++i) {
        os << "  RES " << (i + 1) << " w:";
        for (int j = 0; j < k; ++j) os << " " << num(ds.w(i, j));
        os << " y: " << num(ds.y(i)) << "\n";
    }
    os << "SOS1-CONSTRAINTS\n";
    os << "# at most one member of each pair is nonzero; ~e[i] denotes 1 - e[i]\n";
    for (int i = 0; i < n; ++i) {
        os << "  SOS1 r[" << (i + 1) << "] e[" << (i + 1) << "]\n";
        os << "  SOS1 s[" << (i + 1) << "] ~e[" << (i + 1) << "]\n";
    }
    os << "BAND-CONSTRAINTS\n";
    os << "# BAND l: -t[l] <= sum_i z_il (e[i] - tau) <= t[l]\n";
    for (int l = 0; l < k; ++l) {
        os << "  BAND " << (l + 1) << " z:";
        for (int i = 0; i < n; ++i) os << " " << num(ds.z(i, l));
        os << "\n";
    }
    os << "END\n";
    return os.str();
}

MilpModel parse_milp_sos(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "IVQR-MILP-SOS1 v1")
        fail(ErrorCategory::Schema, "missing IVQR-MILP-SOS1 v1 header");

    MilpModel m;
    int res_rows = 0;
    int band_rows = 0;
    int sos_rows = 0;
    bool have_problem = false;

    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (tok[0] == '#') continue;
        if (tok == "PROBLEM") {
            std::string field;
            while (ls >> field) {
                const auto eq = field.find('=');
                if (eq == std::string::npos)
                    fail(ErrorCategory::Schema, "bad PROBLEM field '" + field + "'");
                const std::string key = field.substr(0, eq);
                const std::string val = field.substr(eq + 1);
                if (key == "n")
                    m.n = static_cast<int>(parse_num(val, "PROBLEM"));
                else if (key == "k")
                    m.k = static_cast<int>(parse_num(val, "PROBLEM"));
                else if (key == "tau")
                    m.tau = parse_num(val, "PROBLEM");
                else
                    fail(ErrorCategory::Schema, "unknown PROBLEM field '" + key + "'");
            }
            if (m.n < 1 || m.k < 1) fail(ErrorCategory::Schema, "PROBLEM needs n >= 1, k >= 1");
            m.y.resize(m.n);
            m.w.resize(m.n, m.k);
            m.z.resize(m.n, m.k);
            have_problem = true;
        } else if (tok == "RES") {
            if (!have_problem) fail(ErrorCategory::Schema, "RES before PROBLEM");
            int i = 0;
            ls >> i;
            if (i < 1 || i > m.n) fail(ErrorCategory::Schema, "RES index out of range");
            std::string marker;
            ls >> marker;
            if (marker != "w:") fail(ErrorCategory::Schema, "RES expects 'w:'");
            for (int j = 0; j < m.k; ++j) {
                if (!(ls >> tok)) fail(ErrorCategory::Schema, "RES row too short");
                m.w(i - 1, j) = parse_num(tok, "RES");
            }
            ls >> marker;
            if (marker != "y:") fail(ErrorCategory::Schema, "RES expects 'y:'");
            if (!(ls >> tok)) fail(ErrorCategory::Schema, "RES row missing y");
            m.y(i - 1) = parse_num(tok, "RES");
            ++res_rows;
        } else if (tok == "BAND") {
            if (!have_problem) fail(ErrorCategory::Schema, "BAND before PROBLEM");
            int l = 0;
            ls >> l;
            if (l < 1 || l > m.k) fail(ErrorCategory::Schema, "BAND index out of range");
            std::string marker;
            ls >> marker;
            if (marker != "z:") fail(ErrorCategory::Schema, "BAND expects 'z:'");
            for (int i = 0; i < m.n; ++i) {
                if (!(ls >> tok)) fail(ErrorCategory::Schema, "BAND row too short");
                m.z(i, l - 1) = parse_num(tok, "BAND");
            }
            ++band_rows;
        } else if (tok == "SOS1") {
            ++sos_rows;
        } else if (tok == "VARIABLES" || tok == "OBJECTIVE" || tok == "RESIDUAL-CONSTRAINTS" ||
                   tok == "SOS1-CONSTRAINTS" || tok == "BAND-CONSTRAINTS" || tok == "END" ||
                   tok == "min" || tok == "theta[1.." + std::to_string(m.k) + "]") {
            // section headers and the objective/variable lines carry no data
        } else if (tok.rfind("theta[", 0) == 0 || tok.rfind("e[", 0) == 0 ||
                   tok.rfind("r[", 0) == 0 || tok.rfind("s[", 0) == 0 ||
                   tok.rfind("t[", 0) == 0) {
            // variable declarations
        } else {
            fail(ErrorCategory::Schema, "unrecognized line '" + line + "'");
        }
    }
    if (!have_problem) fail(ErrorCategory::Schema, "missing PROBLEM line");
    if (res_rows != m.n)
        fail(ErrorCategory::Schema, "expected " + std::to_string(m.n) + " RES rows, got " +
                                        std::to_string(res_rows));
    if (band_rows != m.k)
        fail(ErrorCategory::Schema, "expected " + std::to_string(m.k) + " BAND rows, got " +
                                        std::to_string(band_rows));
    if (sos_rows != 2 * m.n)
        fail(ErrorCategory::Schema, "expected " + std::to_string(2 * m.n) + " SOS1 rows, got " +
                                        std::to_string(sos_rows));
    return m;
}

}  // namespace ivqr
