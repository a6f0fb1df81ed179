#include "ivqr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace ivqr {

const char* category_name(ErrorCategory cat) noexcept {
    switch (cat) {
        case ErrorCategory::Usage: return "usage";
        case ErrorCategory::Schema: return "schema";
        case ErrorCategory::Numeric: return "numeric";
        case ErrorCategory::Io: return "io";
        case ErrorCategory::Unsupported: return "unsupported";
    }
    return "unknown";
}

namespace {

void check_finite(const Eigen::Ref<const Eigen::MatrixXd>& m, const char* what) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (!std::isfinite(m(i, j)))
                fail(ErrorCategory::Numeric,
                     std::string(what) + " has a non-finite entry at row " +
                         std::to_string(i + 1) + ", column " + std::to_string(j + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim ASCII whitespace
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_cell(const std::string& cell, Eigen::Index row, Eigen::Index col) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        fail(ErrorCategory::Schema, "non-numeric cell '" + cell + "' at data row " +
                                        std::to_string(row + 1) + ", column " +
                                        std::to_string(col + 1));
    return v;
}

}  // namespace

Dataset make_dataset(Eigen::VectorXd y, Eigen::MatrixXd w, Eigen::MatrixXd z) {
    const Eigen::Index n = y.size();
    const Eigen::Index k = w.cols();
    if (k < 1) fail(ErrorCategory::Numeric, "dataset needs at least one regressor");
    if (w.rows() != n) fail(ErrorCategory::Numeric, "y and w row counts differ");
    if (z.rows() != n || z.cols() != k)
        fail(ErrorCategory::Numeric, "z and w must have identical shape (just-identified)");
    if (n <= k)
        fail(ErrorCategory::Numeric, "n <= k: need at least k+1 observations, got n=" +
                                         std::to_string(n) + ", k=" + std::to_string(k));
    check_finite(y, "y");
    check_finite(w, "w");
    check_finite(z, "z");
    return Dataset{std::move(y), std::move(w), std::move(z)};
}

Dataset make_qr_dataset(Eigen::VectorXd y, Eigen::MatrixXd w) {
    Eigen::MatrixXd z = w;
    return make_dataset(std::move(y), std::move(w), std::move(z));
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::Io, "cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) fail(ErrorCategory::Schema, "empty file '" + path + "'");
    if (!line.empty() && line.front() == '\xEF' && line.size() >= 3) line = line.substr(3);  // BOM

    const auto header = split_csv_line(line);
    if (header.empty() || header[0] != "y")
        fail(ErrorCategory::Schema, "first column must be 'y', got '" +
                                        (header.empty() ? std::string() : header[0]) + "'");

    // y, w1..wk, optionally z1..zk, in that order
    std::size_t pos = 1;
    Eigen::Index k = 0;
    while (pos < header.size() && header[pos] == "w" + std::to_string(k + 1)) {
        ++k;
        ++pos;
    }
    if (k == 0) fail(ErrorCategory::Schema, "missing column 'w1'");
    bool has_z = false;
    if (pos < header.size()) {
        Eigen::Index kz = 0;
        while (pos < header.size() && header[pos] == "z" + std::to_string(kz + 1)) {
            ++kz;
            ++pos;
        }
        if (pos != header.size())
            fail(ErrorCategory::Schema, "unexpected column '" + header[pos] + "'");
        if (kz != k)
            fail(ErrorCategory::Schema, "found " + std::to_string(kz) + " z columns, expected " +
                                            std::to_string(k));
        has_z = true;
    }

    std::vector<double> ybuf;
    std::vector<double> wbuf;
    std::vector<double> zbuf;
    Eigen::Index row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv_line(line);
        if (static_cast<Eigen::Index>(cells.size()) != static_cast<Eigen::Index>(header.size()))
            fail(ErrorCategory::Schema, "data row " + std::to_string(row + 1) + " has " +
                                            std::to_string(cells.size()) + " cells, expected " +
                                            std::to_string(header.size()));
        ybuf.push_back(parse_cell(cells[0], row, 0));
        for (Eigen::Index j = 0; j < k; ++j) wbuf.push_back(parse_cell(cells[1 + j], row, 1 + j));
        if (has_z)
            for (Eigen::Index j = 0; j < k; ++j)
                zbuf.push_back(parse_cell(cells[1 + k + j], row, 1 + k + j));
        ++row;
    }
    const Eigen::Index n = row;
    Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ybuf.data(), n);
    Eigen::MatrixXd w(n, k);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < k; ++j) w(i, j) = wbuf[static_cast<std::size_t>(i * k + j)];
    Eigen::MatrixXd z;
    if (has_z) {
        z.resize(n, k);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < k; ++j)
                z(i, j) = zbuf[static_cast<std::size_t>(i * k + j)];
    } else {
        z = w;
    }
    return make_dataset(std::move(y), std::move(w), std::move(z));
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCategory::Io, "cannot write '" + path + "'");
    const bool qr = ds.classical_qr();
    out << "y";
    for (Eigen::Index j = 0; j < ds.k(); ++j) out << ",w" << (j + 1);
    if (!qr)
        for (Eigen::Index j = 0; j < ds.k(); ++j) out << ",z" << (j + 1);
    out << "\n";
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        put(ds.y(i));
        for (Eigen::Index j = 0; j < ds.k(); ++j) {
            out << ',';
            put(ds.w(i, j));
        }
        if (!qr)
            for (Eigen::Index j = 0; j < ds.k(); ++j) {
                out << ',';
                put(ds.z(i, j));
            }
        out << "\n";
    }
}

DatasetDiagnostics validate(const Dataset& ds) {
    DatasetDiagnostics d;
    const Eigen::Index n = ds.n();
    const Eigen::Index k = ds.k();

    d.zw_moment = (ds.z.transpose() * ds.w) / static_cast<double>(n);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(d.zw_moment);
    d.rank = lu.rank();
    d.full_rank = (d.rank == k);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(d.zw_moment);
    const auto& sv = svd.singularValues();
    d.zw_condition = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1)
                                           : std::numeric_limits<double>::infinity();

    double m = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        m = std::max({m, ds.w.row(i).norm(), ds.z.row(i).norm()});
    d.support_bound = m;

    // distinct directions w_i / |w_i| up to a small tolerance
    std::vector<Eigen::VectorXd> dirs;
    dirs.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double nw = ds.w.row(i).norm();
        if (nw == 0.0) continue;
        dirs.push_back(ds.w.row(i).transpose() / nw);
    }
    std::sort(dirs.begin(), dirs.end(), [](const auto& a, const auto& b) {
        for (Eigen::Index j = 0; j < a.size(); ++j) {
            if (a(j) < b(j)) return true;
            if (a(j) > b(j)) return false;
        }
        return false;
    });
    int s = 0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        if (i == 0 || (dirs[i] - dirs[i - 1]).lpNorm<Eigen::Infinity>() > 1e-12) ++s;
    }
    d.distinct_directions = s;
    return d;
}

}  // namespace ivqr
