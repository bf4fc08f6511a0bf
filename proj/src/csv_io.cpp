#include "cmfilter/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "cmfilter/errors.hpp"

namespace cmf {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_list(const std::vector<double>& v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += format_double(v[i]);
    }
    return out;
}

std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view token, long row) {
    token = trim(token);
    if (token == "inf") return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size())
        throw ParseError("row " + std::to_string(row) + ": cannot parse number '" +
                             std::string(token) + "'",
                         row);
    return v;
}

long parse_long(std::string_view token, long row) {
    token = trim(token);
    long v = 0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size())
        throw ParseError("row " + std::to_string(row) + ": cannot parse integer '" +
                             std::string(token) + "'",
                         row);
    return v;
}

void write_metadata(std::ostream& os, const Metadata& meta) {
    for (const auto& [k, v] : meta) os << "# " << k << "=" << v << "\n";
}

CsvTable read_csv(std::istream& is, bool label_column) {
    CsvTable tab;
    std::string line;
    long lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string_view sv = trim(line);
        if (sv.empty()) continue;
        if (sv.front() == '#') {
            auto body = trim(sv.substr(1));
            auto eq = body.find('=');
            if (eq != std::string_view::npos)
                tab.meta[std::string(trim(body.substr(0, eq)))] = std::string(trim(body.substr(eq + 1)));
            continue;
        }
        if (tab.header.empty()) {
            tab.header = split(sv, ',');
            continue;
        }
        auto cells = split(sv, ',');
        if (cells.size() != tab.header.size())
            throw ParseError("row " + std::to_string(lineno) + ": expected " +
                                 std::to_string(tab.header.size()) + " fields, found " +
                                 std::to_string(cells.size()),
                             lineno);
        std::vector<double> vals;
        std::size_t first = 0;
        if (label_column) {
            tab.labels.push_back(cells[0]);
            first = 1;
        }
        for (std::size_t i = first; i < cells.size(); ++i) vals.push_back(parse_double(cells[i], lineno));
        tab.rows.push_back(std::move(vals));
        tab.row_lines.push_back(lineno);
    }
    if (tab.header.empty()) throw ParseError("missing header row", lineno);
    return tab;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const Metadata& meta) {
    const int M = traj.states.empty() ? 0 : static_cast<int>(traj.states[0].size());
    const int N = traj.observations.empty() ? 0 : static_cast<int>(traj.observations[0].size());
    Metadata m = meta;
    m.emplace_back("seed", std::to_string(traj.seed));
    m.emplace_back("M", std::to_string(M));
    m.emplace_back("N", std::to_string(N));
    m.emplace_back("T", std::to_string(traj.T()));
    write_metadata(os, m);
    os << "t";
    for (int i = 0; i < M; ++i) os << ",x_" << i;
    for (int j = 0; j < N; ++j) os << ",y_" << j;
    os << "\n";
    for (std::size_t t = 0; t < traj.states.size(); ++t) {
        os << t;
        for (int i = 0; i < M; ++i) os << "," << format_double(traj.states[t][i]);
        for (int j = 0; j < N; ++j) os << "," << format_double(traj.observations[t][j]);
        os << "\n";
    }
}

Trajectory read_trajectory_csv(std::istream& is, int M, int N) {
    CsvTable tab = read_csv(is);
    int fm = 0, fn = 0;
    for (const auto& h : tab.header) {
        if (h.rfind("x_", 0) == 0) ++fm;
        else if (h.rfind("y_", 0) == 0) ++fn;
    }
    if (tab.header.empty() || tab.header[0] != "t" ||
        static_cast<int>(tab.header.size()) != 1 + fm + fn)
        throw ParseError("trajectory header must be t,x_0..,y_0..", 0);
    if ((M > 0 && fm != M) || (N > 0 && fn != N))
        throw ConfigError("trajectory dimensions (M=" + std::to_string(fm) + ", N=" +
                          std::to_string(fn) + ") do not match model (M=" + std::to_string(M) +
                          ", N=" + std::to_string(N) + ")");
    Trajectory tr;
    if (auto it = tab.meta.find("seed"); it != tab.meta.end())
        tr.seed = std::stoull(it->second);
    for (std::size_t r = 0; r < tab.rows.size(); ++r) {
        const auto& row = tab.rows[r];
        if (row[0] != static_cast<double>(r))
            throw ParseError("row " + std::to_string(tab.row_lines[r]) + ": time index out of sequence",
                             tab.row_lines[r]);
        Vector x(fm), y(fn);
        for (int i = 0; i < fm; ++i) x[i] = row[1 + i];
        for (int j = 0; j < fn; ++j) y[j] = row[1 + fm + j];
        if (!x.allFinite() || !y.allFinite())
            throw ParseError("row " + std::to_string(tab.row_lines[r]) + ": non-finite value",
                             tab.row_lines[r]);
        tr.states.push_back(std::move(x));
        tr.observations.push_back(std::move(y));
    }
    return tr;
}

}  // namespace cmf
