#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cmfilter/model.hpp"

namespace cmf {

// Shortest representation that parses back to the same double.
std::string format_double(double v);
std::string format_list(const std::vector<double>& v, char sep = ',');

// Strict parse of the whole token; throws ParseError carrying row.
double parse_double(std::string_view token, long row);
long parse_long(std::string_view token, long row);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

using Metadata = std::vector<std::pair<std::string, std::string>>;

void write_metadata(std::ostream& os, const Metadata& meta);

// Lines "# key=value" before the header; other comment lines are ignored.
struct CsvTable {
    std::map<std::string, std::string> meta;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<long> row_lines;  // 1-based file line of each row
    std::vector<std::string> labels;  // first column text when it is not numeric
};

// label_column: first column may hold a non-numeric label (kept in labels).
CsvTable read_csv(std::istream& is, bool label_column = false);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const Metadata& meta);
// Validates M and N when they are positive.
Trajectory read_trajectory_csv(std::istream& is, int M, int N);

}  // namespace cmf
