#pragma once

// Plot-data CSV: one header row naming columns with units, then numeric rows.
// Numbers use the shortest representation that reads back to the same double,
// independent of the C locale.

#include <filesystem>
#include <string>
#include <vector>

namespace eitlock::harness {

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row);
};

std::string format_double(double x);
double parse_double(std::string_view text);  // throws InvalidArgument

std::string to_csv(const Table& table);
Table from_csv(const std::string& text);

// Write through a temporary file in the same directory and rename on success.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

void emit_plotdata(const Table& table, const std::filesystem::path& path);
Table read_plotdata(const std::filesystem::path& path);

}  // namespace eitlock::harness
