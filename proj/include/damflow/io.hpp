#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "damflow/data.hpp"
#include "damflow/domain.hpp"

namespace damflow {

// Decimal with 17 significant digits; round-trips every double.
std::string format_double(double x);

// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// Node dump "i,j,x1,x2,u,chi", j outer, i inner.
std::string field_csv(const Grid& grid, const SolutionField& s);
void write_field_csv(const std::filesystem::path& path, const Grid& grid, const SolutionField& s);

// Reads a node dump with at least the columns i, j, u, chi (any order, header
// required). Every node of the grid must appear exactly once.
SolutionField read_field_csv(const std::filesystem::path& path, const Grid& grid);

// Comma separated table with a header row.
std::string table_csv(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns);

}  // namespace damflow
