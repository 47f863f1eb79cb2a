#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace article::io {

// RFC 4180 style CSV. read_csv returns all records including the header row.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

std::string csv_escape(const std::string& field);

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& body);

// fixed-point formatting used by all report writers (3 decimals per the
// report convention; full precision lives in the JSON artifacts)
std::string fmt3(double v);
std::string fmt_full(double v);

}  // namespace article::io
