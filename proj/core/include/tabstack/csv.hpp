#pragma once

#include <string>
#include <vector>

namespace tabstack::csv {

// RFC 4180: quoted fields, doubled quotes, embedded commas/newlines, CRLF.
std::vector<std::vector<std::string>> parse(const std::string& text);
std::vector<std::vector<std::string>> parse_file(const std::string& path);

std::string escape_field(const std::string& field);
std::string format_row(const std::vector<std::string>& fields);

// Writes header + rows; creates parent directories.
void write_file(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows);

}  // namespace tabstack::csv
