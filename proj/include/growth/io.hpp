#pragma once

#include <string>
#include <string_view>

namespace growth::io {

// Shortest decimal form that round-trips (17 significant digits).
std::string format_double(double v);

// Writes via a temporary file in the same directory, then renames.
void write_atomic(const std::string& path, std::string_view content);

std::string read_file(const std::string& path);

void ensure_directory(const std::string& path);

}  // namespace growth::io
