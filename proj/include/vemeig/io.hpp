#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace vemeig {

/// Decimal form with 17 significant digits ("%.17g"); exact round trip for doubles.
std::string format_double(double v);

/// Writes to a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace vemeig
