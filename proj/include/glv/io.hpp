#pragma once

#include <string>
#include <vector>

namespace glv::io {

/// Shortest round-trip-safe text: printf("%.17g").
std::string fmt(double v);

std::string trim(const std::string& s);

/// Splits on a delimiter, trimming each piece.
std::vector<std::string> split(const std::string& s, char delim);

/// Writes `text` to `path`, creating parent directories. Throws IoError.
void write_file(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);

}  // namespace glv::io
