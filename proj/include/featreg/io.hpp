#pragma once

#include <string>

namespace featreg::io {

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

/// Creates `dir` and its parents; throws DataError if it cannot be written.
void ensure_directory(const std::string& dir);

}  // namespace featreg::io
