#pragma once

#include <filesystem>
#include <string>

namespace exot {

/// Shortest decimal text that reads back to the same double; integral
/// values keep a trailing ".0".
std::string format_double(double x);

/// Writes `content` to a temporary sibling of `path` and renames it into
/// place, so readers never observe a partial file. Throws exot::Error.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace exot
