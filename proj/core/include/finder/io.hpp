#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace finder {

/// Reads a whole file as bytes. Throws IoError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes via a ".partial" sibling and renames into place, so readers never
/// observe a half-written file. Creates parent directories as needed.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

}  // namespace finder
