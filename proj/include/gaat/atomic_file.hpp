#pragma once

#include <filesystem>
#include <string_view>

namespace gaat {

/// Writes to a sibling temp file then renames over `path`. Throws StorageError.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace gaat
