#pragma once

#include <filesystem>
#include <string>

namespace consensus_dx {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it into place, so readers never
/// observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace consensus_dx
