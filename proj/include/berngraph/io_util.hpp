#pragma once

#include <filesystem>
#include <string>

namespace berngraph {

// Temp file in the target directory, then rename, so readers never observe
// a partial artifact.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file_text(const std::filesystem::path& path);

} // namespace berngraph
