#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fedssta {

// 17 significant digits: enough to round-trip any double exactly.
std::string format_g17(double v);

std::string join_csv(const std::vector<std::string>& fields);

// Writes text in binary mode so line endings are '\n' on every platform.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

std::uint64_t fnv1a64_bytes(const std::string& bytes);

}  // namespace fedssta
