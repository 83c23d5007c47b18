#pragma once

#include <filesystem>
#include <string>

namespace omnikit {

// shortest decimal form that parses back to the same double
std::string format_double(double v);

// write to <path>.tmp then rename so readers never observe partial files
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace omnikit
