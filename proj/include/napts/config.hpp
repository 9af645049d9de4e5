#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace napts {

/// Entries of a flat `key = value` file in file order. Blank lines and lines
/// starting with '#' or ';' are skipped; surrounding whitespace and matching
/// quotes around the value are stripped. Throws on a line without '='.
std::vector<std::pair<std::string, std::string>> parse_flat_config(std::istream& in);
std::vector<std::pair<std::string, std::string>> read_flat_config(
    const std::filesystem::path& path);

}  // namespace napts
