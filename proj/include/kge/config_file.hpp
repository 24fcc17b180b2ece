#pragma once

#include <map>
#include <string>
#include <vector>

namespace kge {

// Minimal TOML-style config: [section] headers, key = value lines, # comments.
// Values are kept as trimmed raw strings (surrounding quotes stripped);
// consumers parse numbers/lists themselves.
struct ConfigFile {
    std::map<std::string, std::map<std::string, std::string>> sections;

    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_string(const std::string& text, const std::string& origin);

    const std::string* find(const std::string& section, const std::string& key) const;
};

// comma-separated list -> trimmed non-empty items
std::vector<std::string> split_list(const std::string& value);

bool parse_bool(const std::string& value);

}  // namespace kge
