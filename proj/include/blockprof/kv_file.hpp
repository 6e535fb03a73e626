#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace blockprof {

/// `key = value` lines; blank lines and `#` comments are skipped.
struct KeyValueLine {
  std::string key;
  std::string value;
  int line = 0;
};

/// Throws ConfigError for a line without '=' or with an empty key.
std::vector<KeyValueLine> parseKeyValues(std::string_view text);
std::vector<KeyValueLine> readKeyValueFile(const std::filesystem::path& path);

void writeKeyValueFile(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, std::string>>& entries);

std::vector<std::string> splitList(std::string_view text, char sep = ',');
std::string joinList(const std::vector<std::string>& items, char sep = ',');

}  // namespace blockprof
