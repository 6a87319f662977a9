#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "kgpoison/error.hpp"

namespace kgp {

// Flat key = value text with optional [section] headers. Sections only group
// keys for readability; key names are global and must be unique. '#' and ';'
// start comments.
inline std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open config " + path.string());
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']', ErrorCode::MalformedLine,
              path.string() + ":" + std::to_string(line_no) + " bad section header");
      continue;
    }
    auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::MalformedLine,
            path.string() + ":" + std::to_string(line_no) + " expected key = value");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    require(!key.empty(), ErrorCode::MalformedLine,
            path.string() + ":" + std::to_string(line_no) + " empty key");
    for (const auto& [k, v] : out)
      require(k != key, ErrorCode::InvalidConfig,
              path.string() + ":" + std::to_string(line_no) + " duplicate key '" + key + "'");
    out.emplace_back(key, value);
  }
  return out;
}

// Turns config entries into "--key value" arguments. Placed before the real
// command-line arguments so that explicit flags override the file.
inline std::vector<std::string> config_to_args(
    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::vector<std::string> args;
  for (const auto& [k, v] : entries) {
    args.push_back("--" + k);
    args.push_back(v);
  }
  return args;
}

}  // namespace kgp
