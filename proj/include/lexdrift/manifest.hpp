#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace lexdrift {

/// Provenance record written next to every command's outputs. Identical
/// inputs and parameters give a byte-identical manifest apart from the
/// timestamp, which honours SOURCE_DATE_EPOCH when set.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> input_digests;  // path -> sha256
  std::map<std::string, std::string> parameters;
  std::vector<std::string> outputs;
  std::vector<std::string> notes;
  std::string tool_version;
  std::string timestamp;

  void add_input(const std::filesystem::path& path);
  std::string to_json() const;
  void write(const std::filesystem::path& dir) const;
};

std::string current_timestamp();

}  // namespace lexdrift
