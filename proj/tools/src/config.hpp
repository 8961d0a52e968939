#pragma once

// `key = value` configuration files and the run manifest written next to every output.

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace relaxor::cli {

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

/// One `key = value` per line; '#' starts a comment, blank lines are skipped.
/// Keys may be spelled with '-' or '_'. Throws InvalidConfig on malformed lines or duplicate keys.
std::vector<ConfigEntry> parse_config(const std::string& text);

std::vector<ConfigEntry> load_config(const std::string& path);

/// Where each effective parameter came from.
enum class Source { Default, Preset, Config, Flag };

const char* to_string(Source s);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::string config_path;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();  // key -> {value, source}
  nlohmann::ordered_json seeds = nlohmann::ordered_json::object();
  std::string version;
  std::vector<std::pair<std::string, std::string>> outputs;  // (role, path)
  std::string started;
  std::string finished;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();

  void set(const std::string& key, nlohmann::ordered_json value, Source src);
  void add_output(const std::string& role, const std::string& path);
  std::string to_json() const;
};

/// Current UTC time as ISO 8601 with milliseconds.
std::string utc_timestamp();

/// Writes text to a file; throws std::runtime_error when the file cannot be written.
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace relaxor::cli
